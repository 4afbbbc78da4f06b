#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lapis/analyzer.hpp"
#include "lapis/converter.hpp"
#include "lapis/emitter.hpp"
#include "lapis/openapi.hpp"
#include "lapis/parser.hpp"
#include "lapis/tokenmeter.hpp"

namespace lapis::cli {

namespace {

namespace fs = std::filesystem;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input problems already reported on stderr.
struct Reported {};

struct Streams {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

std::string display_name(const std::string& path) { return path == "-" ? "<stdin>" : path; }

std::string read_input(const std::string& path, std::istream& in) {
    std::ostringstream ss;
    if (path == "-") {
        ss << in.rdbuf();
        if (in.bad()) throw IoError("cannot read stdin");
        return ss.str();
    }
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError(fmt::format("cannot open '{}'", path));
    ss << file.rdbuf();
    return ss.str();
}

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        out.flush();
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file || !(file << text) || !file.flush()) throw IoError(fmt::format("cannot write '{}'", path));
}

std::optional<SourceFormat> format_hint(const std::string& path) {
    auto ext = fs::path(path).extension().string();
    if (ext == ".json") return SourceFormat::json;
    if (ext == ".yaml" || ext == ".yml") return SourceFormat::yaml;
    return std::nullopt;
}

struct LoadedSpec {
    std::string bytes;
    OpenApiDoc doc;
};

LoadedSpec load_spec(const std::string& path, Streams& io) {
    LoadedSpec spec;
    spec.bytes = read_input(path, io.in);
    try {
        spec.doc = load_openapi(spec.bytes, format_hint(path));
    } catch (const LoadError& e) {
        std::string message = e.what();
        std::string where = display_name(path);
        if (e.line() > 0) {
            auto prefix = fmt::format("{}:{}: ", e.line(), e.column());
            if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
            where += fmt::format(":{}:{}", e.line(), e.column());
        }
        io.err << where << ": error[" << e.code() << "]: " << message << '\n';
        throw Reported{};
    }
    return spec;
}

void print_diagnostics(const std::vector<Diagnostic>& diags, const std::string& path, std::ostream& err) {
    for (const auto& d : diags) err << format_diagnostic(d, display_name(path)) << '\n';
}

/// Parses and validates LAPIS text; reports every finding.
std::optional<LapisDocument> read_lapis(const std::string& path, Streams& io) {
    auto parsed = parse_document(read_input(path, io.in));
    if (!parsed.ok()) {
        print_diagnostics(parsed.diagnostics, path, io.err);
        return std::nullopt;
    }
    auto diags = parsed.diagnostics;
    auto found = validate(*parsed.document);
    locate(found, parsed.locations);
    diags.insert(diags.end(), found.begin(), found.end());
    print_diagnostics(diags, path, io.err);
    if (has_errors(diags)) return std::nullopt;
    return std::move(parsed.document);
}

// ---------------------------------------------------------------------------
// Tokenizers

std::string vocab_name(std::string name) {
    if (name == "cl100k") return "cl100k_base";
    if (name == "o200k") return "o200k_base";
    return name;
}

std::vector<std::unique_ptr<Tokenizer>> load_tokenizers(const std::vector<std::string>& names,
                                                        const std::vector<std::string>& vocabs, std::ostream& err) {
    std::vector<std::unique_ptr<Tokenizer>> out;
    auto has = [&](const std::string& name) {
        for (const auto& t : out) {
            if (t->name() == name) return true;
        }
        return false;
    };
    auto load = [&](const fs::path& path) {
        if (!fs::exists(path)) throw IoError(fmt::format("vocabulary file '{}' not found", path.string()));
        auto t = load_bpe_vocab(path);
        if (!t->canonical()) {
            err << "warning: " << path.string() << " does not match the published " << t->name()
                << " hash; counts may not reproduce\n";
        }
        out.push_back(std::move(t));
    };
    for (const auto& v : vocabs) load(v);

    std::vector<std::string> wanted;
    for (const auto& n : names) wanted.push_back(vocab_name(n));
    if (names.empty() && vocabs.empty()) wanted = {"cl100k_base", "o200k_base"};
    const char* env = std::getenv("LAPIS_VOCAB_DIR");
    for (const auto& name : wanted) {
        if (has(name)) continue;
        if (name == "approx") {
            out.push_back(std::make_unique<ApproxTokenizer>());
            continue;
        }
        if (!pattern_for_vocab(name)) throw UsageError(fmt::format("unknown tokenizer '{}'", name));
        if (env == nullptr || *env == '\0') {
            throw IoError(fmt::format("no vocabulary for '{}': pass --vocab PATH or set LAPIS_VOCAB_DIR "
                                      "(or use --tokenizer approx, which does not reproduce real counts)",
                                      name));
        }
        load(fs::path(env) / (name + ".tiktoken"));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tables

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        width.resize(std::max(width.size(), row.size()), 0);
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], count_code_points(row[i]));
    }
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::string gap(width[i] - count_code_points(row[i]), ' ');
            line += i == 0 ? row[i] + gap : gap + row[i];
            if (i + 1 < row.size()) line += "  ";
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + '\n';
    }
    return out;
}

std::string thousands(std::uint64_t n) {
    auto digits = std::to_string(n);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
        out += digits[i];
    }
    return out;
}

std::string signed_pct(const Decimal& d) { return (d.scaled > 0 ? "+" : "") + d.str() + "%"; }

// ---------------------------------------------------------------------------
// Commands

struct ConvertArgs {
    std::string input;
    std::string output;
    std::string merge;
    int inline_threshold = 1;
    std::string error_labels = "reason";
    bool quiet = false;
};

ConvertOptions convert_options(int inline_threshold, const std::string& labels) {
    ConvertOptions options;
    options.inline_threshold = inline_threshold;
    options.error_label_source =
        labels == "slug" ? ErrorLabelSource::description_slug : ErrorLabelSource::reason_phrase;
    return options;
}

int cmd_convert(const ConvertArgs& a, Streams& io) {
    auto spec = load_spec(a.input, io);
    auto result = convert(spec.doc, convert_options(a.inline_threshold, a.error_labels));
    if (!a.quiet) print_diagnostics(result.report.warnings, a.input, io.err);
    if (!a.merge.empty()) {
        // A fragment only makes sense against the converted document, so it
        // is validated after merging.
        auto parsed = parse_document(read_input(a.merge, io.in), ParseOptions{2, false});
        if (!parsed.ok()) {
            print_diagnostics(parsed.diagnostics, a.merge, io.err);
            return exit_invalid;
        }
        merge_fragment(result.document, *parsed.document);
        auto diags = validate(result.document);
        locate(diags, parsed.locations);
        if (has_errors(diags)) {
            print_diagnostics(diags, a.merge, io.err);
            return exit_invalid;
        }
    }
    write_output(emit_document(result.document), a.output, io.out);
    if (!a.quiet) {
        const auto& r = result.report;
        io.err << fmt::format("{}: {} ops, {} types, {} error definitions -> {}, {} warnings\n",
                              display_name(a.input), result.document.ops.size(), result.document.types.size(),
                              r.error_defs_in, r.error_defs_out, r.warnings.size());
    }
    return exit_ok;
}

int cmd_validate(const std::string& input, Streams& io) { return read_lapis(input, io) ? exit_ok : exit_invalid; }

int cmd_fmt(const std::string& input, const std::string& output, Streams& io) {
    auto doc = read_lapis(input, io);
    if (!doc) return exit_invalid;
    write_output(emit_document(*doc), output, io.out);
    return exit_ok;
}

struct StatsArgs {
    std::vector<std::string> inputs;
    std::string format = "text";
    bool include_default = false;
};

int cmd_stats(const StatsArgs& a, Streams& io) {
    std::vector<DuplicationRow> rows;
    auto defaults = a.include_default ? DefaultResponses::include : DefaultResponses::exclude;
    for (const auto& input : a.inputs) {
        auto spec = load_spec(input, io);
        rows.push_back({input == "-" ? "stdin" : fs::path(input).stem().string(),
                        error_duplication_report(spec.doc, defaults)});
    }
    if (a.format == "text") {
        write_output(format_duplication_table(rows), "", io.out);
        return exit_ok;
    }
    Json out = Json::array();
    for (const auto& row : rows) {
        const auto& r = row.report;
        Json counts = Json::object();
        for (const auto& [status, n] : r.per_code_counts) counts[status] = n;
        Json most = nullptr;
        if (r.most_repeated) most = {{"status", r.most_repeated->first}, {"count", r.most_repeated->second}};
        out.push_back({{"spec", row.spec},
                       {"op_count", r.op_count},
                       {"error_def_count", r.error_def_count},
                       {"unique_codes", r.unique_codes},
                       {"per_code_counts", counts},
                       {"most_repeated", most}});
    }
    write_output(out.dump(2) + "\n", "", io.out);
    return exit_ok;
}

struct BenchArgs {
    std::string input;
    std::vector<std::string> tokenizers;
    std::vector<std::string> vocabs;
    std::string price = "3.00";
    std::uint64_t calls = 1000;
    std::string format = "text";
    int inline_threshold = 1;
    std::string error_labels = "reason";
};

int cmd_bench(const BenchArgs& a, Streams& io) {
    Price price;
    try {
        price = Price::parse(a.price);
    } catch (const std::exception& e) {
        throw UsageError(fmt::format("--price-per-m: {}", e.what()));
    }
    auto tokenizers = load_tokenizers(a.tokenizers, a.vocabs, io.err);
    auto spec = load_spec(a.input, io);
    auto tree = parse_source(spec.bytes, format_hint(a.input));
    auto result = convert(spec.doc, convert_options(a.inline_threshold, a.error_labels));
    bool yaml_source = (format_hint(a.input) ? *format_hint(a.input) : sniff_format(spec.bytes)) == SourceFormat::yaml;

    std::vector<std::pair<std::string, std::string>> inputs = {
        {"json", tree.dump(2) + "\n"},
        {"json-min", tree.dump()},
        {"yaml", yaml_source ? spec.bytes : to_yaml(tree)},
        {"lapis", emit_document(result.document)},
    };
    std::vector<const Tokenizer*> toks;
    for (const auto& t : tokenizers) toks.push_back(t.get());
    auto report = measure(inputs, toks, "yaml");
    std::string yaml_note = yaml_source ? "source bytes" : "converted from JSON (block style, 2-space indent)";
    std::string json_note = yaml_source ? "converted from YAML" : "re-serialized from source";
    const std::string& primary = toks.front()->name();

    if (a.format == "json") {
        Json out;
        out["spec"] = display_name(a.input);
        out["baseline"] = "yaml";
        out["yaml_style"] = yaml_note;
        out["json_style"] = json_note;
        Json tk = Json::array();
        for (const auto* t : toks) tk.push_back({{"name", t->name()}, {"exact", t->exact()}});
        out["tokenizers"] = tk;
        Json formats = Json::object();
        for (const auto& [name, size] : report.formats) {
            Json counts = Json::object();
            for (const auto& [tok, n] : size.tokens) counts[tok] = n;
            formats[name] = {{"chars", size.chars}, {"bytes", size.bytes}, {"lines", size.lines}, {"tokens", counts}};
        }
        out["formats"] = formats;
        Json reduction = Json::object();
        for (const auto* t : toks) {
            auto lapis_tokens = static_cast<std::int64_t>(report.at("lapis").tokens.at(t->name()));
            Json per = Json::object();
            for (const char* name : {"json", "yaml", "json-min"}) {
                auto n = static_cast<std::int64_t>(report.at(name).tokens.at(t->name()));
                per["vs_" + std::string(name)] = n == 0 ? Json(nullptr) : Json(ratio_decimal(100 * (n - lapis_tokens), n, 1).str());
            }
            per["ratio_vs_yaml"] = report.ratio("lapis", t->name()).str();
            reduction[t->name()] = per;
        }
        out["lapis_reduction_pct"] = reduction;
        Json divergence = Json::object();
        const auto& lapis = report.at("lapis");
        for (std::size_t i = 1; i < toks.size(); ++i) {
            auto c1 = lapis.tokens.at(primary), c2 = lapis.tokens.at(toks[i]->name());
            divergence[toks[i]->name()] = c1 == 0 ? Json(nullptr) : Json(divergence_pct(c1, c2).str());
        }
        out["lapis_divergence_pct_vs_" + primary] = divergence;
        Json cost = Json::object();
        for (const auto& [name, size] : report.formats) {
            auto c = estimate_cost(size.tokens.at(primary), price, a.calls);
            cost[name] = {{"per_call", CostEstimate::dollars(c.per_call_cents)},
                          {"total", CostEstimate::dollars(c.total_cents)}};
        }
        out["cost"] = {{"tokenizer", primary}, {"price_per_m", a.price}, {"calls", a.calls}, {"formats", cost}};
        write_output(out.dump(2) + "\n", "", io.out);
        return exit_ok;
    }

    std::string text = fmt::format("spec: {}\nyaml: {}\njson: {}\n", display_name(a.input), yaml_note, json_note);
    for (const auto* t : toks) {
        if (!t->exact()) text += fmt::format("note: '{}' is a chars/4 heuristic; its counts reproduce no vocabulary\n", t->name());
    }

    std::vector<std::vector<std::string>> sizes{{"format", "chars", "lines"}};
    for (const auto* t : toks) sizes[0].push_back(t->name());
    for (const auto& [name, size] : report.formats) {
        std::vector<std::string> row{name, thousands(size.chars), thousands(size.lines)};
        for (const auto* t : toks) row.push_back(thousands(size.tokens.at(t->name())));
        sizes.push_back(row);
    }
    text += "\n[sizes]\n" + render_table(sizes);

    // LAPIS against every source rendering, then the ratio against YAML.
    std::vector<std::vector<std::string>> versus{{"tokenizer", "vs json", "vs yaml", "vs json-min", "ratio"}};
    for (const auto* t : toks) {
        auto lapis_tokens = static_cast<std::int64_t>(report.at("lapis").tokens.at(t->name()));
        std::vector<std::string> row{t->name()};
        for (const char* name : {"json", "yaml", "json-min"}) {
            auto n = static_cast<std::int64_t>(report.at(name).tokens.at(t->name()));
            row.push_back(n == 0 ? "n/a" : ratio_decimal(100 * (n - lapis_tokens), n, 1).str() + "%");
        }
        row.push_back(report.ratio("lapis", t->name()).str() + "×");
        versus.push_back(row);
    }
    text += "\n[lapis reduction]\n" + render_table(versus);

    if (toks.size() > 1) {
        std::vector<std::vector<std::string>> div{{"tokenizer", "lapis tokens", "difference"}};
        const auto& lapis = report.at("lapis");
        auto base = lapis.tokens.at(primary);
        div.push_back({primary, thousands(base), ""});
        for (std::size_t i = 1; i < toks.size(); ++i) {
            auto n = lapis.tokens.at(toks[i]->name());
            div.push_back({toks[i]->name(), thousands(n), base == 0 ? "n/a" : signed_pct(divergence_pct(base, n))});
        }
        text += "\n[tokenizers]\n" + render_table(div);
    }

    std::vector<std::vector<std::string>> cost{
        {"format", "tokens", "cost/call", fmt::format("cost/{} calls", thousands(a.calls))}};
    for (const auto& [name, size] : report.formats) {
        auto n = size.tokens.at(primary);
        auto c = estimate_cost(n, price, a.calls);
        cost.push_back({name, thousands(n), CostEstimate::dollars(c.per_call_cents), CostEstimate::dollars(c.total_cents)});
    }
    auto yaml_cost = estimate_cost(report.at("yaml").tokens.at(primary), price, a.calls);
    auto lapis_cost = estimate_cost(report.at("lapis").tokens.at(primary), price, a.calls);
    text += fmt::format("\n[cost] {} at ${}/M input tokens\n", primary, a.price) + render_table(cost) +
            fmt::format("savings vs yaml: {}/{} calls\n", CostEstimate::dollars(yaml_cost.total_cents - lapis_cost.total_cents),
                        thousands(a.calls));
    write_output(text, "", io.out);
    return exit_ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    Streams io{in, out, err};
    CLI::App app{"Token-minimal API descriptions: convert OpenAPI, validate, format and measure LAPIS", "lapis"};
    app.set_version_flag("--version", "lapis " LAPIS_VERSION);
    app.require_subcommand(1);

    ConvertArgs conv;
    auto* convert_cmd = app.add_subcommand("convert", "Convert an OpenAPI 3.x document (JSON or YAML) to LAPIS");
    convert_cmd->add_option("input", conv.input, "OpenAPI file, or - for stdin")->required();
    convert_cmd->add_option("-o,--output", conv.output, "Output file (default stdout)");
    convert_cmd->add_option("--merge", conv.merge, "LAPIS fragment overlaid on the result ([limits], [flows], ...)");
    convert_cmd->add_option("--inline-threshold", conv.inline_threshold,
                            "Schemas referenced at most this many times are inlined")
        ->check(CLI::NonNegativeNumber);
    convert_cmd->add_option("--error-labels", conv.error_labels, "Error label source")
        ->check(CLI::IsMember({"reason", "slug"}));
    convert_cmd->add_flag("-q,--quiet", conv.quiet, "Suppress warnings and the summary line");

    std::string validate_input;
    auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a LAPIS document");
    validate_cmd->add_option("input", validate_input, "LAPIS file, or - for stdin")->required();

    std::string fmt_input, fmt_output;
    auto* fmt_cmd = app.add_subcommand("fmt", "Rewrite a LAPIS document in canonical form");
    fmt_cmd->add_option("input", fmt_input, "LAPIS file, or - for stdin")->required();
    fmt_cmd->add_option("-o,--output", fmt_output, "Output file (default stdout)");

    StatsArgs stats;
    auto* stats_cmd = app.add_subcommand("stats", "Error-response duplication in OpenAPI documents");
    stats_cmd->add_option("inputs", stats.inputs, "OpenAPI files, or - for stdin")->required();
    stats_cmd->add_option("--format", stats.format, "Output format")->check(CLI::IsMember({"text", "json"}));
    stats_cmd->add_flag("--include-default", stats.include_default, "Count `default` responses as errors");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Token, size and cost comparison of OpenAPI formats against LAPIS");
    bench_cmd->add_option("input", bench.input, "OpenAPI file, or - for stdin")->required();
    bench_cmd->add_option("--tokenizer", bench.tokenizers,
                          "cl100k_base, o200k_base or approx; repeatable (default: cl100k_base and o200k_base)");
    bench_cmd->add_option("--vocab", bench.vocabs, "Vocabulary file (\"base64 rank\" lines); repeatable");
    bench_cmd->add_option("--price-per-m", bench.price, "Dollars per million input tokens");
    bench_cmd->add_option("--calls", bench.calls, "Number of calls for the total cost");
    bench_cmd->add_option("--format", bench.format, "Output format")->check(CLI::IsMember({"text", "json"}));
    bench_cmd->add_option("--inline-threshold", bench.inline_threshold, "As for convert")->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--error-labels", bench.error_labels, "As for convert")->check(CLI::IsMember({"reason", "slug"}));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*convert_cmd) return cmd_convert(conv, io);
        if (*validate_cmd) return cmd_validate(validate_input, io);
        if (*fmt_cmd) return cmd_fmt(fmt_input, fmt_output, io);
        if (*stats_cmd) return cmd_stats(stats, io);
        if (*bench_cmd) return cmd_bench(bench, io);
    } catch (const Reported&) {
        return exit_invalid;
    } catch (const UsageError& e) {
        err << "lapis: " << e.what() << '\n';
        return exit_usage;
    } catch (const IoError& e) {
        err << "lapis: " << e.what() << '\n';
        return exit_io;
    } catch (const VocabError& e) {
        err << "lapis: vocabulary: " << e.what() << '\n';
        return exit_invalid;
    }
    return exit_usage;
}

}  // namespace lapis::cli
