#include "lapis/analyzer.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "lapis/emitter.hpp"
#include "lapis/tokenmeter.hpp"

namespace lapis {

namespace {

bool is_error_status(std::string_view status) {
    return status.size() == 3 && (status[0] == '4' || status[0] == '5');
}

bool counts_as_error(std::string_view status, DefaultResponses defaults) {
    return is_error_status(status) || (defaults == DefaultResponses::include && status == "default");
}

constexpr std::string_view kMethods[] = {"get", "put", "post", "delete", "options", "head", "patch", "trace"};

constexpr std::string_view kResponseRefPrefix = "#/components/responses/";

std::int64_t yaml_chars(const Json& tree) { return static_cast<std::int64_t>(count_code_points(to_yaml(tree))); }

// Calls fn(responses_object) for every operation under paths and webhooks.
template <typename Fn>
void for_each_responses(Json& tree, Fn fn) {
    for (const char* section : {"paths", "webhooks"}) {
        auto it = tree.find(section);
        if (it == tree.end() || !it->is_object()) continue;
        for (auto& [path, item] : it->items()) {
            if (!item.is_object()) continue;
            for (auto method : kMethods) {
                auto op = item.find(std::string(method));
                if (op == item.end() || !op->is_object()) continue;
                auto responses = op->find("responses");
                if (responses != op->end() && responses->is_object()) fn(*responses);
            }
        }
    }
}

void erase_if_empty(Json& parent, const char* key) {
    auto it = parent.find(key);
    if (it != parent.end() && it->is_object() && it->empty()) parent.erase(it);
}

// components.responses entries referenced only from error statuses.
std::set<std::string> error_only_responses(Json tree) {
    std::set<std::string> from_errors, from_others;
    for_each_responses(tree, [&](Json& responses) {
        for (auto& [status, response] : responses.items()) {
            if (!response.is_object()) continue;
            auto ref = response.find("$ref");
            if (ref == response.end() || !ref->is_string()) continue;
            const auto& text = ref->get_ref<const std::string&>();
            if (text.rfind(kResponseRefPrefix, 0) != 0) continue;
            auto name = text.substr(kResponseRefPrefix.size());
            (is_error_status(status) ? from_errors : from_others).insert(name);
        }
    });
    std::set<std::string> out;
    std::set_difference(from_errors.begin(), from_errors.end(), from_others.begin(), from_others.end(),
                        std::inserter(out, out.end()));
    return out;
}

Json without_errors(Json tree) {
    auto shared = error_only_responses(tree);
    for_each_responses(tree, [](Json& responses) {
        for (auto it = responses.begin(); it != responses.end();) {
            it = is_error_status(it.key()) ? responses.erase(it) : std::next(it);
        }
    });
    if (auto c = tree.find("components"); c != tree.end() && c->is_object()) {
        if (auto r = c->find("responses"); r != c->end() && r->is_object()) {
            for (const auto& name : shared) r->erase(name);
            erase_if_empty(*c, "responses");
        }
    }
    return tree;
}

Json without_meta(Json tree) {
    for (auto it = tree.begin(); it != tree.end();) {
        const auto& key = it.key();
        it = key == "paths" || key == "webhooks" || key == "components" ? std::next(it) : tree.erase(it);
    }
    if (auto c = tree.find("components"); c != tree.end() && c->is_object()) {
        c->erase("securitySchemes");
        erase_if_empty(tree, "components");
    }
    return tree;
}

Json without_types(Json tree) {
    if (auto c = tree.find("components"); c != tree.end() && c->is_object()) {
        c->erase("schemas");
        erase_if_empty(tree, "components");
    }
    return tree;
}

// Everything the [ops] and [webhooks] sections replace: operations and the
// reusable pieces they reference, error-only responses excepted.
Json without_signatures(Json tree) {
    auto shared = error_only_responses(tree);
    tree.erase("paths");
    tree.erase("webhooks");
    if (auto c = tree.find("components"); c != tree.end() && c->is_object()) {
        for (auto it = c->begin(); it != c->end();) {
            const auto& key = it.key();
            if (key == "schemas" || key == "securitySchemes") {
                ++it;
            } else if (key == "responses" && it->is_object()) {
                for (auto r = it->begin(); r != it->end();) r = shared.count(r.key()) ? std::next(r) : it->erase(r);
                it = it->empty() ? c->erase(it) : std::next(it);
            } else {
                it = c->erase(it);
            }
        }
        erase_if_empty(tree, "components");
    }
    return tree;
}

}  // namespace

DuplicationReport error_duplication_report(const OpenApiDoc& doc, DefaultResponses defaults) {
    DuplicationReport report;
    report.op_count = static_cast<int>(doc.operations.size());
    for (const auto& op : doc.operations) {
        for (const auto& r : op.responses) {
            if (!counts_as_error(r.status, defaults)) continue;
            ++report.error_def_count;
            ++report.per_code_counts[r.status];
        }
    }
    report.unique_codes = static_cast<int>(report.per_code_counts.size());
    for (const auto& [status, count] : report.per_code_counts) {
        if (!report.most_repeated || count > report.most_repeated->second) report.most_repeated = {status, count};
    }
    return report;
}

std::string format_duplication_table(const std::vector<DuplicationRow>& rows) {
    std::vector<std::vector<std::string>> cells{{"Spec", "Ops", "Error defs", "Unique codes", "Most repeated"}};
    for (const auto& row : rows) {
        const auto& r = row.report;
        std::string most = r.most_repeated ? fmt::format("{} ({}×)", r.most_repeated->first, r.most_repeated->second) : "-";
        cells.push_back({row.spec, std::to_string(r.op_count), std::to_string(r.error_def_count),
                         std::to_string(r.unique_codes), most});
    }
    std::vector<std::size_t> width(cells[0].size(), 0);
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], count_code_points(line[i]));
    }
    std::string out;
    for (const auto& line : cells) {
        std::string text;
        for (std::size_t i = 0; i < line.size(); ++i) {
            auto gap = std::string(width[i] - count_code_points(line[i]), ' ');
            // Spec names align left, numbers right.
            text += i == 0 ? line[i] + gap : gap + line[i];
            if (i + 1 < line.size()) text += "  ";
        }
        out += text + '\n';
    }
    return out;
}

WasteBreakdown waste_decomposition(const Json& raw, const LapisDocument& converted) {
    WasteBreakdown w;
    auto sections = emit_sections(converted);
    auto chars = [](const std::string& s) { return static_cast<std::int64_t>(count_code_points(s)); };

    Json pruned = discard_metadata(raw).first;
    std::int64_t pruned_chars = yaml_chars(pruned);
    w.source_chars = yaml_chars(raw);
    w.lapis_chars = chars(sections.joined());
    w.total_savings = w.source_chars - w.lapis_chars;

    w.metadata = w.source_chars - pruned_chars;
    w.types = pruned_chars - yaml_chars(without_types(pruned)) - chars(sections.types);
    // Error responses sit inside operations; measure signatures without them
    // so no character is counted twice.
    Json no_errors = without_errors(pruned);
    w.errors = pruned_chars - yaml_chars(no_errors) - chars(sections.errors);
    w.signature = yaml_chars(no_errors) - yaml_chars(without_signatures(without_meta(no_errors))) -
                  chars(sections.meta) - chars(sections.ops) - chars(sections.webhooks);
    w.residual = w.total_savings - w.metadata - w.errors - w.types - w.signature;
    return w;
}

std::string yaml_baseline(std::string_view source_bytes) {
    if (sniff_format(source_bytes) == SourceFormat::yaml) return std::string(source_bytes);
    return to_yaml(parse_source(source_bytes, SourceFormat::json));
}

}  // namespace lapis
