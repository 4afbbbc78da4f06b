#include <doctest.h>

#include <cstdint>
#include <random>

#include "doc_generator.hpp"
#include "lapis/emitter.hpp"
#include "lapis/parser.hpp"

using namespace lapis;

namespace {

void check_round_trip(std::uint64_t seed, const EmitStyle& style = {}) {
    test::DocGenerator gen(seed);
    LapisDocument doc = gen.generate();
    INFO("seed " << seed);
    auto diagnostics = validate(doc);
    for (const auto& d : diagnostics) INFO(d.code << " " << d.message);
    REQUIRE_FALSE(has_errors(diagnostics));

    std::string text = emit_document(doc, style);
    INFO(text);
    ParseOptions options;
    options.indent_width = style.indent_width;
    auto parsed = parse_document(text, options);
    for (const auto& d : parsed.diagnostics) INFO(format_diagnostic(d));
    REQUIRE(parsed.ok());
    CHECK(*parsed.document == doc);
    CHECK(emit_document(*parsed.document, style) == text);
}

}  // namespace

TEST_CASE("generated documents round-trip") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) check_round_trip(seed);
}

TEST_CASE("round-trip holds for other emit styles") {
    EmitStyle wide;
    wide.indent_width = 4;
    wide.blank_line_between_ops = false;
    EmitStyle narrow;
    narrow.max_line = 12;
    EmitStyle unwrapped;
    unwrapped.max_line = std::nullopt;
    for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
        check_round_trip(seed, wide);
        check_round_trip(seed, narrow);
        check_round_trip(seed, unwrapped);
    }
}

TEST_CASE("generator is deterministic") {
    test::DocGenerator a(42), b(42);
    CHECK(a.generate() == b.generate());
    CHECK(emit_document(a.generate()) == emit_document(b.generate()));
}

TEST_CASE("k tab-corrupted lines give at least k errors") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        test::DocGenerator gen(seed);
        std::string text = emit_document(gen.generate());
        std::vector<std::string> lines;
        std::size_t start = 0;
        while (start < text.size()) {
            auto end = text.find('\n', start);
            lines.push_back(text.substr(start, end - start));
            start = end + 1;
        }
        std::mt19937_64 rng(seed);
        std::size_t k = 1 + rng() % 5;
        for (std::size_t i = 0; i < k; ++i) {
            auto at = rng() % (lines.size() + 1);
            lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at), "\tcorrupted " + std::to_string(i));
        }
        std::string broken;
        for (const auto& l : lines) broken += l + "\n";
        auto r = parse_document(broken);
        CHECK_FALSE(r.ok());
        CHECK(count_errors(r.diagnostics) >= k);
    }
}

TEST_CASE("byte-level mutations never crash the parser") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        test::DocGenerator gen(seed);
        std::string text = emit_document(gen.generate());
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        static const char alphabet[] = " \t\n[]{}:|>~<!?#@=\"\\-*.()+/aZ0";
        int edits = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < edits && !text.empty(); ++i) {
            auto at = rng() % text.size();
            char c = alphabet[rng() % (sizeof(alphabet) - 1)];
            switch (rng() % 3) {
                case 0: text[at] = c; break;
                case 1: text.insert(text.begin() + static_cast<std::ptrdiff_t>(at), c); break;
                default: text.erase(at, 1); break;
            }
        }
        auto a = parse_document(text);
        auto b = parse_document(text);
        CHECK(a.diagnostics == b.diagnostics);
        if (a.ok()) {
            // Anything that parses and validates must also re-emit and re-parse.
            if (!has_errors(validate(*a.document))) {
                auto again = parse_document(emit_document(*a.document));
                REQUIRE(again.ok());
                CHECK(*again.document == *a.document);
            }
        }
    }
}
