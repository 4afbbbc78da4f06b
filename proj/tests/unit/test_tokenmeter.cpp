#include <doctest.h>

#include <nlohmann/json.hpp>

#include "lapis/tokenmeter.hpp"
#include "test_support.hpp"

using namespace lapis;

namespace {

const BpeTokenizer& vocab(const std::string& name) {
    static std::map<std::string, std::unique_ptr<BpeTokenizer>> cache;
    auto& slot = cache[name];
    if (!slot) {
        auto path = test::data_path("vocab/" + name + ".tiktoken");
        INFO("missing " << path << "; run scripts/fetch_corpus.sh");
        REQUIRE(std::filesystem::exists(path));
        slot = load_bpe_vocab(path);
    }
    return *slot;
}

// Every single byte as its own rank, then the given merges.
std::string tiny_vocab(const std::vector<std::string>& merges) {
    static const char* alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    auto b64 = [&](const std::string& bytes) {
        std::string out;
        for (std::size_t i = 0; i < bytes.size(); i += 3) {
            unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
            if (i + 1 < bytes.size()) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
            if (i + 2 < bytes.size()) v |= static_cast<unsigned char>(bytes[i + 2]);
            out += alphabet[(v >> 18) & 63];
            out += alphabet[(v >> 12) & 63];
            out += i + 1 < bytes.size() ? alphabet[(v >> 6) & 63] : '=';
            out += i + 2 < bytes.size() ? alphabet[v & 63] : '=';
        }
        return out;
    };
    std::string text;
    int rank = 0;
    for (int b = 0; b < 256; ++b) text += b64(std::string(1, static_cast<char>(b))) + " " + std::to_string(rank++) + "\n";
    for (const auto& m : merges) text += b64(m) + " " + std::to_string(rank++) + "\n";
    return text;
}

std::vector<std::string> pieces(std::string_view text, SplitPattern p) {
    std::vector<std::string> out;
    for (auto piece : pretokenize(text, p)) out.emplace_back(piece);
    return out;
}

}  // namespace

TEST_CASE("reference encodings match exactly for both vocabularies") {
    auto fixtures = nlohmann::json::parse(test::read_file(test::fixture_path("bpe_fixtures.json")));
    REQUIRE(fixtures["fixtures"].size() == 50);
    for (const char* name : {"cl100k_base", "o200k_base"}) {
        const auto& t = vocab(name);
        CHECK(t.canonical());
        for (const auto& f : fixtures["fixtures"]) {
            std::string text = f["text"];
            INFO(name << ": " << text);
            auto expected = f[name].get<std::vector<int>>();
            CHECK(t.encode(text) == expected);
            CHECK(t.count(text) == expected.size());
        }
    }
}

TEST_CASE("hello world is two tokens; empty text is none") {
    CHECK(vocab("cl100k_base").count("hello world") == 2);
    CHECK(vocab("cl100k_base").count("") == 0);
    CHECK(vocab("o200k_base").count("") == 0);
    CHECK(ApproxTokenizer().count("") == 0);
}

TEST_CASE("cl100k split rule") {
    auto p = SplitPattern::cl100k;
    CHECK(pieces("hello world", p) == std::vector<std::string>{"hello", " world"});
    CHECK(pieces("I'm they'LL", p) == std::vector<std::string>{"I", "'m", " they", "'LL"});
    CHECK(pieces("12345", p) == std::vector<std::string>{"123", "45"});
    CHECK(pieces("a  b", p) == std::vector<std::string>{"a", " ", " b"});
    CHECK(pieces("x \n\n y", p) == std::vector<std::string>{"x", " \n\n", " y"});
    CHECK(pieces("end   ", p) == std::vector<std::string>{"end", "   "});
    CHECK(pieces(" {{}}\n\nz", p) == std::vector<std::string>{" {{}}\n\n", "z"});
    CHECK(pieces("\tfoo", p) == std::vector<std::string>{"\tfoo"});
    // Long s folds to s inside the case-insensitive contraction group.
    CHECK(pieces("x'\xC5\xBF", p) == std::vector<std::string>{"x", "'\xC5\xBF"});
}

TEST_CASE("o200k split rule") {
    auto p = SplitPattern::o200k;
    CHECK(pieces("HTTPServerError", p) == std::vector<std::string>{"HTTPServer", "Error"});
    CHECK(pieces("camelCase", p) == std::vector<std::string>{"camel", "Case"});
    CHECK(pieces("don't", p) == std::vector<std::string>{"don't"});
    CHECK(pieces("}\n/x", p) == std::vector<std::string>{"}\n/", "x"});
    CHECK(pieces("a \n\n b", p) == std::vector<std::string>{"a", " \n\n", " b"});
}

TEST_CASE("pre-tokens tile the input, including invalid UTF-8") {
    std::string text = "ok \xFF\xFE bad \xE2\x82 cut \xC3\xA9t\xC3\xA9 \xF0\x9F\x8E\x89";
    for (auto p : {SplitPattern::cl100k, SplitPattern::o200k}) {
        std::string joined;
        for (auto piece : pretokenize(text, p)) {
            CHECK(!piece.empty());
            joined += piece;
        }
        CHECK(joined == text);
    }
    // Byte-level fallback: anything encodes, and decoding ranks gives the bytes back.
    CHECK(vocab("cl100k_base").count(text) > 0);
}

TEST_CASE("merging takes the lowest rank, leftmost first") {
    BpeTokenizer t("tiny", tiny_vocab({"ab", "bc", "abc"}), SplitPattern::cl100k);
    // ranks: single bytes 0..255, ab=256, bc=257, abc=258
    CHECK(t.encode("abc") == std::vector<int>{258});
    CHECK(t.encode("abcbc") == std::vector<int>{258, 257});
    BpeTokenizer u("tiny", tiny_vocab({"bc", "ab"}), SplitPattern::cl100k);
    CHECK(u.encode("abc") == std::vector<int>{'a', 256});
    CHECK(u.encode("aaaa") == std::vector<int>{'a', 'a', 'a', 'a'});
    CHECK(u.vocab_size() == 258);
    CHECK_FALSE(u.canonical());
}

TEST_CASE("vocabulary validation") {
    auto fails_with = [](const std::string& text, const std::string& what, std::size_t line) {
        try {
            BpeTokenizer t("bad", text, SplitPattern::cl100k);
            FAIL("accepted a bad vocabulary: " << what);
        } catch (const VocabError& e) {
            INFO(std::string(e.what()));
            CHECK(std::string(e.what()).find(what) != std::string::npos);
            CHECK(e.line() == line);
        }
    };
    std::string good = tiny_vocab({"ab"});
    CHECK_NOTHROW(BpeTokenizer("ok", good, SplitPattern::cl100k));
    CHECK_NOTHROW(BpeTokenizer("ok", good + "\n\n", SplitPattern::cl100k));
    fails_with(good + "YWJj\n", "malformed line", 258);
    fails_with(good + "YWJj 12x\n", "malformed line", 258);
    fails_with(good + "!!!! 257\n", "invalid base64", 258);
    fails_with(good + "YWJj 256\n", "duplicate rank 256", 258);
    fails_with(good + "YWJj 300\n", "not dense", 0);
    fails_with(good.substr(good.find('\n') + 1), "missing single-byte token 0x00", 0);
    CHECK_THROWS_AS(load_bpe_vocab(test::fixture_path("nope/p50k_base.tiktoken")), VocabError);
    CHECK_THROWS_AS(load_bpe_vocab(test::fixture_path("nope/cl100k_base.tiktoken")), std::runtime_error);
}

TEST_CASE("approximate tokenizer counts four code points per token") {
    ApproxTokenizer a;
    CHECK_FALSE(a.exact());
    CHECK(a.count("abcd") == 1);
    CHECK(a.count("abcde") == 2);
    CHECK(a.count("\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9") == 1);
    CHECK(a.encode("abcdefghi") == std::vector<int>{0, 4, 8});
}

TEST_CASE("decimal rounding") {
    CHECK(ratio_decimal(1, 8, 2).str() == "0.13");
    CHECK(ratio_decimal(-1, 8, 2).str() == "-0.13");
    CHECK(ratio_decimal(1, 3, 0).str() == "0");
    CHECK(ratio_decimal(5, 1, 1).str() == "5.0");
    CHECK(ratio_decimal(-1, 20, 1).str() == "-0.1");
    CHECK_THROWS_AS(ratio_decimal(1, 0, 1), std::domain_error);
}

TEST_CASE("size report") {
    ApproxTokenizer a;
    std::string yaml(4634 * 4, 'y');
    std::string lapis(800 * 4, 'l');
    auto r = measure({{"yaml", yaml}, {"lapis", lapis}}, {&a}, "yaml");
    CHECK(r.at("yaml").tokens.at("approx") == 4634);
    CHECK(r.reduction_pct("lapis", "approx").str() == "82.7");
    CHECK(r.ratio("lapis", "approx").str() == "0.17");
    CHECK(r.reduction_pct("yaml", "approx").str() == "0.0");
    CHECK(r.ratio("yaml", "approx").str() == "1.00");
    CHECK(r.at("lapis").lines == 1);
    CHECK_THROWS_AS(measure({{"lapis", lapis}}, {&a}, "json"), std::invalid_argument);

    // 189 of 3000 tokens left is a 93.7% reduction.
    auto twilio = measure({{"json", std::string(4 * 3000, 'j')}, {"lapis", std::string(4 * 189, 'l')}}, {&a}, "json");
    CHECK(twilio.reduction_pct("lapis", "approx").str() == "93.7");
}

TEST_CASE("line counting") {
    CHECK(count_lines("") == 0);
    CHECK(count_lines("a") == 1);
    CHECK(count_lines("a\n") == 1);
    CHECK(count_lines("a\nb") == 2);
    CHECK(count_code_points("h\xC3\xA9") == 2);
}

TEST_CASE("tokenizer divergence") {
    CHECK(divergence_pct(1000, 1005).str() == "0.5");
    CHECK(divergence_pct(1000, 990).str() == "-1.0");
    CHECK(divergence_pct(7, 7).str() == "0.0");
    CHECK_THROWS_AS(divergence_pct(0, 3), std::domain_error);
    const auto& cl = vocab("cl100k_base");
    CHECK(tokenizer_divergence("same tokenizer twice", cl, cl).str() == "0.0");
    CHECK_THROWS_AS(tokenizer_divergence("", cl, cl), std::domain_error);
}

TEST_CASE("cost estimates are exact to the cent") {
    auto price = Price::parse("3.00");
    CHECK(price.micro_dollars == 3'000'000);
    auto a = estimate_cost(313'101, price, 1000);
    CHECK(CostEstimate::dollars(a.per_call_cents) == "$0.94");
    CHECK(CostEstimate::dollars(a.total_cents) == "$939.30");
    CHECK(CostEstimate::dollars(estimate_cost(1'811'843, price, 1).per_call_cents) == "$5.44");
    CHECK(estimate_cost(0, price, 1000).total_cents == 0);
    // Half a cent rounds up: 5000 tokens at $1/M is $0.005.
    CHECK(estimate_cost(5000, Price::parse("1"), 1).per_call_cents == 1);
    CHECK(Price::parse("$0.15").micro_dollars == 150'000);
    CHECK(Price::parse("0.000001").micro_dollars == 1);
    for (const char* bad : {"", "3.", "-1", "1.0000001", "abc", ".5"}) CHECK_THROWS_AS(Price::parse(bad), std::invalid_argument);
}
