#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "lapis/analyzer.hpp"
#include "lapis/converter.hpp"
#include "test_support.hpp"

using namespace lapis;

namespace {

std::string corpus_text(const std::string& name) {
    auto path = test::data_path("corpus/" + name);
    INFO("missing " << path << "; run scripts/fetch_corpus.sh");
    REQUIRE(std::filesystem::exists(path));
    return test::read_file(path);
}

// Independent of the loader: walks the raw tree for response keys.
int brute_force_error_keys(const Json& raw) {
    int n = 0;
    for (const auto& [path, item] : raw.at("paths").items()) {
        for (const auto& [method, op] : item.items()) {
            if (!op.is_object() || !op.contains("responses")) continue;
            for (const auto& [status, response] : op.at("responses").items()) {
                n += status.size() == 3 && (status[0] == '4' || status[0] == '5');
            }
        }
    }
    return n;
}

int sum_counts(const DuplicationReport& r) {
    int n = 0;
    for (const auto& [status, count] : r.per_code_counts) n += count;
    return n;
}

}  // namespace

TEST_CASE("petstore duplication report") {
    auto text = corpus_text("petstore.json");
    auto doc = load_openapi(text);
    auto r = error_duplication_report(doc);
    CHECK(r.op_count == 19);
    CHECK(r.error_def_count == 26);
    CHECK(r.unique_codes == 3);
    REQUIRE(r.most_repeated.has_value());
    CHECK(r.most_repeated->first == "400");
    CHECK(r.most_repeated->second == 15);
    CHECK(sum_counts(r) == r.error_def_count);
    CHECK(brute_force_error_keys(parse_source(text)) == r.error_def_count);

    // Counting `default` as an error would not reproduce 26.
    auto with_default = error_duplication_report(doc, DefaultResponses::include);
    CHECK(with_default.error_def_count != 26);
    CHECK(with_default.per_code_counts.count("default") == 1);
}

TEST_CASE("corpus duplication reports match a raw scan") {
    for (const char* name : {"httpbin.json", "twilio.json", "github.yaml"}) {
        CAPTURE(name);
        auto text = corpus_text(name);
        auto r = error_duplication_report(load_openapi(text));
        CHECK(sum_counts(r) == r.error_def_count);
        CHECK(brute_force_error_keys(parse_source(text)) == r.error_def_count);
    }
    // Pinned to the fetched revisions (see scripts/fetch_corpus.sh).
    auto github = error_duplication_report(load_openapi(corpus_text("github.yaml")));
    CHECK(github.op_count == 1078);
    CHECK(github.error_def_count == 1584);
    CHECK(github.unique_codes == 14);
    CHECK(github.most_repeated == std::optional<std::pair<std::string, int>>({"404", 529}));
    auto twilio = error_duplication_report(load_openapi(corpus_text("twilio.json")));
    CHECK(twilio.op_count == 195);
    CHECK(twilio.error_def_count == 0);
    CHECK(twilio.unique_codes == 0);
    CHECK_FALSE(twilio.most_repeated.has_value());
}

TEST_CASE("duplication report edge cases") {
    auto none = error_duplication_report(
        load_openapi(R"({"openapi":"3.0.0","info":{"title":"t","version":"1"},"paths":{"/a":{"get":{"responses":{"200":{"description":"ok"}}}}}})"));
    CHECK(none.op_count == 1);
    CHECK(none.error_def_count == 0);
    CHECK(none.unique_codes == 0);
    CHECK_FALSE(none.most_repeated.has_value());

    auto tie = error_duplication_report(load_openapi(R"({"openapi":"3.0.0","info":{"title":"t","version":"1"},"paths":{
        "/a":{"get":{"responses":{"404":{"description":"x"},"400":{"description":"x"}}}},
        "/b":{"get":{"responses":{"404":{"description":"x"},"400":{"description":"x"},"5XX":{"description":"x"}}}}}})"));
    CHECK(tie.error_def_count == 5);
    CHECK(tie.unique_codes == 3);
    CHECK(tie.most_repeated == std::optional<std::pair<std::string, int>>({"400", 2}));
}

TEST_CASE("duplication table layout") {
    DuplicationReport r;
    r.op_count = 19;
    r.error_def_count = 26;
    r.unique_codes = 3;
    r.most_repeated = {"400", 15};
    auto table = format_duplication_table({{"Petstore", r}});
    CHECK(table ==
          "Spec      Ops  Error defs  Unique codes  Most repeated\n"
          "Petstore   19          26             3      400 (15×)\n");
}

TEST_CASE("yaml writer round trips") {
    auto tree = Json::parse(R"({
        "plain":"hello world","number_like":"123","float_like":"1.5","bool_like":"true","null_like":"null",
        "yes":"yes","date":"2024-01-01","empty":"","colon":"a: b","hash":"a #b","lead":"-x","quote":"it's",
        "multi":"line one\nline two\n","multi_strip":"a\n\nb","multi_keep":"a\n\n","indented":"  x\ny",
        "control":"bell\u0007","tab":"a\tb","unicode":"café ☃",
        "200":{"description":"ok"},"":"empty key","n":1,"f":2.5,"big":1e+30,"t":true,"z":null,
        "list":[1,"two",{"k":"v","k2":[]},[3,4],{}],"nested":{"a":{"b":[{"c":"d"}]}}})");
    auto yaml = to_yaml(tree);
    CHECK(parse_source(yaml, SourceFormat::yaml) == tree);
    CHECK(yaml.find("plain: hello world\n") != std::string::npos);
    CHECK(yaml.find("number_like: '123'\n") != std::string::npos);
    CHECK(yaml.find("'200':\n  description: ok\n") != std::string::npos);
    CHECK(yaml.find("list:\n- 1\n- two\n- k: v\n  k2: []\n- - 3\n  - 4\n- {}\n") != std::string::npos);
    CHECK(yaml.find("multi: |\n  line one\n  line two\n") != std::string::npos);

    CHECK(to_yaml(Json::object()) == "{}\n");
    CHECK(to_yaml(Json("x")) == "x\n");
}

TEST_CASE("yaml baseline") {
    CHECK(yaml_baseline("a: 1\n") == "a: 1\n");
    CHECK(yaml_baseline(R"({"a":1,"b":[true]})") == "a: 1\nb:\n- true\n");
    for (const char* name : {"petstore.json", "httpbin.json", "twilio.json"}) {
        CAPTURE(name);
        auto text = corpus_text(name);
        CHECK(parse_source(yaml_baseline(text), SourceFormat::yaml) == parse_source(text));
    }
}

TEST_CASE("waste decomposition") {
    for (const char* name : {"petstore.json", "httpbin.json", "twilio.json"}) {
        CAPTURE(name);
        auto text = corpus_text(name);
        auto converted = convert(load_openapi(text)).document;
        auto w = waste_decomposition(parse_source(text), converted);
        CHECK(w.total_savings == w.source_chars - w.lapis_chars);
        CHECK(w.total_savings > 0);
        CHECK(w.metadata + w.signature + w.types + w.errors + w.residual == w.total_savings);
        CHECK(std::llabs(w.residual) * 100 <= w.total_savings);
    }

    auto httpbin = corpus_text("httpbin.json");
    auto w = waste_decomposition(parse_source(httpbin), convert(load_openapi(httpbin)).document);
    CHECK(w.errors * 100 < w.total_savings * 5);

    auto bare = R"({"openapi":"3.0.0","info":{"title":"t","version":"1"},"paths":{
        "/items":{"get":{"operationId":"listItems","responses":{"200":{"description":"ok","content":{"application/json":{"schema":{"type":"array","items":{"type":"string"}}}}},
                                                                 "404":{"description":"Not found"}}}}}})";
    auto raw = parse_source(bare);
    CHECK(discard_metadata(raw).second == DiscardTally{{"openapi", 1}});
    auto bare_w = waste_decomposition(raw, convert(load_openapi(bare)).document);
    // Only the version line is discarded; nothing else counts as metadata.
    CHECK(bare_w.metadata == static_cast<std::int64_t>(std::string("openapi: '3.0.0'\n").size()));
    CHECK(bare_w.types == 0);

    // A tree with no discardable field at all.
    raw.erase("openapi");
    CHECK(waste_decomposition(raw, convert(load_openapi(bare)).document).metadata == 0);
}
