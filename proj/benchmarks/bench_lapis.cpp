#include <benchmark/benchmark.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "lapis/converter.hpp"
#include "lapis/emitter.hpp"
#include "lapis/parser.hpp"
#include "lapis/tokenmeter.hpp"

namespace fs = std::filesystem;
using namespace lapis;

namespace {

// Empty when the file is absent; benchmarks then skip.
std::string read_data(const std::string& relative) {
    std::ifstream in(fs::path(LAPIS_DATA_DIR) / relative, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string& corpus(const std::string& name) {
    static std::map<std::string, std::string> cache;
    auto [it, inserted] = cache.try_emplace(name);
    if (inserted) it->second = read_data("corpus/" + name);
    return it->second;
}

const BpeTokenizer* cl100k() {
    static std::unique_ptr<BpeTokenizer> tokenizer = [] {
        fs::path dir = std::getenv("LAPIS_VOCAB_DIR") ? fs::path(std::getenv("LAPIS_VOCAB_DIR"))
                                                      : fs::path(LAPIS_DATA_DIR) / "vocab";
        auto path = dir / "cl100k_base.tiktoken";
        return fs::exists(path) ? load_bpe_vocab(path) : nullptr;
    }();
    return tokenizer.get();
}

void BM_Convert(benchmark::State& state, const char* name) {
    const auto& source = corpus(name);
    if (source.empty()) return state.SkipWithError("corpus file missing; run scripts/fetch_corpus.sh");
    for (auto _ : state) {
        auto result = convert(load_openapi(source));
        benchmark::DoNotOptimize(result);
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * source.size()));
}

void BM_ParseEmitted(benchmark::State& state, const char* name) {
    const auto& source = corpus(name);
    if (source.empty()) return state.SkipWithError("corpus file missing; run scripts/fetch_corpus.sh");
    auto text = emit_document(convert(load_openapi(source)).document);
    for (auto _ : state) {
        auto parsed = parse_document(text);
        benchmark::DoNotOptimize(parsed);
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}

void BM_Emit(benchmark::State& state, const char* name) {
    const auto& source = corpus(name);
    if (source.empty()) return state.SkipWithError("corpus file missing; run scripts/fetch_corpus.sh");
    auto doc = convert(load_openapi(source)).document;
    for (auto _ : state) {
        auto text = emit_document(doc);
        benchmark::DoNotOptimize(text);
    }
}

void BM_CountTokens(benchmark::State& state, const char* name) {
    const auto& source = corpus(name);
    const auto* tokenizer = cl100k();
    if (source.empty() || !tokenizer) return state.SkipWithError("corpus or vocabulary missing");
    for (auto _ : state) benchmark::DoNotOptimize(tokenizer->count(source));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * source.size()));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Convert, petstore, "petstore.json")->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Convert, twilio, "twilio.json")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Convert, github, "github.yaml")->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK_CAPTURE(BM_ParseEmitted, twilio, "twilio.json")->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Emit, twilio, "twilio.json")->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_CountTokens, petstore, "petstore.json")->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_CountTokens, twilio, "twilio.json")->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
