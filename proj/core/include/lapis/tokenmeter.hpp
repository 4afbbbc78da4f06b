#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lapis {

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual const std::string& name() const = 0;
    virtual std::vector<int> encode(std::string_view text) const = 0;
    virtual std::size_t count(std::string_view text) const { return encode(text).size(); }
    /// False for heuristics whose counts do not reproduce any real vocabulary.
    virtual bool exact() const { return true; }
};

/// Pre-tokenization split rule; must match the vocabulary it was trained with.
enum class SplitPattern { cl100k, o200k };

/// Splits text into pre-tokens as byte ranges of `text`. Bytes that are not
/// valid UTF-8 are classed as punctuation.
std::vector<std::string_view> pretokenize(std::string_view text, SplitPattern pattern);

/// The split rule for a known vocabulary name ("cl100k_base", "o200k_base").
std::optional<SplitPattern> pattern_for_vocab(std::string_view vocab_name);

class VocabError : public std::runtime_error {
public:
    /// `line` is 1-based; 0 for whole-file problems.
    VocabError(std::string message, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Byte-level BPE with greedy lowest-rank merging. Special tokens are never
/// recognized; every input is plain text.
class BpeTokenizer final : public Tokenizer {
public:
    /// Parses "base64 rank" lines. Ranks must be dense from 0 and every single
    /// byte must be present.
    BpeTokenizer(std::string name, std::string_view vocab_text, SplitPattern pattern);

    const std::string& name() const override { return name_; }
    std::vector<int> encode(std::string_view text) const override;
    std::size_t count(std::string_view text) const override;

    std::size_t vocab_size() const { return ranks_.size(); }
    SplitPattern pattern() const { return pattern_; }
    /// Lowercase hex SHA-256 of the vocabulary text.
    const std::string& sha256() const { return sha256_; }
    /// True when sha256() equals the published hash for this vocabulary name.
    bool canonical() const;

private:
    void encode_piece(std::string_view piece, std::vector<int>& out) const;
    int rank_of(std::string_view bytes) const;

    std::string name_;
    SplitPattern pattern_;
    std::string sha256_;
    std::unordered_map<std::string, int> ranks_;
};

/// Loads a vocabulary file. The name defaults to the file stem and selects the
/// split rule unless `pattern` is given.
std::unique_ptr<BpeTokenizer> load_bpe_vocab(const std::filesystem::path& path,
                                             std::optional<SplitPattern> pattern = std::nullopt);

/// Four UTF-8 code points per token, rounded up. For offline runs only; its
/// counts reproduce no real vocabulary.
class ApproxTokenizer final : public Tokenizer {
public:
    const std::string& name() const override { return name_; }
    /// One entry per four-code-point chunk: the chunk's byte offset.
    std::vector<int> encode(std::string_view text) const override;
    std::size_t count(std::string_view text) const override;
    bool exact() const override { return false; }

private:
    std::string name_ = "approx";
};

/// Fixed-point decimal for reported percentages, ratios and money.
struct Decimal {
    std::int64_t scaled = 0;
    int places = 0;

    double value() const;
    std::string str() const;
    bool operator==(const Decimal&) const = default;
};

/// num/den rounded half away from zero to `places` decimals. den must be nonzero.
Decimal ratio_decimal(std::int64_t num, std::int64_t den, int places);

struct FormatSize {
    std::size_t chars = 0;  // UTF-8 code points
    std::size_t bytes = 0;
    std::size_t lines = 0;
    std::map<std::string, std::size_t> tokens;  // tokenizer name to count
};

struct SizeReport {
    std::string baseline;
    std::vector<std::string> tokenizers;                 // measurement order
    std::vector<std::pair<std::string, FormatSize>> formats;  // input order

    const FormatSize& at(std::string_view format) const;
    /// 100·(1 − tokens(format)/tokens(baseline)), one decimal.
    Decimal reduction_pct(std::string_view format, std::string_view tokenizer) const;
    /// tokens(format)/tokens(baseline), two decimals.
    Decimal ratio(std::string_view format, std::string_view tokenizer) const;
};

std::size_t count_code_points(std::string_view text);
/// Newline count, plus one when the text does not end with a newline.
std::size_t count_lines(std::string_view text);

/// Counts every format with every tokenizer. Throws std::invalid_argument when
/// the baseline format is missing.
SizeReport measure(const std::vector<std::pair<std::string, std::string>>& inputs,
                   const std::vector<const Tokenizer*>& tokenizers, std::string_view baseline);

/// 100·(count₂ − count₁)/count₁, one decimal. Throws std::domain_error when
/// count₁ is zero.
Decimal tokenizer_divergence(std::string_view text, const Tokenizer& t1, const Tokenizer& t2);
Decimal divergence_pct(std::size_t count1, std::size_t count2);

/// Dollars per million tokens, held exactly in micro-dollars.
struct Price {
    std::int64_t micro_dollars = 0;

    /// Accepts "3", "3.00", "$0.15"; at most six decimals.
    static Price parse(std::string_view text);
    bool operator==(const Price&) const = default;
};

struct CostEstimate {
    std::int64_t per_call_cents = 0;
    std::int64_t total_cents = 0;

    static std::string dollars(std::int64_t cents);
};

/// per_call = tokens·price/10⁶ rounded half-up to cents; total uses the
/// unrounded per-call value times calls, rounded once.
CostEstimate estimate_cost(std::uint64_t tokens, Price price_per_million, std::uint64_t calls);

}  // namespace lapis
