#include "lapis/tokenmeter.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <climits>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

namespace lapis {

namespace {

__extension__ using int128 = __int128;

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::optional<std::string> base64_decode(std::string_view text) {
    if (text.empty() || text.size() % 4 != 0) return std::nullopt;
    std::string out(text.size() / 4 * 3, '\0');
    int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) return std::nullopt;
    // EVP_DecodeBlock keeps the zero bytes that padding stands for.
    std::size_t pad = text.size() - text.find_last_not_of('=') - 1;
    if (pad > 2) return std::nullopt;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open vocabulary file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// num/den rounded half away from zero.
int128 round_div(int128 num, int128 den) {
    if (den < 0) {
        num = -num;
        den = -den;
    }
    int128 q = (2 * (num < 0 ? -num : num) + den) / (2 * den);
    return num < 0 ? -q : q;
}

int128 pow10(int places) {
    int128 p = 1;
    for (int i = 0; i < places; ++i) p *= 10;
    return p;
}

}  // namespace

BpeTokenizer::BpeTokenizer(std::string name, std::string_view vocab_text, SplitPattern pattern)
    : name_(std::move(name)), pattern_(pattern), sha256_(sha256_hex(vocab_text)) {
    std::unordered_set<int> seen;
    int max_rank = -1;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < vocab_text.size()) {
        auto end = vocab_text.find('\n', pos);
        if (end == std::string_view::npos) end = vocab_text.size();
        std::string_view line = vocab_text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto space = line.find(' ');
        if (space == std::string_view::npos || line.find(' ', space + 1) != std::string_view::npos) {
            throw VocabError("malformed line: expected \"<base64> <rank>\"", line_no);
        }
        auto bytes = base64_decode(line.substr(0, space));
        if (!bytes) throw VocabError("malformed line: invalid base64 token", line_no);
        std::string_view rank_text = line.substr(space + 1);
        int rank = 0;
        auto [ptr, ec] = std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), rank);
        if (ec != std::errc() || ptr != rank_text.data() + rank_text.size() || rank < 0) {
            throw VocabError("malformed line: rank is not a non-negative integer", line_no);
        }
        if (!seen.insert(rank).second) throw VocabError(fmt::format("duplicate rank {}", rank), line_no);
        if (!ranks_.emplace(std::move(*bytes), rank).second) throw VocabError("duplicate token bytes", line_no);
        max_rank = std::max(max_rank, rank);
    }
    for (int b = 0; b < 256; ++b) {
        if (!ranks_.count(std::string(1, static_cast<char>(b)))) {
            throw VocabError(fmt::format("missing single-byte token 0x{:02X}", b), 0);
        }
    }
    if (static_cast<std::size_t>(max_rank + 1) != ranks_.size()) {
        throw VocabError(fmt::format("ranks are not dense: {} entries, highest rank {}", ranks_.size(), max_rank), 0);
    }
}

bool BpeTokenizer::canonical() const {
    static const std::map<std::string, std::string, std::less<>> published{
        {"cl100k_base", "223921b76ee99bde995b7ff738513eef100fb51d18c93597a113bcffe865b2a7"},
        {"o200k_base", "446a9538cb6c348e3516120d7c08b09f57c36495e2acfffe59a5bf8b0cfb1a2d"},
    };
    auto it = published.find(name_);
    return it != published.end() && it->second == sha256_;
}

int BpeTokenizer::rank_of(std::string_view bytes) const {
    auto it = ranks_.find(std::string(bytes));
    return it == ranks_.end() ? INT_MAX : it->second;
}

// Repeatedly merges the adjacent pair with the lowest rank, leftmost first.
void BpeTokenizer::encode_piece(std::string_view piece, std::vector<int>& out) const {
    if (int whole = rank_of(piece); whole != INT_MAX) {
        out.push_back(whole);
        return;
    }
    struct Part {
        std::size_t start;
        int rank;
    };
    std::vector<Part> parts;
    parts.reserve(piece.size() + 1);
    for (std::size_t i = 0; i + 1 < piece.size(); ++i) parts.push_back({i, rank_of(piece.substr(i, 2))});
    parts.push_back({piece.size() - 1, INT_MAX});
    parts.push_back({piece.size(), INT_MAX});

    auto rank_after_merge = [&](std::size_t i) {
        if (i + 3 < parts.size()) return rank_of(piece.substr(parts[i].start, parts[i + 3].start - parts[i].start));
        return INT_MAX;
    };
    for (;;) {
        int min_rank = INT_MAX;
        std::size_t at = 0;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            if (parts[i].rank < min_rank) {
                min_rank = parts[i].rank;
                at = i;
            }
        }
        if (min_rank == INT_MAX) break;
        if (at > 0) parts[at - 1].rank = rank_after_merge(at - 1);
        parts[at].rank = rank_after_merge(at);
        parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(at) + 1);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        out.push_back(rank_of(piece.substr(parts[i].start, parts[i + 1].start - parts[i].start)));
    }
}

std::vector<int> BpeTokenizer::encode(std::string_view text) const {
    std::vector<int> out;
    for (auto piece : pretokenize(text, pattern_)) encode_piece(piece, out);
    return out;
}

std::size_t BpeTokenizer::count(std::string_view text) const { return encode(text).size(); }

std::unique_ptr<BpeTokenizer> load_bpe_vocab(const std::filesystem::path& path, std::optional<SplitPattern> pattern) {
    std::string name = path.stem().string();
    if (!pattern) pattern = pattern_for_vocab(name);
    if (!pattern) {
        throw VocabError("no split rule known for vocabulary '" + name + "'; expected cl100k_base or o200k_base", 0);
    }
    return std::make_unique<BpeTokenizer>(std::move(name), read_all(path), *pattern);
}

std::size_t count_code_points(std::string_view text) {
    return static_cast<std::size_t>(
        std::count_if(text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::size_t count_lines(std::string_view text) {
    auto n = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    return !text.empty() && text.back() != '\n' ? n + 1 : n;
}

std::vector<int> ApproxTokenizer::encode(std::string_view text) const {
    std::vector<int> out;
    std::size_t chars = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if ((static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) continue;
        if (chars++ % 4 == 0) out.push_back(static_cast<int>(i));
    }
    return out;
}

std::size_t ApproxTokenizer::count(std::string_view text) const { return (count_code_points(text) + 3) / 4; }

double Decimal::value() const { return static_cast<double>(scaled) / static_cast<double>(pow10(places)); }

std::string Decimal::str() const {
    auto p = static_cast<std::int64_t>(pow10(places));
    std::int64_t mag = scaled < 0 ? -scaled : scaled;
    std::string s = scaled < 0 ? "-" : "";
    s += std::to_string(mag / p);
    if (places > 0) s += fmt::format(".{:0{}}", mag % p, places);
    return s;
}

Decimal ratio_decimal(std::int64_t num, std::int64_t den, int places) {
    if (den == 0) throw std::domain_error("division by zero");
    return {static_cast<std::int64_t>(round_div(static_cast<int128>(num) * pow10(places), den)), places};
}

const FormatSize& SizeReport::at(std::string_view format) const {
    for (const auto& [name, size] : formats) {
        if (name == format) return size;
    }
    throw std::out_of_range("no such format: " + std::string(format));
}

Decimal SizeReport::reduction_pct(std::string_view format, std::string_view tokenizer) const {
    auto base = static_cast<std::int64_t>(at(baseline).tokens.at(std::string(tokenizer)));
    auto other = static_cast<std::int64_t>(at(format).tokens.at(std::string(tokenizer)));
    return ratio_decimal(100 * (base - other), base, 1);
}

Decimal SizeReport::ratio(std::string_view format, std::string_view tokenizer) const {
    auto base = static_cast<std::int64_t>(at(baseline).tokens.at(std::string(tokenizer)));
    auto other = static_cast<std::int64_t>(at(format).tokens.at(std::string(tokenizer)));
    return ratio_decimal(other, base, 2);
}

SizeReport measure(const std::vector<std::pair<std::string, std::string>>& inputs,
                   const std::vector<const Tokenizer*>& tokenizers, std::string_view baseline) {
    auto has_baseline = std::any_of(inputs.begin(), inputs.end(), [&](const auto& in) { return in.first == baseline; });
    if (!has_baseline) throw std::invalid_argument("baseline format '" + std::string(baseline) + "' not among inputs");
    SizeReport report;
    report.baseline = baseline;
    for (const auto* t : tokenizers) report.tokenizers.push_back(t->name());
    for (const auto& [format, text] : inputs) {
        FormatSize size;
        size.chars = count_code_points(text);
        size.bytes = text.size();
        size.lines = count_lines(text);
        for (const auto* t : tokenizers) size.tokens[t->name()] = t->count(text);
        report.formats.emplace_back(format, std::move(size));
    }
    return report;
}

Decimal divergence_pct(std::size_t count1, std::size_t count2) {
    if (count1 == 0) throw std::domain_error("divergence undefined: first tokenizer counted zero tokens");
    auto c1 = static_cast<std::int64_t>(count1);
    auto c2 = static_cast<std::int64_t>(count2);
    return ratio_decimal(100 * (c2 - c1), c1, 1);
}

Decimal tokenizer_divergence(std::string_view text, const Tokenizer& t1, const Tokenizer& t2) {
    return divergence_pct(t1.count(text), t2.count(text));
}

Price Price::parse(std::string_view text) {
    std::string_view s = text;
    if (!s.empty() && s.front() == '$') s.remove_prefix(1);
    auto dot = s.find('.');
    std::string_view whole = s.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    auto digits = [](std::string_view d) { return std::all_of(d.begin(), d.end(), [](char c) { return c >= '0' && c <= '9'; }); };
    if (whole.empty() || !digits(whole) || !digits(frac) || frac.size() > 6 || whole.size() > 12 ||
        (dot != std::string_view::npos && frac.empty())) {
        throw std::invalid_argument("invalid price '" + std::string(text) + "': expected dollars like 3.00");
    }
    std::int64_t micro = 0;
    for (char c : whole) micro = micro * 10 + (c - '0');
    std::string padded(frac);
    padded.resize(6, '0');
    for (char c : padded) micro = micro * 10 + (c - '0');
    return {micro};
}

std::string CostEstimate::dollars(std::int64_t cents) { return "$" + Decimal{cents, 2}.str(); }

CostEstimate estimate_cost(std::uint64_t tokens, Price price_per_million, std::uint64_t calls) {
    if (price_per_million.micro_dollars < 0) throw std::invalid_argument("price must be non-negative");
    // tokens·micro_dollars is in 10⁻¹² dollars per call; cents are 10⁻².
    const int128 per_call_units = static_cast<int128>(tokens) * price_per_million.micro_dollars;
    const int128 unit_per_cent = pow10(10);
    CostEstimate c;
    c.per_call_cents = static_cast<std::int64_t>(round_div(per_call_units, unit_per_cent));
    c.total_cents = static_cast<std::int64_t>(round_div(per_call_units * static_cast<int128>(calls), unit_per_cent));
    return c;
}

}  // namespace lapis
