#include <algorithm>
#include <cstdint>
#include <iterator>

#include "lapis/tokenmeter.hpp"

namespace lapis {

namespace {

enum class CharClass : std::uint8_t { Other, Lu, Ll, Lt, Lm, Lo, M, N, Ws };

struct ClassRange {
    char32_t lo;
    char32_t hi;
    CharClass cls;
};

constexpr ClassRange kRanges[] = {
#include "unicode_tables.inc"
};

// Unicode White_Space, which is what `\s` means in the reference patterns.
bool is_white_space(char32_t c) {
    return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
           (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

CharClass classify(char32_t c) {
    if (is_white_space(c)) return CharClass::Ws;
    auto it = std::upper_bound(std::begin(kRanges), std::end(kRanges), c,
                               [](char32_t v, const ClassRange& r) { return v < r.lo; });
    if (it == std::begin(kRanges)) return CharClass::Other;
    --it;
    return c <= it->hi ? it->cls : CharClass::Other;
}

struct Char {
    char32_t cp;
    std::uint32_t offset;
    CharClass cls;
};

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one scalar value; malformed sequences yield kInvalid for one byte.
char32_t decode(std::string_view s, std::size_t& i) {
    auto b = static_cast<unsigned char>(s[i]);
    if (b < 0x80) {
        ++i;
        return b;
    }
    int len = b >= 0xF0 && b <= 0xF4 ? 4 : b >= 0xE0 ? 3 : b >= 0xC2 && b < 0xE0 ? 2 : 0;
    if (len == 0 || i + static_cast<std::size_t>(len) > s.size()) {
        ++i;
        return kInvalid;
    }
    char32_t cp = b & (0x7F >> len);
    for (int k = 1; k < len; ++k) {
        auto c = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((c & 0xC0) != 0x80) {
            ++i;
            return kInvalid;
        }
        cp = (cp << 6) | (c & 0x3F);
    }
    bool overlong = (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
    if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++i;
        return kInvalid;
    }
    i += static_cast<std::size_t>(len);
    return cp;
}

std::vector<Char> decode_all(std::string_view text) {
    std::vector<Char> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        auto at = static_cast<std::uint32_t>(i);
        char32_t cp = decode(text, i);
        out.push_back({cp, at, cp == kInvalid ? CharClass::Other : classify(cp)});
    }
    return out;
}

// Simple case folding restricted to the letters used in contraction suffixes.
char32_t fold(char32_t c) {
    if (c >= 'A' && c <= 'Z') return c + 32;
    if (c == 0x17F) return 's';  // LATIN SMALL LETTER LONG S
    return c;
}

class Matcher {
public:
    explicit Matcher(const std::vector<Char>& chars) : c_(chars), n_(chars.size()) {}

    std::size_t cl100k(std::size_t i) const {
        if (auto end = cl100k_contraction(i)) return end;
        // [^\r\n\p{L}\p{N}]?+\p{L}++
        {
            std::size_t j = prefix(i) ? i + 1 : i;
            std::size_t k = run(j, &Matcher::letter);
            if (k > j) return k;
        }
        if (number(i)) return number_run(i);
        if (auto end = punct_run(i, false)) return end;
        std::size_t e = run(i, &Matcher::space);
        if (e == n_) return n_;  // \s++$
        for (std::size_t k = e; k > i; --k) {
            if (newline(k - 1)) return k;  // \s*[\r\n]
        }
        return e - 1 > i ? e - 1 : i + 1;  // \s+(?!\S) | \s
    }

    std::size_t o200k(std::size_t i) const {
        bool has_prefix = prefix(i);
        if (has_prefix) {
            if (auto end = lower_word(i + 1)) return end;
        }
        if (auto end = lower_word(i)) return end;
        if (has_prefix) {
            if (auto end = upper_word(i + 1)) return end;
        }
        if (auto end = upper_word(i)) return end;
        if (number(i)) return number_run(i);
        if (auto end = punct_run(i, true)) return end;
        std::size_t e = run(i, &Matcher::space);
        for (std::size_t k = e; k > i; --k) {
            if (newline(k - 1)) return k;  // \s*[\r\n]+
        }
        if (e == n_) return n_;
        return e - 1 > i ? e - 1 : e;  // \s+(?!\S) | \s+
    }

private:
    const std::vector<Char>& c_;
    std::size_t n_;

    bool at(std::size_t i, char32_t cp) const { return i < n_ && c_[i].cp == cp; }
    CharClass cls(std::size_t i) const { return c_[i].cls; }
    bool letter(std::size_t i) const {
        auto k = cls(i);
        return k == CharClass::Lu || k == CharClass::Ll || k == CharClass::Lt || k == CharClass::Lm || k == CharClass::Lo;
    }
    bool number(std::size_t i) const { return i < n_ && cls(i) == CharClass::N; }
    bool space(std::size_t i) const { return cls(i) == CharClass::Ws; }
    bool newline(std::size_t i) const { return c_[i].cp == '\r' || c_[i].cp == '\n'; }
    // [^\r\n\p{L}\p{N}]
    bool prefix(std::size_t i) const { return i < n_ && !newline(i) && !letter(i) && !number(i); }
    // [^\s\p{L}\p{N}]
    bool punct(std::size_t i) const { return i < n_ && !space(i) && !letter(i) && !number(i); }
    // [\p{Lu}\p{Lt}\p{Lm}\p{Lo}\p{M}]
    bool upper(std::size_t i) const {
        auto k = cls(i);
        return k == CharClass::Lu || k == CharClass::Lt || k == CharClass::Lm || k == CharClass::Lo || k == CharClass::M;
    }
    // [\p{Ll}\p{Lm}\p{Lo}\p{M}]
    bool lower(std::size_t i) const {
        auto k = cls(i);
        return k == CharClass::Ll || k == CharClass::Lm || k == CharClass::Lo || k == CharClass::M;
    }

    std::size_t run(std::size_t i, bool (Matcher::*pred)(std::size_t) const) const {
        while (i < n_ && (this->*pred)(i)) ++i;
        return i;
    }

    std::size_t number_run(std::size_t i) const {
        std::size_t k = i;
        while (k < n_ && k < i + 3 && number(k)) ++k;
        return k;
    }

    bool folds_to(std::size_t i, char32_t letter) const { return i < n_ && fold(c_[i].cp) == letter; }

    // '(?i:[sdmt]|ll|ve|re)
    std::size_t cl100k_contraction(std::size_t i) const {
        if (!at(i, '\'')) return 0;
        for (char32_t one : {U's', U'd', U'm', U't'}) {
            if (folds_to(i + 1, one)) return i + 2;
        }
        for (auto two : {std::pair{U'l', U'l'}, {U'v', U'e'}, {U'r', U'e'}}) {
            if (folds_to(i + 1, two.first) && folds_to(i + 2, two.second)) return i + 3;
        }
        return 0;
    }

    // (?i:'s|'t|'re|'ve|'m|'ll|'d)?, returning the length consumed.
    std::size_t o200k_contraction(std::size_t i) const {
        if (!at(i, '\'')) return 0;
        for (char32_t one : {U's', U't'}) {
            if (folds_to(i + 1, one)) return 2;
        }
        for (auto two : {std::pair{U'r', U'e'}, {U'v', U'e'}}) {
            if (folds_to(i + 1, two.first) && folds_to(i + 2, two.second)) return 3;
        }
        if (folds_to(i + 1, 'm')) return 2;
        if (folds_to(i + 1, 'l') && folds_to(i + 2, 'l')) return 3;
        if (folds_to(i + 1, 'd')) return 2;
        return 0;
    }

    // [upper]*[lower]+ contraction?, with the star backtracking.
    std::size_t lower_word(std::size_t j) const {
        if (j > n_) return 0;
        std::size_t u = run(j, &Matcher::upper);
        for (std::size_t k = u + 1; k-- > j;) {
            if (k < n_ && lower(k)) {
                std::size_t w = run(k, &Matcher::lower);
                return w + o200k_contraction(w);
            }
        }
        return 0;
    }

    // [upper]+[lower]* contraction?
    std::size_t upper_word(std::size_t j) const {
        if (j > n_) return 0;
        std::size_t u = run(j, &Matcher::upper);
        if (u == j) return 0;
        std::size_t w = run(u, &Matcher::lower);
        return w + o200k_contraction(w);
    }

    // cl100k: ' ?[^\s\p{L}\p{N}]++[\r\n]*+'; o200k adds '/' to the tail set.
    std::size_t punct_run(std::size_t i, bool slash_tail) const {
        std::size_t j = at(i, ' ') && punct(i + 1) ? i + 1 : i;
        if (!punct(j)) return 0;
        std::size_t k = run(j, &Matcher::punct);
        while (k < n_ && (newline(k) || (slash_tail && c_[k].cp == '/'))) ++k;
        return k;
    }
};

}  // namespace

std::vector<std::string_view> pretokenize(std::string_view text, SplitPattern pattern) {
    std::vector<std::string_view> pieces;
    auto chars = decode_all(text);
    Matcher m(chars);
    std::size_t i = 0;
    while (i < chars.size()) {
        std::size_t end = pattern == SplitPattern::cl100k ? m.cl100k(i) : m.o200k(i);
        std::size_t from = chars[i].offset;
        std::size_t to = end < chars.size() ? chars[end].offset : text.size();
        pieces.push_back(text.substr(from, to - from));
        i = end;
    }
    return pieces;
}

std::optional<SplitPattern> pattern_for_vocab(std::string_view vocab_name) {
    if (vocab_name == "cl100k_base") return SplitPattern::cl100k;
    if (vocab_name == "o200k_base") return SplitPattern::o200k;
    return std::nullopt;
}

}  // namespace lapis
