#include "lapis/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <set>

#include <fmt/format.h>

namespace lapis {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_blank(char c) { return c == ' ' || c == '\t'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_blank(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_blank(s.back())) s.remove_suffix(1);
    return s;
}

// Cuts a trailing `#` comment from a structured line. A `#` starts a comment
// at the beginning of the text or after whitespace, outside double quotes.
std::string_view strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (quoted) {
            if (c == '\\') ++i;
            else if (c == '"') quoted = false;
        } else if (c == '"') {
            quoted = true;
        } else if (c == '#' && (i == 0 || is_blank(s[i - 1]))) {
            return trim(s.substr(0, i));
        }
    }
    return trim(s);
}

class Cursor {
public:
    Cursor(std::string_view text, int line = 1, int column = 1) : text_(text), line_(line), column_(column) {}

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }
    std::string_view rest() const { return text_.substr(pos_); }
    int column() const { return column_ + static_cast<int>(pos_); }
    std::size_t pos() const { return pos_; }

    void skip_spaces() {
        while (!at_end() && is_blank(text_[pos_])) ++pos_;
    }

    bool consume(char c) {
        if (peek() != c) return false;
        ++pos_;
        return true;
    }

    bool consume(std::string_view s) {
        if (rest().substr(0, s.size()) != s) return false;
        pos_ += s.size();
        return true;
    }

    void expect(char c, std::string_view what) {
        if (!consume(c)) fail("expected-token", fmt::format("expected {}", what));
    }

    void expect_end(std::string_view after) {
        skip_spaces();
        if (!at_end()) fail("unexpected-token", fmt::format("unexpected '{}' after {}", rest(), after));
    }

    std::string_view identifier(std::string_view what) {
        if (!is_ident_start(peek())) fail("expected-identifier", fmt::format("expected {}", what));
        std::size_t start = pos_;
        while (!at_end() && is_ident_char(text_[pos_])) ++pos_;
        return text_.substr(start, pos_ - start);
    }

    /// Run of non-blank characters; empty at end of text.
    std::string_view token() {
        std::size_t start = pos_;
        while (!at_end() && !is_blank(text_[pos_])) ++pos_;
        return text_.substr(start, pos_ - start);
    }

    /// A type expression: stops at the first blank outside brackets.
    std::string_view type_text() {
        std::size_t start = pos_;
        int depth = 0;
        while (!at_end()) {
            char c = text_[pos_];
            if (c == '[' || c == '{') ++depth;
            else if ((c == ']' || c == '}') && depth > 0) --depth;
            else if (is_blank(c) && depth == 0) break;
            ++pos_;
        }
        return text_.substr(start, pos_ - start);
    }

    std::string quoted() {
        int start = column();
        expect('"', "'\"'");
        std::string out;
        while (!at_end()) {
            char c = text_[pos_++];
            if (c == '"') return out;
            if (c == '\\') {
                char next = peek();
                if (next != '"' && next != '\\') fail("bad-escape", "only \\\" and \\\\ escapes are allowed");
                out.push_back(next);
                ++pos_;
            } else {
                out.push_back(c);
            }
        }
        throw ParseError("unterminated-string", "unterminated quoted string", {line_, start, 1});
    }

    Literal literal() {
        if (peek() == '"') return {Literal::Kind::string, quoted()};
        std::string_view t = token();
        if (t.empty()) fail("expected-literal", "expected a default value after '='");
        std::string text(t);
        if (t == "true" || t == "false") return {Literal::Kind::boolean, text};
        if (is_integer_literal(t)) return {Literal::Kind::integer, text};
        if (is_number_literal(t)) return {Literal::Kind::number, text};
        return {Literal::Kind::bare, text};
    }

    [[noreturn]] void fail(std::string code, std::string message) const {
        throw ParseError(std::move(code), std::move(message), {line_, column(), 1});
    }

    [[noreturn]] void fail_at(std::string code, std::string message, int column, std::size_t length) const {
        throw ParseError(std::move(code), std::move(message), {line_, column, static_cast<int>(length)});
    }

    Cursor sub(std::string_view piece) const {
        auto offset = static_cast<int>(piece.data() - text_.data());
        return Cursor(piece, line_, column_ + offset);
    }

private:
    std::string_view text_;
    int line_;
    int column_;
    std::size_t pos_ = 0;
};

TypeExpr type_expr(Cursor& c) {
    c.skip_spaces();
    if (c.consume('[')) {
        TypeExpr element = type_expr(c);
        c.skip_spaces();
        c.expect(']', "']' closing the array type");
        return TypeExpr::array(std::move(element));
    }
    if (c.consume('{')) {
        c.skip_spaces();
        int col = c.column();
        std::string_view key = c.identifier("map key type 'str'");
        if (key != "str") c.fail_at("map-key-type", "map keys must be str", col, key.size());
        c.skip_spaces();
        c.expect(':', "':' after the map key type");
        TypeExpr value = type_expr(c);
        c.skip_spaces();
        c.expect('}', "'}' closing the map type");
        return TypeExpr::map(std::move(value));
    }
    std::string_view name = c.identifier("a type");
    if (auto scalar = scalar_from_string(name)) return TypeExpr::scalar(*scalar);
    return TypeExpr::named(std::string(name));
}

TypeExpr full_type_expr(Cursor c) {
    TypeExpr t = type_expr(c);
    c.expect_end("the type expression");
    return t;
}

struct Annotation {
    std::string key;
    std::optional<std::string> arg;
    std::optional<std::string> text;
    int column = 1;
};

struct FieldLine {
    std::string name;
    bool optional = false;
    TypeExpr type;
    std::optional<Literal> default_value;
    std::vector<Annotation> annotations;
};

FieldLine field_line(Cursor& c) {
    FieldLine f;
    f.name = std::string(c.identifier("a field name"));
    f.optional = c.consume('?');
    c.expect(':', "':' after the field name");
    c.skip_spaces();
    if (c.at_end()) c.fail("expected-type", "expected a type after ':'");
    f.type = full_type_expr(c.sub(c.type_text()));
    for (;;) {
        c.skip_spaces();
        if (c.at_end()) break;
        if (c.consume('=')) {
            if (f.default_value) c.fail("duplicate-default", "a field takes at most one default value");
            c.skip_spaces();
            f.default_value = c.literal();
        } else if (c.peek() == '@') {
            Annotation a;
            a.column = c.column();
            c.consume('@');
            a.key = std::string(c.identifier("an annotation name"));
            if (c.consume(':')) {
                std::string_view arg = c.token();
                if (arg.empty()) c.fail("expected-token", fmt::format("expected a value after '@{}:'", a.key));
                a.arg = std::string(arg);
            }
            if (a.key == "deprecated") {
                c.skip_spaces();
                if (c.peek() == '"') a.text = c.quoted();
            }
            f.annotations.push_back(std::move(a));
        } else {
            c.fail("unexpected-token", fmt::format("unexpected '{}' in field declaration", c.rest()));
        }
    }
    return f;
}

Field to_field(FieldLine&& line, int line_no) {
    Field f{std::move(line.name), std::move(line.type), line.optional, std::move(line.default_value), {}, {}};
    for (auto& a : line.annotations) {
        if (a.key == "since" && a.arg) {
            if (f.since) throw ParseError("duplicate-annotation", "@since given twice", {line_no, a.column, 6});
            f.since = std::move(a.arg);
        } else if (a.key == "deprecated" && !a.arg) {
            if (f.deprecated) throw ParseError("duplicate-annotation", "@deprecated given twice", {line_no, a.column, 11});
            f.deprecated = a.text.value_or("");
        } else {
            throw ParseError("unknown-annotation",
                             fmt::format("'@{}' is not a field annotation (expected @since:X or @deprecated)", a.key),
                             {line_no, a.column, static_cast<int>(a.key.size()) + 1});
        }
    }
    return f;
}

/// Location annotations only; the caller fills in the inferred location.
Param to_param(FieldLine&& line, int line_no) {
    Param p;
    p.name = std::move(line.name);
    p.type = std::move(line.type);
    p.optional = line.optional;
    p.default_value = std::move(line.default_value);
    for (auto& a : line.annotations) {
        auto loc = location_from_string(a.key);
        if (!loc || a.text) {
            throw ParseError("unknown-annotation",
                             fmt::format("'@{}' is not a parameter location (expected @path, @query, @body or @header)", a.key),
                             {line_no, a.column, static_cast<int>(a.key.size()) + 1});
        }
        if (p.location_explicit) {
            throw ParseError("duplicate-annotation", "a parameter takes one location", {line_no, a.column, 1});
        }
        p.location = *loc;
        p.location_explicit = true;
        p.wire_name = std::move(a.arg);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Flow expressions: seq := alt ('->' alt)* ; alt := atom ('|' atom)* ;
// atom := '...(' label ')' | name '*'?

FlowExpr flow_atom(Cursor& c) {
    c.skip_spaces();
    if (c.consume("...(")) {
        std::string label;
        while (!c.at_end() && c.peek() != ')') {
            label.push_back(c.peek());
            c.consume(c.peek());
        }
        c.expect(')', "')' closing the wait label");
        return FlowExpr::wait(std::move(label));
    }
    if (c.at_end() || c.peek() == '|' || c.peek() == '-') {
        c.fail("empty-flow-step", "expected a step name or '...(label)'");
    }
    std::string name(c.identifier("a step name"));
    bool repeated = c.consume('*');
    return FlowExpr::step(std::move(name), repeated);
}

FlowExpr flow_alternatives(Cursor& c) {
    std::vector<FlowExpr> arms;
    arms.push_back(flow_atom(c));
    for (;;) {
        c.skip_spaces();
        if (!c.consume('|')) break;
        arms.push_back(flow_atom(c));
    }
    if (arms.size() == 1) return std::move(arms.front());
    return FlowExpr::branch(std::move(arms));
}

FlowExpr flow_expression(Cursor c) {
    std::vector<FlowExpr> steps;
    steps.push_back(flow_alternatives(c));
    for (;;) {
        c.skip_spaces();
        if (c.at_end()) break;
        if (!c.consume("->")) c.fail("expected-token", fmt::format("expected '->' or '|' before '{}'", c.rest()));
        c.skip_spaces();
        if (c.at_end()) c.fail("dangling-arrow", "'->' must be followed by a step");
        steps.push_back(flow_alternatives(c));
    }
    if (steps.size() == 1) return std::move(steps.front());
    return FlowExpr::seq(std::move(steps));
}

AuthSpec auth_spec(Cursor c) {
    c.skip_spaces();
    int col = c.column();
    std::string_view scheme = c.token();
    AuthSpec a;
    if (scheme == "bearer") a.scheme = AuthScheme::bearer;
    else if (scheme == "apikey") a.scheme = AuthScheme::apikey;
    else if (scheme == "basic") a.scheme = AuthScheme::basic;
    else if (scheme == "oauth2") a.scheme = AuthScheme::oauth2;
    else if (scheme == "none") a.scheme = AuthScheme::none;
    else {
        c.fail_at("unknown-auth-scheme",
                  fmt::format("unknown auth scheme '{}' (expected bearer, apikey, basic, oauth2 or none)", scheme), col,
                  scheme.size());
    }
    c.skip_spaces();
    if (c.at_end()) return a;
    col = c.column();
    std::string_view pair = c.token();
    auto colon = pair.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == pair.size()) {
        c.fail_at("malformed-auth", fmt::format("expected location:name, got '{}'", pair), col, pair.size());
    }
    auto where = pair.substr(0, colon);
    if (where == "header") a.location = CredentialLocation::header;
    else if (where == "query") a.location = CredentialLocation::query;
    else if (where == "cookie") a.location = CredentialLocation::cookie;
    else {
        c.fail_at("malformed-auth", fmt::format("unknown credential location '{}'", where), col, where.size());
    }
    a.name = std::string(pair.substr(colon + 1));
    c.expect_end("the auth credential");
    return a;
}

// ---------------------------------------------------------------------------

struct Line {
    int number = 0;
    int indent = 0;
    std::string_view text;  // after indentation, right-trimmed
};

enum class Section { meta, types, ops, webhooks, errors, limits, flows };

constexpr std::array<std::string_view, 7> kSectionNames{"meta", "types", "ops", "webhooks", "errors", "limits", "flows"};

constexpr std::string_view kBaseStructure = "# Base structure:";

class DocumentParser {
public:
    DocumentParser(std::string_view text, const ParseOptions& options) : options_(options) {
        source_.reserve(text.size());
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
            source_.push_back(text[i]);
        }
    }

    ParseResult run() {
        split_lines();
        std::array<bool, 7> seen{};
        int last_rank = -1;
        std::size_t i = 0;
        while (i < lines_.size()) {
            const Line& head = lines_[i];
            if (!is_section_header(head)) {
                error("content-outside-section", head, "expected a section header such as [meta] or [ops]");
                ++i;
                continue;
            }
            std::size_t end = i + 1;
            while (end < lines_.size() && !is_section_header(lines_[end])) ++end;
            std::string_view name = strip_comment(head.text);
            name = name.substr(1, name.size() - 2);
            auto it = std::find(kSectionNames.begin(), kSectionNames.end(), name);
            if (it == kSectionNames.end()) {
                error("unknown-section", head, fmt::format("unknown section [{}]", name));
            } else {
                int rank = static_cast<int>(it - kSectionNames.begin());
                if (seen[rank]) {
                    error("duplicate-section", head, fmt::format("section [{}] appears more than once", name));
                } else {
                    if (rank < last_rank) {
                        warn("section-order", head,
                             fmt::format("section [{}] is out of order (expected meta, types, ops, webhooks, "
                                         "errors, limits, flows)", name));
                    }
                    last_rank = std::max(last_rank, rank);
                    seen[rank] = true;
                    record(std::string(name), head);
                    parse_section(static_cast<Section>(rank), i + 1, end);
                }
            }
            i = end;
        }
        if (options_.require_core_sections) {
            for (int rank : {0, 2}) {
                if (!seen[rank]) {
                    result_.diagnostics.push_back({Severity::error, "missing-section",
                                                   fmt::format("required section [{}] absent", kSectionNames[rank]),
                                                   std::string(kSectionNames[rank]), SourceSpan{1, 1, 0}});
                }
            }
        }
        if (seen[0] && options_.require_core_sections) {
            for (std::string_view key : {"api", "base"}) {
                if (!meta_keys_seen_.count(key)) {
                    result_.diagnostics.push_back({Severity::error, "missing-meta-field",
                                                   fmt::format("[meta] requires '{}'", key), "meta",
                                                   meta_span_});
                }
            }
        }
        if (doc_.errors && !doc_.errors->base_type && doc_.errors->entries.empty()) doc_.errors.reset();
        if (doc_.limits && !doc_.limits->on_exceed && doc_.limits->plans.empty()) doc_.limits.reset();
        std::stable_sort(result_.diagnostics.begin(), result_.diagnostics.end(), [](const auto& a, const auto& b) {
            return a.span->line < b.span->line;
        });
        if (!has_errors(result_.diagnostics)) result_.document = std::move(doc_);
        return std::move(result_);
    }

private:
    const ParseOptions& options_;
    std::string source_;
    std::vector<Line> lines_;
    LapisDocument doc_;
    ParseResult result_;
    std::set<std::string, std::less<>> meta_keys_seen_;
    SourceSpan meta_span_{1, 1, 0};

    int unit() const { return options_.indent_width; }

    void split_lines() {
        std::string_view text(source_);
        int number = 0;
        while (!text.empty() || number == 0) {
            ++number;
            auto nl = text.find('\n');
            std::string_view raw = text.substr(0, nl);
            text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
            while (!raw.empty() && (is_blank(raw.back()) || raw.back() == '\r')) raw.remove_suffix(1);
            std::size_t indent = 0;
            while (indent < raw.size() && is_blank(raw[indent])) {
                if (raw[indent] == '\t') break;
                ++indent;
            }
            if (indent < raw.size() && raw[indent] == '\t') {
                result_.diagnostics.push_back({Severity::error, "tab-indent",
                                               "tab character in indentation; indent with spaces", "",
                                               SourceSpan{number, static_cast<int>(indent) + 1, 1}});
                if (nl == std::string_view::npos) break;
                continue;
            }
            std::string_view content = raw.substr(indent);
            bool comment = !content.empty() && content.front() == '#' &&
                           !(indent == 0 && content.substr(0, kBaseStructure.size()) == kBaseStructure);
            if (!content.empty() && !comment) lines_.push_back({number, static_cast<int>(indent), content});
            if (nl == std::string_view::npos) break;
        }
    }

    static bool is_section_header(const Line& line) {
        if (line.indent != 0 || line.text.front() != '[') return false;
        std::string_view s = strip_comment(line.text);
        return s.size() >= 2 && s.back() == ']';
    }

    // -- diagnostics --------------------------------------------------------

    void error(std::string code, const Line& line, std::string message) {
        result_.diagnostics.push_back({Severity::error, std::move(code), std::move(message), "",
                                       SourceSpan{line.number, line.indent + 1, static_cast<int>(line.text.size())}});
    }
    void warn(std::string code, const Line& line, std::string message) {
        result_.diagnostics.push_back({Severity::warning, std::move(code), std::move(message), "",
                                       SourceSpan{line.number, line.indent + 1, static_cast<int>(line.text.size())}});
    }
    void report(const ParseError& e) {
        result_.diagnostics.push_back({Severity::error, e.code(), e.what(), "", e.span()});
    }
    void record(std::string subject, const Line& line) {
        result_.locations.emplace(std::move(subject),
                                  SourceSpan{line.number, line.indent + 1, static_cast<int>(line.text.size())});
    }

    Cursor cursor(const Line& line, std::string_view text) const {
        return Cursor(text, line.number, line.indent + 1 + static_cast<int>(text.data() - line.text.data()));
    }
    Cursor cursor(const Line& line) const { return cursor(line, line.text); }

    // -- entries ------------------------------------------------------------

    struct Entry {
        const Line* head;
        std::vector<const Line*> children;
    };

    std::vector<Entry> entries(std::size_t begin, std::size_t end) {
        std::vector<Entry> out;
        for (std::size_t i = begin; i < end; ++i) {
            const Line& line = lines_[i];
            if (line.indent == 0) {
                out.push_back({&line, {}});
            } else if (out.empty()) {
                error("unexpected-indent", line, "indented line without a parent entry");
            } else {
                out.back().children.push_back(&line);
            }
        }
        return out;
    }

    /// Children must sit exactly one unit deeper (two for flow continuations).
    bool check_child_indent(const Line& line, bool allow_continuation = false) {
        if (line.indent == unit() || (allow_continuation && line.indent == 2 * unit())) return true;
        error("bad-indent", line,
              fmt::format("expected an indent of {} spaces, found {}", unit(), line.indent));
        return false;
    }

    void reject_children(const Entry& e, std::string_view what) {
        for (const Line* c : e.children) error("unexpected-line", *c, fmt::format("{} takes no indented lines", what));
    }

    void parse_section(Section section, std::size_t begin, std::size_t end) {
        switch (section) {
            case Section::meta: parse_meta(begin, end); break;
            case Section::types:
                for (auto& e : entries(begin, end)) guarded([&] { parse_type(e); });
                break;
            case Section::ops:
                for (auto& e : entries(begin, end)) guarded([&] { parse_op(e); });
                break;
            case Section::webhooks:
                for (auto& e : entries(begin, end)) guarded([&] { parse_webhook(e); });
                break;
            case Section::errors:
                doc_.errors.emplace();
                for (auto& e : entries(begin, end)) guarded([&] { parse_error_entry(e); });
                break;
            case Section::limits:
                doc_.limits.emplace();
                for (auto& e : entries(begin, end)) guarded([&] { parse_limit_entry(e); });
                break;
            case Section::flows:
                for (auto& e : entries(begin, end)) guarded([&] { parse_flow(e); });
                break;
        }
    }

    template <typename F>
    void guarded(F&& f) {
        try {
            f();
        } catch (const ParseError& e) {
            report(e);
        }
    }

    // -- [meta] -------------------------------------------------------------

    void parse_meta(std::size_t begin, std::size_t end) {
        if (begin < end) meta_span_ = {lines_[begin].number, 1, 0};
        for (std::size_t i = begin; i < end; ++i) {
            const Line& line = lines_[i];
            if (line.indent != 0) {
                error("unexpected-indent", line, "[meta] entries are not indented");
                continue;
            }
            auto colon = line.text.find(':');
            std::string_view key = line.text.substr(0, colon);
            if (colon == std::string_view::npos || !is_identifier(key)) {
                error("malformed-meta", line, "expected 'key: value'");
                continue;
            }
            if (meta_keys_seen_.count(key)) {
                error("duplicate-meta-key", line, fmt::format("meta key '{}' given twice", key));
                continue;
            }
            meta_keys_seen_.emplace(key);
            std::string_view raw = trim(line.text.substr(colon + 1));
            record("meta." + std::string(key), line);
            Meta& m = doc_.meta;
            if (key == "api") {
                m.api = std::string(raw);
            } else if (key == "desc") {
                m.desc = std::string(raw);
            } else if (key == "base") {
                m.base = std::string(strip_comment(raw));
            } else if (key == "version") {
                m.version = std::string(strip_comment(raw));
            } else if (key == "auth") {
                std::string_view value = strip_comment(raw);
                guarded([&] { m.auth = auth_spec(cursor(line, value)); });
            } else {
                warn("unknown-meta-key", line, fmt::format("unknown meta key '{}' ignored", key));
            }
        }
    }

    // -- [types] ------------------------------------------------------------

    void parse_type(const Entry& e) {
        const Line& head = *e.head;
        Cursor c = cursor(head, strip_comment(head.text));
        TypeDef t;
        t.name = std::string(c.identifier("a type name"));
        c.expect(':', "':' after the type name");
        c.skip_spaces();
        record("type:" + t.name, head);
        if (!c.at_end()) {
            EnumBody body;
            std::string_view rest = c.rest();
            std::size_t start = 0;
            for (;;) {
                auto bar = rest.find('|', start);
                std::string_view v = trim(rest.substr(start, bar == std::string_view::npos ? bar : bar - start));
                if (v.empty()) c.fail("empty-enum-variant", "empty enum variant");
                body.variants.emplace_back(v);
                if (bar == std::string_view::npos) break;
                start = bar + 1;
            }
            t.body = std::move(body);
            reject_children(e, "an enum");
        } else {
            ObjectBody body;
            for (const Line* child : e.children) {
                if (!check_child_indent(*child)) continue;
                guarded([&] {
                    Cursor fc = cursor(*child, strip_comment(child->text));
                    Field f = to_field(field_line(fc), child->number);
                    record("type:" + t.name + "." + f.name, *child);
                    body.fields.push_back(std::move(f));
                });
            }
            t.body = std::move(body);
        }
        doc_.types.push_back(std::move(t));
    }

    // -- [ops] --------------------------------------------------------------

    HttpMethod method(Cursor& c) {
        int col = c.column();
        std::string_view m = c.token();
        auto parsed = method_from_string(m);
        if (!parsed) {
            c.fail_at("unknown-method", fmt::format("expected an HTTP method, got '{}'", m), col, m.size());
        }
        return *parsed;
    }

    std::string route(Cursor& c) {
        c.skip_spaces();
        if (c.peek() != '/') c.fail("expected-path", "expected a route starting with '/'");
        return std::string(c.token());
    }

    Param param(const Line& line, std::string_view text, const std::vector<std::string>& route_params,
                ParamLocation fallback) {
        Cursor c = cursor(line, text);
        Param p = to_param(field_line(c), line.number);
        if (!p.location_explicit) {
            bool in_route = std::find(route_params.begin(), route_params.end(), p.name) != route_params.end();
            p.location = in_route ? ParamLocation::path : fallback;
        }
        return p;
    }

    static bool looks_like_field(std::string_view s) {
        std::size_t i = 0;
        if (s.empty() || !is_ident_start(s[0])) return false;
        while (i < s.size() && is_ident_char(s[i])) ++i;
        if (i < s.size() && s[i] == '?') ++i;
        return i < s.size() && s[i] == ':';
    }

    void parse_op(const Entry& e) {
        const Line& head = *e.head;
        Operation op;
        {
            Cursor c = cursor(head, strip_comment(head.text));
            op.name = std::string(c.identifier("an operation name"));
            c.skip_spaces();
            op.method = method(c);
            op.path = route(c);
            for (;;) {
                c.skip_spaces();
                if (c.at_end()) break;
                int col = c.column();
                if (!c.consume('+')) c.fail("unexpected-token", fmt::format("expected a +modifier, got '{}'", c.rest()));
                std::string_view mod = c.token();
                bool* flag = mod == "paginated"    ? &op.modifiers.paginated
                             : mod == "idempotent" ? &op.modifiers.idempotent
                             : mod == "stream"     ? &op.modifiers.stream
                             : mod == "deprecated" ? &op.modifiers.deprecated
                                                   : nullptr;
                if (flag == nullptr) {
                    c.fail_at("unknown-modifier", fmt::format("unknown modifier '+{}'", mod), col, mod.size() + 1);
                }
                *flag = true;
            }
        }
        std::string subject = "op:" + op.name;
        record(subject, head);
        auto route_params = path_template_params(op.path);
        ParamLocation fallback = default_location(op.method);
        bool markers_seen = false;
        bool typed_output = false;
        for (const Line* child : e.children) {
            if (!check_child_indent(*child)) continue;
            std::string_view t = child->text;
            if (t.front() == '>') {
                markers_seen = true;
                guarded([&] {
                    Param p = param(*child, strip_comment(trim(t.substr(1))), route_params, fallback);
                    record(subject + ">" + p.name, *child);
                    op.inputs.push_back(std::move(p));
                });
            } else if (t.front() == '<') {
                markers_seen = true;
                guarded([&] {
                    std::string_view body = strip_comment(trim(t.substr(1)));
                    if (typed_output) {
                        throw ParseError("duplicate-output", "an operation has a single output",
                                         {child->number, child->indent + 1, 1});
                    }
                    if (looks_like_field(body)) {
                        if (op.output && !std::holds_alternative<ObjectBody>(*op.output)) {
                            throw ParseError("duplicate-output", "an operation has a single output",
                                             {child->number, child->indent + 1, 1});
                        }
                        if (!op.output) op.output = ObjectBody{};
                        Cursor fc = cursor(*child, body);
                        Field f = to_field(field_line(fc), child->number);
                        record(subject + "<" + f.name, *child);
                        std::get<ObjectBody>(*op.output).fields.push_back(std::move(f));
                    } else {
                        if (op.output) {
                            throw ParseError("duplicate-output", "an operation has a single output",
                                             {child->number, child->indent + 1, 1});
                        }
                        op.output = full_type_expr(cursor(*child, body));
                        typed_output = true;
                        record(subject + "<", *child);
                    }
                });
            } else if (markers_seen) {
                error("misplaced-description", *child, "description lines must precede '>' and '<' lines");
            } else {
                op.desc.emplace_back(t);
            }
        }
        doc_.ops.push_back(std::move(op));
    }

    // -- [webhooks] ---------------------------------------------------------

    void parse_webhook(const Entry& e) {
        const Line& head = *e.head;
        Webhook w;
        {
            Cursor c = cursor(head, strip_comment(head.text));
            w.name = std::string(c.identifier("a webhook name"));
            c.skip_spaces();
            if (!c.consume("->")) c.fail("expected-token", "expected '->' after the webhook name");
            c.skip_spaces();
            w.method = method(c);
            w.path = route(c);
            c.expect_end("the webhook route");
        }
        std::string subject = "webhook:" + w.name;
        record(subject, head);
        bool has_trigger = false;
        for (const Line* child : e.children) {
            if (!check_child_indent(*child)) continue;
            std::string_view t = child->text;
            if (t.front() == '!') {
                if (has_trigger) {
                    error("duplicate-trigger", *child, "a webhook has one '!' trigger line");
                    continue;
                }
                has_trigger = true;
                w.trigger = std::string(trim(t.substr(1)));
            } else if (t.front() == '<') {
                guarded([&] {
                    Param p = param(*child, strip_comment(trim(t.substr(1))), {}, ParamLocation::body);
                    record(subject + "<" + p.name, *child);
                    w.payload.push_back(std::move(p));
                });
            } else {
                error("unexpected-line", *child, "webhook lines start with '!' or '<'");
            }
        }
        doc_.webhooks.push_back(std::move(w));
    }

    // -- [errors] -----------------------------------------------------------

    void parse_error_entry(const Entry& e) {
        const Line& head = *e.head;
        ErrorSection& section = *doc_.errors;
        if (head.text.substr(0, kBaseStructure.size()) == kBaseStructure) {
            Cursor c = cursor(head, strip_comment(head.text.substr(kBaseStructure.size())));
            c.skip_spaces();
            std::string name(c.identifier("a base type name"));
            c.expect_end("the base structure");
            if (section.base_type) {
                error("duplicate-base-structure", head, "base structure declared twice");
                return;
            }
            section.base_type = std::move(name);
            record("errors", head);
            reject_children(e, "the base structure line");
            return;
        }
        Cursor c = cursor(head, strip_comment(head.text));
        ErrorDef def;
        int col = c.column();
        std::string_view code = c.token();
        auto [ptr, ec] = std::from_chars(code.data(), code.data() + code.size(), def.code);
        if (code.size() != 3 || ec != std::errc{} || ptr != code.data() + code.size()) {
            throw ParseError("expected-status", fmt::format("expected a three-digit status code, got '{}'", code),
                             {head.number, col, static_cast<int>(code.size())});
        }
        c.skip_spaces();
        def.label = std::string(c.identifier("an error label"));
        c.skip_spaces();
        if (c.consume("@ops:")) {
            for (;;) {
                def.ops.emplace_back(c.identifier("an operation name"));
                if (!c.consume(',')) break;
            }
        }
        c.expect_end("the error declaration");
        std::string subject = fmt::format("error:{}:{}", def.code, def.label);
        record(subject, head);
        for (const Line* child : e.children) {
            if (!check_child_indent(*child)) continue;
            std::string_view t = child->text;
            if (t.front() == '~') {
                guarded([&] {
                    Cursor fc = cursor(*child, strip_comment(trim(t.substr(1))));
                    Field f = to_field(field_line(fc), child->number);
                    record(subject + "~" + f.name, *child);
                    def.extra_fields.push_back(std::move(f));
                });
            } else {
                if (!def.desc.empty()) def.desc += ' ';
                def.desc += t;
            }
        }
        section.entries.push_back(std::move(def));
    }

    // -- [limits] -----------------------------------------------------------

    RateSpec rate(Cursor c) {
        RateSpec r;
        c.skip_spaces();
        int col = c.column();
        std::string_view spec = c.token();
        auto slash = spec.find('/');
        std::string_view amount = spec.substr(0, slash);
        auto [ptr, ec] = std::from_chars(amount.data(), amount.data() + amount.size(), r.amount);
        auto period = slash == std::string_view::npos ? std::nullopt : period_from_string(spec.substr(slash + 1));
        if (amount.empty() || ec != std::errc{} || ptr != amount.data() + amount.size() || !period) {
            c.fail_at("malformed-rate", fmt::format("expected N/period (s, m, h, d, mo), got '{}'", spec), col,
                      spec.size());
        }
        r.period = *period;
        c.skip_spaces();
        if (c.consume('@')) {
            std::string_view scope = c.token();
            if (scope.empty()) c.fail("expected-token", "expected a scope after '@'");
            r.scope = std::string(scope);
            c.skip_spaces();
        }
        if (c.peek() == '"') r.note = c.quoted();
        c.expect_end("the rate");
        return r;
    }

    void parse_limit_entry(const Entry& e) {
        const Line& head = *e.head;
        LimitsSection& limits = *doc_.limits;
        Cursor c = cursor(head, strip_comment(head.text));
        std::string_view key = c.identifier("'on_exceed:' or 'plan:'");
        c.expect(':', "':'");
        c.skip_spaces();
        if (key == "on_exceed") {
            if (limits.on_exceed) throw ParseError("duplicate-on-exceed", "on_exceed given twice", {head.number, 1, 9});
            OnExceed o;
            std::string_view code = c.token();
            auto [ptr, ec] = std::from_chars(code.data(), code.data() + code.size(), o.code);
            if (code.empty() || ec != std::errc{} || ptr != code.data() + code.size()) {
                c.fail("expected-status", "expected a status code after 'on_exceed:'");
            }
            c.skip_spaces();
            o.behavior = std::string(c.token());
            if (o.behavior.empty()) c.fail("expected-token", "expected a behavior after the status code");
            c.expect_end("on_exceed");
            limits.on_exceed = std::move(o);
            record("limits", head);
            reject_children(e, "on_exceed");
            return;
        }
        if (key != "plan") c.fail("unexpected-token", fmt::format("expected 'on_exceed:' or 'plan:', got '{}:'", key));
        Plan plan;
        plan.name = std::string(c.token());
        if (plan.name.empty()) c.fail("expected-token", "expected a plan name");
        c.expect_end("the plan name");
        record("plan:" + plan.name, head);
        for (const Line* child : e.children) {
            if (!check_child_indent(*child)) continue;
            guarded([&] {
                Cursor cc = cursor(*child, strip_comment(child->text));
                std::string_view kind = cc.identifier("'rate:' or 'quota:'");
                cc.expect(':', "':'");
                if (kind == "rate") plan.rates.push_back(rate(cc.sub(cc.rest())));
                else if (kind == "quota") plan.quotas.push_back(rate(cc.sub(cc.rest())));
                else cc.fail("unexpected-token", fmt::format("expected 'rate:' or 'quota:', got '{}:'", kind));
            });
        }
        limits.plans.push_back(std::move(plan));
    }

    // -- [flows] ------------------------------------------------------------

    void parse_flow(const Entry& e) {
        const Line& head = *e.head;
        Cursor c = cursor(head, strip_comment(head.text));
        Flow flow;
        flow.name = std::string(c.identifier("a flow name"));
        c.skip_spaces();
        if (c.peek() == '"') flow.title = c.quoted();
        c.expect_end("the flow header");
        std::string subject = "flow:" + flow.name;
        record(subject, head);

        std::string expr;
        const Line* expr_line = nullptr;
        bool conditions_started = false;
        for (const Line* child : e.children) {
            if (!check_child_indent(*child, true)) continue;
            std::string_view t = child->text;
            if (child->indent == 2 * unit()) {
                if (expr_line == nullptr || conditions_started) {
                    error("unexpected-indent", *child, "continuation line without a flow expression to continue");
                } else {
                    expr += ' ';
                    expr += strip_comment(t);
                }
            } else if (t.front() == '?') {
                conditions_started = true;
                guarded([&] {
                    Cursor cc = cursor(*child, t.substr(1));
                    cc.skip_spaces();
                    FlowCondition cond;
                    cond.branch = std::string(cc.identifier("a step name"));
                    cc.expect(':', "':' after the condition's step name");
                    cond.prose = std::string(trim(cc.rest()));
                    record(subject + "?" + cond.branch, *child);
                    flow.conditions.push_back(std::move(cond));
                });
            } else if (expr_line != nullptr) {
                error("unexpected-line", *child, "a flow has one expression; wrap it with deeper-indented lines");
            } else {
                expr_line = child;
                expr = strip_comment(t);
            }
        }
        if (expr_line == nullptr) {
            error("missing-flow-expr", head, fmt::format("flow '{}' has no expression", flow.name));
            return;
        }
        try {
            flow.expr = flow_expression(Cursor(expr, expr_line->number, expr_line->indent + 1));
        } catch (const ParseError& err) {
            report(err);
            return;
        }
        doc_.flows.push_back(std::move(flow));
    }
};

}  // namespace

ParseResult parse_document(std::string_view text, const ParseOptions& options) {
    if (options.indent_width < 1) throw std::invalid_argument("indent_width must be at least 1");
    return DocumentParser(text, options).run();
}

TypeExpr parse_type_expr(std::string_view text) { return full_type_expr(Cursor(text)); }

AuthSpec parse_auth(std::string_view text) { return auth_spec(Cursor(text)); }

FlowExpr parse_flow_expr(std::string_view text) { return flow_expression(Cursor(text)); }

void locate(std::vector<Diagnostic>& diagnostics, const SourceMap& locations) {
    for (auto& d : diagnostics) {
        if (d.span) continue;
        auto it = locations.find(d.subject);
        if (it == locations.end() && d.subject.rfind("meta", 0) == 0) it = locations.find("meta.api");
        if (it != locations.end()) d.span = it->second;
    }
}

}  // namespace lapis
