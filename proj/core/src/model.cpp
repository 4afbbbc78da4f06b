#include "lapis/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

#include <fmt/format.h>

namespace lapis {

namespace {

constexpr std::array<std::pair<ScalarKind, std::string_view>, 8> kScalarNames{{
    {ScalarKind::str, "str"},
    {ScalarKind::int_, "int"},
    {ScalarKind::float_, "float"},
    {ScalarKind::bool_, "bool"},
    {ScalarKind::date, "date"},
    {ScalarKind::datetime, "datetime"},
    {ScalarKind::file, "file"},
    {ScalarKind::any, "any"},
}};

constexpr std::array<std::pair<HttpMethod, std::string_view>, 7> kMethodNames{{
    {HttpMethod::get, "GET"},
    {HttpMethod::post, "POST"},
    {HttpMethod::put, "PUT"},
    {HttpMethod::patch, "PATCH"},
    {HttpMethod::delete_, "DELETE"},
    {HttpMethod::head, "HEAD"},
    {HttpMethod::options, "OPTIONS"},
}};

constexpr std::array<std::pair<ParamLocation, std::string_view>, 4> kLocationNames{{
    {ParamLocation::path, "path"},
    {ParamLocation::query, "query"},
    {ParamLocation::body, "body"},
    {ParamLocation::header, "header"},
}};

constexpr std::array<std::pair<RatePeriod, std::string_view>, 5> kPeriodNames{{
    {RatePeriod::second, "s"},
    {RatePeriod::minute, "m"},
    {RatePeriod::hour, "h"},
    {RatePeriod::day, "d"},
    {RatePeriod::month, "mo"},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum value) {
    for (const auto& [e, name] : table) {
        if (e == value) return name;
    }
    return "?";
}

template <typename Enum, std::size_t N>
std::optional<Enum> value_of(const std::array<std::pair<Enum, std::string_view>, N>& table,
                             std::string_view text) {
    for (const auto& [e, name] : table) {
        if (name == text) return e;
    }
    return std::nullopt;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_quotable(std::string_view s) {
    return s.find('\n') == std::string_view::npos && s.find('\r') == std::string_view::npos;
}

bool is_token(std::string_view s) {
    return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) { return is_space(c) || c == '#' || c == '"'; });
}

bool is_upper_camel(std::string_view s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s.front())); }

bool is_snake(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

bool is_absolute_url(std::string_view url) {
    auto colon = url.find("://");
    if (colon == std::string_view::npos || colon == 0) return false;
    if (!std::isalpha(static_cast<unsigned char>(url.front()))) return false;
    for (std::size_t i = 0; i < colon; ++i) {
        char c = url[i];
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return false;
    }
    auto rest = url.substr(colon + 3);
    return !rest.empty() && rest.front() != '/' &&
           std::none_of(url.begin(), url.end(), [](char c) { return is_space(c); });
}

// ---------------------------------------------------------------------------

class Validator {
public:
    explicit Validator(const LapisDocument& doc) : doc_(doc) {}

    std::vector<Diagnostic> run() {
        index();
        check_meta();
        check_types();
        check_ops();
        check_webhooks();
        check_errors();
        check_limits();
        check_flows();
        return std::move(out_);
    }

private:
    const LapisDocument& doc_;
    std::vector<Diagnostic> out_;
    std::vector<std::pair<std::string, const TypeDef*>> types_;  // sorted by name

    void error(std::string code, std::string subject, std::string message) {
        out_.push_back({Severity::error, std::move(code), std::move(message), std::move(subject), std::nullopt});
    }
    void warning(std::string code, std::string subject, std::string message) {
        out_.push_back({Severity::warning, std::move(code), std::move(message), std::move(subject), std::nullopt});
    }

    void index() {
        for (const auto& t : doc_.types) types_.emplace_back(t.name, &t);
        std::stable_sort(types_.begin(), types_.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
    }

    const TypeDef* find_type(std::string_view name) const {
        auto it = std::lower_bound(types_.begin(), types_.end(), name,
                                   [](const auto& entry, std::string_view n) { return entry.first < n; });
        if (it != types_.end() && it->first == name) return it->second;
        return nullptr;
    }

    bool op_exists(std::string_view name) const {
        return std::any_of(doc_.ops.begin(), doc_.ops.end(), [&](const Operation& op) { return op.name == name; });
    }

    bool step_exists(std::string_view name) const {
        return op_exists(name) || std::any_of(doc_.webhooks.begin(), doc_.webhooks.end(),
                                              [&](const Webhook& w) { return w.name == name; });
    }

    void check_identifier(std::string_view name, const std::string& subject, std::string_view what) {
        if (!is_identifier(name)) {
            error("invalid-identifier", subject, fmt::format("{} '{}' is not a valid identifier", what, name));
        }
    }

    void check_prose(std::string_view text, const std::string& subject, std::string_view what) {
        if (!is_prose_line(text)) {
            error("invalid-prose", subject,
                  fmt::format("{} must be a single trimmed line not starting with a marker: '{}'", what, text));
        }
    }

    void check_quoted(std::string_view text, const std::string& subject, std::string_view what) {
        if (!is_quotable(text)) {
            error("invalid-quoted-text", subject, fmt::format("{} cannot contain line breaks", what));
        }
    }

    void check_type_expr(const TypeExpr& t, const std::string& subject) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, NamedType>) {
                    if (find_type(node.name) == nullptr) {
                        error("dangling-type-ref", subject, fmt::format("dangling type reference '{}'", node.name));
                    }
                } else if constexpr (std::is_same_v<T, ArrayType>) {
                    check_type_expr(*node.element, subject);
                } else if constexpr (std::is_same_v<T, MapType>) {
                    check_type_expr(*node.value, subject);
                }
            },
            t.node);
    }

    void check_literal(const Literal& lit, const std::string& subject) {
        bool ok = true;
        switch (lit.kind) {
            case Literal::Kind::string: ok = is_quotable(lit.text); break;
            case Literal::Kind::integer: ok = is_integer_literal(lit.text); break;
            case Literal::Kind::number: ok = is_number_literal(lit.text); break;
            case Literal::Kind::boolean: ok = lit.text == "true" || lit.text == "false"; break;
            case Literal::Kind::bare: ok = is_bare_token(lit.text); break;
        }
        if (!ok) error("invalid-literal", subject, fmt::format("malformed default value '{}'", lit.text));
    }

    void check_default(const TypeExpr& type, const Literal& lit, const std::string& subject) {
        check_literal(lit, subject);
        using K = Literal::Kind;
        bool compatible = false;
        if (const auto* s = std::get_if<ScalarType>(&type.node)) {
            switch (s->kind) {
                case ScalarKind::str:
                case ScalarKind::date:
                case ScalarKind::datetime: compatible = lit.kind == K::string || lit.kind == K::bare; break;
                case ScalarKind::int_: compatible = lit.kind == K::integer; break;
                case ScalarKind::float_: compatible = lit.kind == K::integer || lit.kind == K::number; break;
                case ScalarKind::bool_: compatible = lit.kind == K::boolean; break;
                case ScalarKind::any: compatible = true; break;
                case ScalarKind::file: compatible = false; break;
            }
        } else if (const auto* n = std::get_if<NamedType>(&type.node)) {
            const TypeDef* def = find_type(n->name);
            if (def == nullptr) return;  // reported as dangling
            if (const auto* e = std::get_if<EnumBody>(&def->body)) {
                compatible = (lit.kind == K::string || lit.kind == K::bare) &&
                             std::find(e->variants.begin(), e->variants.end(), lit.text) != e->variants.end();
            }
        }
        if (!compatible) {
            error("default-type-mismatch", subject, fmt::format("default '{}' does not fit the declared type", lit.text));
        }
    }

    void check_field(const Field& f, const std::string& subject) {
        check_identifier(f.name, subject, "field name");
        check_type_expr(f.type, subject);
        if (f.default_value) check_default(f.type, *f.default_value, subject);
        if (f.since && !is_token(*f.since)) {
            error("invalid-annotation", subject, fmt::format("@since value '{}' is not a single token", *f.since));
        }
        if (f.deprecated) check_quoted(*f.deprecated, subject, "deprecation reason");
    }

    void check_fields(const std::vector<Field>& fields, const std::string& prefix, char sep) {
        std::vector<std::string_view> seen;
        for (const auto& f : fields) {
            std::string subject = prefix + sep + f.name;
            if (std::find(seen.begin(), seen.end(), f.name) != seen.end()) {
                error("duplicate-field", subject, fmt::format("duplicate field '{}'", f.name));
            }
            seen.push_back(f.name);
            check_field(f, subject);
        }
    }

    void check_meta() {
        const Meta& m = doc_.meta;
        if (m.api.empty()) error("empty-meta-field", "meta.api", "meta 'api' must not be empty");
        if ((!m.api.empty() && !is_trimmed_line(m.api)) || (m.desc && !is_trimmed_line(*m.desc)) ||
            (m.version && !is_token(*m.version))) {
            error("invalid-meta-value", "meta", "meta values must be trimmed single-line text, version a single token");
        }
        if (m.base.empty()) {
            error("empty-meta-field", "meta.base", "meta 'base' must not be empty");
        } else if (!is_absolute_url(m.base)) {
            if (m.base.front() == '/' && is_token(m.base)) {
                warning("relative-base-url", "meta.base", fmt::format("base '{}' is not an absolute URL", m.base));
            } else {
                error("invalid-base-url", "meta.base", fmt::format("base '{}' is not a URL", m.base));
            }
        }
        const AuthSpec& a = m.auth;
        if (a.location.has_value() != a.name.has_value()) {
            error("invalid-auth", "meta.auth", "auth location and name must be given together");
        }
        if (a.scheme == AuthScheme::none && a.location) {
            error("invalid-auth", "meta.auth", "auth 'none' takes no credential location");
        }
        if (a.name && !is_token(*a.name)) {
            error("invalid-auth", "meta.auth", fmt::format("credential name '{}' is not a single token", *a.name));
        }
    }

    void check_types() {
        std::vector<std::string_view> seen;
        for (const auto& t : doc_.types) {
            std::string subject = "type:" + t.name;
            check_identifier(t.name, subject, "type name");
            if (std::find(seen.begin(), seen.end(), t.name) != seen.end()) {
                error("duplicate-type", subject, fmt::format("type '{}' is declared more than once", t.name));
            }
            seen.push_back(t.name);
            if (is_identifier(t.name) && !is_upper_camel(t.name)) {
                warning("naming-convention", subject, fmt::format("type name '{}' is not UpperCamelCase", t.name));
            }
            if (const auto* e = std::get_if<EnumBody>(&t.body)) {
                if (e->variants.empty()) error("empty-enum", subject, fmt::format("enum '{}' has no variants", t.name));
                std::vector<std::string_view> vs;
                for (const auto& v : e->variants) {
                    bool valid = !v.empty() && is_quotable(v) && v.find('|') == std::string::npos &&
                                 v.find('#') == std::string::npos && !is_space(v.front()) && !is_space(v.back());
                    if (!valid) error("invalid-enum-variant", subject, fmt::format("enum variant '{}' cannot be written", v));
                    if (std::find(vs.begin(), vs.end(), v) != vs.end()) {
                        error("duplicate-enum-variant", subject, fmt::format("enum variant '{}' repeats", v));
                    }
                    vs.push_back(v);
                }
            } else {
                check_fields(std::get<ObjectBody>(t.body).fields, subject, '.');
            }
        }
    }

    void check_params(const std::vector<Param>& params, const std::string& prefix, char marker,
                      const std::vector<std::string>& route_params, ParamLocation fallback, bool is_webhook) {
        std::vector<std::pair<std::string_view, ParamLocation>> seen;
        for (const auto& p : params) {
            std::string subject = prefix + marker + p.name;
            check_identifier(p.name, subject, "parameter name");
            check_type_expr(p.type, subject);
            if (p.default_value) check_default(p.type, *p.default_value, subject);
            auto key = std::make_pair(std::string_view(p.name), p.location);
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
                error("duplicate-param", subject, fmt::format("parameter '{}' repeats", p.name));
            }
            seen.push_back(key);
            if (p.wire_name && (!p.location_explicit || !is_token(*p.wire_name))) {
                error("invalid-wire-name", subject, "a wire name needs an explicit @location and must be one token");
            }
            bool in_route = std::find(route_params.begin(), route_params.end(), p.name) != route_params.end();
            ParamLocation inferred = in_route ? ParamLocation::path : fallback;
            if (!p.location_explicit && p.location != inferred) {
                error("location-mismatch", subject,
                      fmt::format("parameter '{}' is in {} but would be read back as {}; mark it explicit", p.name,
                                  to_string(p.location), to_string(inferred)));
            }
            if (is_webhook && p.location != ParamLocation::body && p.location != ParamLocation::header) {
                error("invalid-payload-location", subject, "webhook payload fields live in the body or a header");
            }
            if (!is_webhook && p.location == ParamLocation::path) {
                const std::string& wire = p.wire_name ? *p.wire_name : p.name;
                if (std::find(route_params.begin(), route_params.end(), wire) == route_params.end()) {
                    error("path-param-not-in-route", subject,
                          fmt::format("path parameter '{}' does not appear in the route", wire));
                }
            }
        }
    }

    void check_route(std::string_view path, const std::string& subject) {
        if (path.empty() || path.front() != '/' || !is_token(path)) {
            error("invalid-path", subject, fmt::format("route '{}' must start with '/' and contain no spaces", path));
        }
    }

    void check_ops() {
        if (doc_.ops.empty()) warning("empty-ops", "ops", "the [ops] section declares no operations");
        std::vector<std::string_view> seen;
        for (const auto& op : doc_.ops) {
            std::string subject = "op:" + op.name;
            check_identifier(op.name, subject, "operation name");
            if (std::find(seen.begin(), seen.end(), op.name) != seen.end()) {
                error("duplicate-op", subject, fmt::format("operation '{}' is declared more than once", op.name));
            }
            seen.push_back(op.name);
            if (is_identifier(op.name) && !is_snake(op.name)) {
                warning("naming-convention", subject, fmt::format("operation name '{}' is not snake_case", op.name));
            }
            check_route(op.path, subject);
            for (const auto& line : op.desc) check_prose(line, subject, "description line");
            auto route = path_template_params(op.path);
            check_params(op.inputs, subject, '>', route, default_location(op.method), false);
            for (const auto& var : route) {
                bool found = std::any_of(op.inputs.begin(), op.inputs.end(), [&](const Param& p) {
                    return p.location == ParamLocation::path && (p.wire_name ? *p.wire_name : p.name) == var;
                });
                if (!found) {
                    error("missing-path-param", subject, fmt::format("route parameter '{{{}}}' has no path input", var));
                }
            }
            if (op.output) {
                if (const auto* t = std::get_if<TypeExpr>(&*op.output)) {
                    check_type_expr(*t, subject + "<");
                } else {
                    const auto& body = std::get<ObjectBody>(*op.output);
                    if (body.fields.empty()) error("empty-output", subject + "<", "inline output needs at least one field");
                    check_fields(body.fields, subject, '<');
                }
            }
        }
    }

    void check_webhooks() {
        std::vector<std::string_view> seen;
        for (const auto& w : doc_.webhooks) {
            std::string subject = "webhook:" + w.name;
            check_identifier(w.name, subject, "webhook name");
            if (std::find(seen.begin(), seen.end(), w.name) != seen.end()) {
                error("duplicate-webhook", subject, fmt::format("webhook '{}' is declared more than once", w.name));
            }
            seen.push_back(w.name);
            check_route(w.path, subject);
            if (w.trigger.empty()) {
                warning("missing-trigger", subject, fmt::format("webhook '{}' has no trigger condition", w.name));
            } else {
                check_prose(w.trigger, subject, "trigger");
            }
            check_params(w.payload, subject, '<', {}, ParamLocation::body, true);
        }
    }

    void check_errors() {
        if (!doc_.errors) return;
        const ErrorSection& e = *doc_.errors;
        if (e.base_type && find_type(*e.base_type) == nullptr) {
            error("dangling-type-ref", "errors", fmt::format("dangling type reference '{}'", *e.base_type));
        }
        if (!e.base_type && e.entries.empty()) warning("empty-section", "errors", "the [errors] section is empty");
        std::vector<std::pair<int, std::string_view>> seen;
        for (const auto& def : e.entries) {
            std::string subject = fmt::format("error:{}:{}", def.code, def.label);
            if (def.code < 400 || def.code > 599) {
                error("error-code-range", subject, fmt::format("error code {} is outside 400-599", def.code));
            }
            check_identifier(def.label, subject, "error label");
            auto key = std::make_pair(def.code, std::string_view(def.label));
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
                error("duplicate-error", subject, fmt::format("error {} {} is declared twice", def.code, def.label));
            }
            seen.push_back(key);
            if (!def.desc.empty()) check_prose(def.desc, subject, "error description");
            for (const auto& op : def.ops) {
                if (!op_exists(op)) error("unknown-error-op", subject, fmt::format("unknown op '{}' in @ops", op));
            }
            check_fields(def.extra_fields, subject, '~');
        }
    }

    void check_rate(const RateSpec& r, const std::string& subject) {
        if (r.amount == 0) error("invalid-rate", subject, "rate and quota amounts must be positive");
        if (r.scope && !is_token(*r.scope)) error("invalid-rate", subject, "rate scope must be a single token");
        if (r.note) check_quoted(*r.note, subject, "rate note");
    }

    void check_limits() {
        if (!doc_.limits) return;
        const LimitsSection& l = *doc_.limits;
        if (!l.on_exceed && l.plans.empty()) warning("empty-section", "limits", "the [limits] section is empty");
        if (l.on_exceed) {
            if (l.on_exceed->code < 100 || l.on_exceed->code > 599 || !is_token(l.on_exceed->behavior)) {
                error("invalid-on-exceed", "limits", "on_exceed needs a status code and a single-token behavior");
            }
        }
        std::vector<std::string_view> seen;
        for (const auto& p : l.plans) {
            std::string subject = "plan:" + p.name;
            if (!is_token(p.name)) error("invalid-identifier", subject, fmt::format("plan name '{}' is not a token", p.name));
            if (std::find(seen.begin(), seen.end(), p.name) != seen.end()) {
                error("duplicate-plan", subject, fmt::format("plan '{}' is declared twice", p.name));
            }
            seen.push_back(p.name);
            for (const auto& r : p.rates) check_rate(r, subject);
            for (const auto& q : p.quotas) check_rate(q, subject);
        }
    }

    // Depth 0 is the whole expression, 1 a sequence element, 2 a branch arm.
    // Without grouping syntax a branch arm can only be a step or a wait and
    // a sequence cannot nest.
    void check_flow_expr(const FlowExpr& expr, const std::string& subject, int depth = 0) {
        bool composite = std::holds_alternative<FlowBranch>(expr.node) || std::holds_alternative<FlowSeq>(expr.node);
        bool nested_seq = std::holds_alternative<FlowSeq>(expr.node) && depth > 0;
        if ((composite && depth == 2) || nested_seq) {
            error("unrepresentable-flow", subject, "flow nesting cannot be written without grouping");
            return;
        }
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, FlowStep>) {
                    if (!step_exists(node.name)) {
                        error("unknown-flow-step", subject,
                              fmt::format("flow step '{}' is neither an operation nor a webhook", node.name));
                    }
                } else if constexpr (std::is_same_v<T, FlowWait>) {
                    if (node.label.find_first_of(")#") != std::string::npos || !is_quotable(node.label)) {
                        error("invalid-flow", subject, "wait labels cannot contain ')', '#' or line breaks");
                    }
                } else if constexpr (std::is_same_v<T, FlowBranch>) {
                    if (node.arms.size() < 2) error("degenerate-flow", subject, "a branch needs at least two arms");
                    for (const auto& a : node.arms) check_flow_expr(a, subject, 2);
                } else {
                    if (node.steps.size() < 2) error("degenerate-flow", subject, "a sequence needs at least two steps");
                    for (const auto& s : node.steps) check_flow_expr(s, subject, 1);
                }
            },
            expr.node);
    }

    void check_flows() {
        std::vector<std::string_view> seen;
        for (const auto& f : doc_.flows) {
            std::string subject = "flow:" + f.name;
            check_identifier(f.name, subject, "flow name");
            if (std::find(seen.begin(), seen.end(), f.name) != seen.end()) {
                error("duplicate-flow", subject, fmt::format("flow '{}' is declared more than once", f.name));
            }
            seen.push_back(f.name);
            if (f.title) check_quoted(*f.title, subject, "flow title");
            check_flow_expr(f.expr, subject);
            std::vector<std::string> steps;
            collect_flow_steps(f.expr, steps);
            for (const auto& c : f.conditions) {
                std::string csub = subject + "?" + c.branch;
                if (std::find(steps.begin(), steps.end(), c.branch) == steps.end()) {
                    error("unknown-flow-condition", csub,
                          fmt::format("condition '{}' does not name a step of the flow", c.branch));
                }
                check_prose(c.prose, csub, "condition");
            }
        }
    }
};

}  // namespace

std::string_view to_string(ScalarKind kind) { return name_of(kScalarNames, kind); }
std::optional<ScalarKind> scalar_from_string(std::string_view name) { return value_of(kScalarNames, name); }

std::string_view to_string(AuthScheme scheme) {
    switch (scheme) {
        case AuthScheme::bearer: return "bearer";
        case AuthScheme::apikey: return "apikey";
        case AuthScheme::basic: return "basic";
        case AuthScheme::oauth2: return "oauth2";
        case AuthScheme::none: return "none";
    }
    return "none";
}

std::string_view to_string(CredentialLocation location) {
    switch (location) {
        case CredentialLocation::header: return "header";
        case CredentialLocation::query: return "query";
        case CredentialLocation::cookie: return "cookie";
    }
    return "header";
}

std::string_view to_string(HttpMethod method) { return name_of(kMethodNames, method); }
std::optional<HttpMethod> method_from_string(std::string_view text) { return value_of(kMethodNames, text); }

std::string_view to_string(ParamLocation location) { return name_of(kLocationNames, location); }
std::optional<ParamLocation> location_from_string(std::string_view text) { return value_of(kLocationNames, text); }

std::string_view to_string(RatePeriod period) { return name_of(kPeriodNames, period); }
std::optional<RatePeriod> period_from_string(std::string_view text) { return value_of(kPeriodNames, text); }

ParamLocation default_location(HttpMethod method) {
    switch (method) {
        case HttpMethod::post:
        case HttpMethod::put:
        case HttpMethod::patch: return ParamLocation::body;
        default: return ParamLocation::query;
    }
}

bool is_identifier(std::string_view text) {
    if (text.empty()) return false;
    auto head = static_cast<unsigned char>(text.front());
    if (!std::isalpha(head) && head != '_') return false;
    return std::all_of(text.begin() + 1, text.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return u < 0x80 && (std::isalnum(u) || c == '_');
    });
}

bool is_bare_token(std::string_view text) {
    if (!is_token(text) || text.front() == '@') return false;
    if (text == "true" || text == "false") return false;
    return !is_integer_literal(text) && !is_number_literal(text);
}

bool is_prose_line(std::string_view text) {
    if (text.empty() || !is_quotable(text)) return false;
    if (is_space(text.front()) || is_space(text.back())) return false;
    return std::string_view("><~!?#").find(text.front()) == std::string_view::npos;
}

std::vector<std::string> path_template_params(std::string_view path) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = path.find('{', pos)) != std::string_view::npos) {
        auto close = path.find('}', pos);
        if (close == std::string_view::npos) break;
        out.emplace_back(path.substr(pos + 1, close - pos - 1));
        pos = close + 1;
    }
    return out;
}

void collect_flow_steps(const FlowExpr& expr, std::vector<std::string>& out) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FlowStep>) {
                out.push_back(node.name);
            } else if constexpr (std::is_same_v<T, FlowBranch>) {
                for (const auto& a : node.arms) collect_flow_steps(a, out);
            } else if constexpr (std::is_same_v<T, FlowSeq>) {
                for (const auto& s : node.steps) collect_flow_steps(s, out);
            }
        },
        expr.node);
}

bool is_integer_literal(std::string_view s) {
    if (!s.empty() && s.front() == '-') s.remove_prefix(1);
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// -?digits(.digits)?([eE][+-]?digits)? with at least a fraction or an exponent.
bool is_number_literal(std::string_view s) {
    std::size_t i = 0;
    if (i < s.size() && s[i] == '-') ++i;
    auto digits = [&] {
        std::size_t start = i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
        return i > start;
    };
    if (!digits()) return false;
    bool fraction_or_exponent = false;
    if (i < s.size() && s[i] == '.') {
        ++i;
        if (!digits()) return false;
        fraction_or_exponent = true;
    }
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
        if (!digits()) return false;
        fraction_or_exponent = true;
    }
    return i == s.size() && fraction_or_exponent;
}

bool is_trimmed_line(std::string_view text) {
    return !text.empty() && is_quotable(text) && !is_space(text.front()) && !is_space(text.back());
}

std::vector<Diagnostic> validate(const LapisDocument& doc) { return Validator(doc).run(); }

std::string format_diagnostic(const Diagnostic& d, const std::string& file) {
    std::string where = file;
    if (d.span) {
        where += fmt::format("{}{}:{}", where.empty() ? "" : ":", d.span->line, d.span->column);
    }
    return fmt::format("{}{}{}[{}]: {}", where, where.empty() ? "" : ": ",
                       d.severity == Severity::error ? "error" : "warning", d.code, d.message);
}

}  // namespace lapis
