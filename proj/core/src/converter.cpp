#include "lapis/converter.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace lapis {

namespace {

constexpr std::size_t kLongDescription = 200;

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Collapses every whitespace run to one space and trims.
std::string one_line(std::string_view text) {
    std::string out;
    bool space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
        } else {
            if (space) out += ' ';
            out += c;
            space = false;
        }
    }
    return out;
}

std::string first_sentence(const std::string& text) {
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && text[i + 1] == ' ') return text.substr(0, i + 1);
    }
    return text;
}

// A description as one prose line; empty when nothing usable remains.
std::string prose(std::string_view text) {
    std::string line = one_line(text);
    if (line.size() > kLongDescription) line = first_sentence(line);
    std::size_t start = line.find_first_not_of("><~!?# ");
    if (start == std::string::npos) return {};
    line.erase(0, start);
    return is_prose_line(line) ? line : std::string();
}

// Keeps a valid identifier as is; otherwise maps other characters to `_`.
std::string identifier(std::string_view text, std::string_view fallback) {
    std::string out;
    for (char c : text) out += (static_cast<unsigned char>(c) < 0x80 && (is_alnum(c) || c == '_')) ? c : '_';
    if (out.empty() || std::all_of(out.begin(), out.end(), [](char c) { return c == '_'; })) out = std::string(fallback);
    if (std::isdigit(static_cast<unsigned char>(out.front()))) out.insert(0, "_");
    return out;
}

class NameTable {
public:
    std::string claim(const std::string& base) {
        std::string name = base;
        for (int n = 2; used_.count(name); ++n) name = base + "_" + std::to_string(n);
        used_.insert(name);
        return name;
    }
    // UpperCamel names take a bare numeric suffix.
    std::string claim_type(const std::string& base) {
        std::string name = base;
        for (int n = 2; used_.count(name); ++n) name = base + std::to_string(n);
        used_.insert(name);
        return name;
    }
    bool taken(const std::string& name) const { return used_.count(name) > 0; }

private:
    std::set<std::string> used_;
};

std::optional<HttpMethod> lapis_method(std::string_view m) {
    std::string upper(m);
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return method_from_string(upper);
}

int status_code(const std::string& status) {
    if (status.size() == 3 && std::all_of(status.begin(), status.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        return std::stoi(status);
    }
    if (status.size() == 3 && (status[1] == 'X' || status[1] == 'x') && (status[2] == 'X' || status[2] == 'x') &&
        std::isdigit(static_cast<unsigned char>(status[0]))) {
        return (status[0] - '0') * 100;
    }
    return 0;
}

bool wildcard_status(const std::string& status) { return status.size() == 3 && !std::isdigit(static_cast<unsigned char>(status[1])); }

bool is_success(const std::string& status) { return !status.empty() && status[0] == '2'; }

bool equals_ignore_case(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

bool is_absolute(std::string_view url) {
    auto sep = url.find("://");
    if (sep == std::string_view::npos || sep == 0 || !std::isalpha(static_cast<unsigned char>(url.front()))) return false;
    for (char c : url.substr(0, sep)) {
        if (!is_alnum(c) && c != '+' && c != '-' && c != '.') return false;
    }
    auto rest = url.substr(sep + 3);
    return !rest.empty() && rest.front() != '/';
}

bool is_url_safe(std::string_view url) {
    return !url.empty() && std::none_of(url.begin(), url.end(), [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '#' || c == '"';
    });
}

std::string route(std::string_view path) {
    std::string out = path.empty() || path.front() != '/' ? "/" : "";
    for (char c : path) {
        if (c == ' ') out += "%20";
        else if (c == '#') out += "%23";
        else if (c == '"') out += "%22";
        else if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    }
    return out;
}

bool valid_variant(const std::string& v) {
    return !v.empty() && v.find_first_of("|#\r\n") == std::string::npos && !std::isspace(static_cast<unsigned char>(v.front())) &&
           !std::isspace(static_cast<unsigned char>(v.back()));
}

// String enum values usable as LAPIS enum variants.
std::optional<std::vector<std::string>> enum_variants(const Schema& s) {
    if (s.kind != Schema::Kind::scalar || s.enum_values.empty() || (s.type != "string" && !s.type.empty())) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& v : s.enum_values) {
        if (v.is_null()) continue;
        if (!v.is_string()) return std::nullopt;
        auto text = v.get<std::string>();
        if (!valid_variant(text)) return std::nullopt;
        if (std::find(out.begin(), out.end(), text) == out.end()) out.push_back(text);
    }
    if (out.empty()) return std::nullopt;
    return out;
}

std::string enum_signature(const std::vector<std::string>& variants) {
    std::string sig;
    for (const auto& v : variants) sig += v + '\x1f';
    return sig;
}

ScalarKind scalar_kind(const Schema& s) {
    const std::string& t = s.type;
    const std::string& f = s.format;
    if (f == "binary" || t == "file") return ScalarKind::file;
    if (t == "string") {
        if (f == "date") return ScalarKind::date;
        if (f == "date-time") return ScalarKind::datetime;
        return ScalarKind::str;
    }
    if (t == "integer") return ScalarKind::int_;
    if (t == "number") return ScalarKind::float_;
    if (t == "boolean") return ScalarKind::bool_;
    if (t.empty() && (f == "date" || f == "date-time")) return f == "date" ? ScalarKind::date : ScalarKind::datetime;
    return ScalarKind::any;
}

struct EnumInfo {
    std::vector<std::string> variants;
    std::string name_hint;
    int occurrences = 0;
    std::string name;  // assigned once used
    std::size_t order = 0;
};

struct Context {
    std::string owner;  // enclosing type or operation, may be empty
    std::string field;
};

class Converter {
public:
    Converter(const OpenApiDoc& doc, const ConvertOptions& options) : doc_(doc), opts_(options) {}

    ConvertResult run() {
        assign_type_names();
        count_enums();
        LapisDocument out;
        out.meta = meta();
        for (const auto& raw : doc_.operations) {
            if (auto op = operation(raw)) out.ops.push_back(std::move(*op));
        }
        if (doc_.minor_version >= 1) {
            NameTable hook_names;
            for (const auto& hook : doc_.webhooks) {
                if (auto w = webhook(hook, hook_names)) out.webhooks.push_back(std::move(*w));
            }
        } else if (!doc_.webhooks.empty()) {
            warn("webhooks-ignored", fmt::format("{} webhooks ignored: webhooks need OpenAPI 3.1", doc_.webhooks.size()));
        }
        out.errors = errors();
        if (out.errors && out.errors->entries.empty() && !out.errors->base_type) out.errors.reset();
        // Every component referenced more than the threshold is a named type.
        for (const auto& [name, schema] : doc_.components_schemas) {
            if (doc_.ref_count(name) > opts_.inline_threshold) {
                auto target = resolve_alias(name);
                if (target && kind_of(*target) != Kind::structural) request(*target);
            }
        }
        out.types = types();
        if (renamed_fields_ > 0) {
            warn("renamed-field", fmt::format("{} property names rewritten as identifiers", renamed_fields_));
        }

        ConvertResult result{std::move(out), {}};
        auto& report = result.report;
        report.named_types_emitted = static_cast<int>(result.document.types.size());
        report.schemas_inlined = static_cast<int>(inlined_.size());
        report.error_defs_out = result.document.errors ? static_cast<int>(result.document.errors->entries.size()) : 0;
        report.error_defs_in = error_defs_in_;
        report.discarded_fields = doc_.discarded;
        report.warnings = doc_.warnings;
        report.warnings.insert(report.warnings.end(), warnings_.begin(), warnings_.end());

        auto diags = validate(result.document);
        for (const auto& d : diags) {
            if (d.severity == Severity::error) {
                throw std::logic_error(fmt::format("converter produced an invalid document: {} {} ({})", d.code, d.message, d.subject));
            }
        }
        return result;
    }

private:
    enum class Kind { object, enumeration, structural };

    const OpenApiDoc& doc_;
    const ConvertOptions& opts_;
    std::vector<Diagnostic> warnings_;
    std::map<std::string, std::string> type_names_;  // component -> LAPIS type name
    NameTable type_table_;
    std::map<std::string, Schema> normalized_;
    std::vector<std::string> requested_;  // components, in request order
    std::set<std::string> requested_set_;
    std::map<std::string, EnumInfo> enums_;  // by signature
    std::size_t enum_order_ = 0;
    std::set<std::string> inlined_;
    std::vector<std::string> expanding_;  // structural aliases being mapped
    std::optional<TypeDef> api_error_;
    std::vector<TypeDef> synthesized_;  // named nested anonymous objects
    std::map<std::string, std::size_t> synthesized_index_;  // by schema identity
    int renamed_fields_ = 0;
    int error_defs_in_ = 0;

    void warn(std::string code, std::string message, std::string subject = {}) {
        warnings_.push_back({Severity::warning, std::move(code), std::move(message), std::move(subject), std::nullopt});
    }

    Schema norm(const Schema& s) { return normalize_schema(s, doc_, opts_.max_union_variants, &warnings_); }

    const Schema& component(const std::string& name) {
        auto it = normalized_.find(name);
        if (it == normalized_.end()) {
            const Schema* raw = doc_.find_schema(name);
            it = normalized_.emplace(name, raw ? norm(*raw) : Schema::any()).first;
        }
        return it->second;
    }

    // The component a chain of pure aliases ends at.
    std::optional<std::string> resolve_alias(std::string name) {
        std::set<std::string> seen;
        while (seen.insert(name).second) {
            if (!doc_.find_schema(name)) return std::nullopt;
            const Schema& s = component(name);
            if (s.kind != Schema::Kind::named_ref) return name;
            name = s.name;
        }
        return std::nullopt;
    }

    Kind kind_of(const std::string& name) {
        const Schema& s = component(name);
        if (s.kind == Schema::Kind::object && !s.properties.empty()) return Kind::object;
        if (enum_variants(s)) return Kind::enumeration;
        return Kind::structural;
    }

    void assign_type_names() {
        for (const auto& [name, schema] : doc_.components_schemas) {
            std::string base = upper_camel_case(name);
            if (base.empty() || !is_identifier(base)) base = "T" + base;
            if (!is_identifier(base)) base = "Type";
            type_names_[name] = type_table_.claim_type(base);
        }
    }

    void request(const std::string& name) {
        if (requested_set_.insert(name).second) requested_.push_back(name);
    }

    // ------------------------------------------------------------ enums

    void note_enums(const Schema& s, const Context& ctx) {
        switch (s.kind) {
            case Schema::Kind::scalar:
                if (auto variants = enum_variants(s)) {
                    auto& info = enums_[enum_signature(*variants)];
                    if (info.occurrences++ == 0) {
                        info.variants = *variants;
                        info.name_hint = upper_camel_case(ctx.owner) + upper_camel_case(ctx.field);
                        info.order = enum_order_++;
                    }
                }
                break;
            case Schema::Kind::object:
                for (const auto& p : s.properties) note_enums(*p.schema, {ctx.owner, p.name});
                if (s.additional) note_enums(**s.additional, ctx);
                break;
            case Schema::Kind::array: note_enums(**s.items, ctx); break;
            default: break;
        }
    }

    void count_enums() {
        for (const auto& [name, schema] : doc_.components_schemas) {
            const Schema& s = component(name);
            if (enum_variants(s)) continue;  // the component is the enum
            note_enums(s, {name, ""});
        }
        auto note_op = [&](const RawOperation& op) {
            for (const auto& p : op.parameters) note_enums(norm(p.schema), {"", p.name});
            if (op.request_body) note_enums(norm(op.request_body->schema), {"", ""});
            for (const auto& r : op.responses) {
                if (r.schema && is_success(r.status)) note_enums(norm(*r.schema), {"", ""});
            }
        };
        for (const auto& op : doc_.operations) note_op(op);
        for (const auto& hook : doc_.webhooks) note_op(hook.op);
    }

    std::optional<TypeExpr> inline_enum(const Schema& s) {
        auto variants = enum_variants(s);
        if (!variants) return std::nullopt;
        auto& info = enums_[enum_signature(*variants)];
        if (info.occurrences <= opts_.inline_threshold) return std::nullopt;
        if (info.name.empty()) {
            std::string base = info.name_hint.empty() ? "Enum" : info.name_hint;
            if (!is_identifier(base)) base = "E" + base;
            if (!is_identifier(base)) base = "Enum";
            info.name = type_table_.claim_type(base);
            if (info.variants.empty()) info.variants = *variants;
        }
        return TypeExpr::named(info.name);
    }

    // ------------------------------------------------------------ types

    TypeExpr expr(const Schema& s, const Context& ctx) {
        switch (s.kind) {
            case Schema::Kind::any: return TypeExpr::scalar(ScalarKind::any);
            case Schema::Kind::named_ref: return named_expr(s.name, ctx);
            case Schema::Kind::object:
                if (!s.properties.empty()) return TypeExpr::named(synthesized_type(s, ctx));
                return TypeExpr::map(s.additional ? expr(**s.additional, ctx) : TypeExpr::scalar(ScalarKind::any));
            case Schema::Kind::array: return TypeExpr::array(expr(**s.items, ctx));
            case Schema::Kind::scalar:
                if (auto e = inline_enum(s)) return *e;
                return TypeExpr::scalar(scalar_kind(s));
            case Schema::Kind::union_:
            case Schema::Kind::all_of: return TypeExpr::scalar(ScalarKind::any);
        }
        return TypeExpr::scalar(ScalarKind::any);
    }

    // Nested objects have no inline form; identical shapes share one name.
    std::string synthesized_type(const Schema& s, const Context& ctx) {
        auto identity = schema_identity(s);
        if (auto it = synthesized_index_.find(identity); it != synthesized_index_.end()) return synthesized_[it->second].name;
        std::string base = upper_camel_case(ctx.owner) + upper_camel_case(ctx.field);
        if (!is_identifier(base)) base = "Object" + base;
        if (!is_identifier(base)) base = "Object";
        std::string name = type_table_.claim_type(base);
        std::size_t slot = synthesized_.size();
        synthesized_.push_back({name, ObjectBody{}});
        synthesized_index_.emplace(identity, slot);
        auto body = fields(s, name);
        synthesized_[slot].body = ObjectBody{std::move(body)};
        return name;
    }

    TypeExpr named_expr(const std::string& raw_name, const Context& ctx) {
        auto name = resolve_alias(raw_name);
        if (!name) return TypeExpr::scalar(ScalarKind::any);
        if (kind_of(*name) != Kind::structural) {
            request(*name);
            return TypeExpr::named(type_names_.at(*name));
        }
        if (std::find(expanding_.begin(), expanding_.end(), *name) != expanding_.end()) {
            return TypeExpr::scalar(ScalarKind::any);
        }
        expanding_.push_back(*name);
        TypeExpr t = expr(component(*name), ctx);
        expanding_.pop_back();
        return t;
    }

    std::optional<Literal> literal(const Json& v, const TypeExpr& t) {
        const auto* scalar = std::get_if<ScalarType>(&t.node);
        const auto* named = std::get_if<NamedType>(&t.node);
        auto text_literal = [](const std::string& text) -> std::optional<Literal> {
            if (text.find_first_of("\r\n") != std::string::npos) return std::nullopt;
            if (is_bare_token(text)) return Literal{Literal::Kind::bare, text};
            return Literal{Literal::Kind::string, text};
        };
        if (named) {
            if (!v.is_string()) return std::nullopt;
            for (const auto& td : pending_enum_variants(named->name)) {
                if (td == v.get<std::string>()) return text_literal(td);
            }
            return std::nullopt;
        }
        if (!scalar) return std::nullopt;
        switch (scalar->kind) {
            case ScalarKind::str:
            case ScalarKind::date:
            case ScalarKind::datetime:
                if (v.is_string()) return text_literal(v.get<std::string>());
                return std::nullopt;
            case ScalarKind::int_:
                if (v.is_number_integer()) return Literal{Literal::Kind::integer, v.dump()};
                return std::nullopt;
            case ScalarKind::float_:
                if (v.is_number_integer()) return Literal{Literal::Kind::integer, v.dump()};
                if (v.is_number_float() && is_number_literal(v.dump())) return Literal{Literal::Kind::number, v.dump()};
                return std::nullopt;
            case ScalarKind::bool_:
                if (v.is_boolean()) return Literal{Literal::Kind::boolean, v.dump()};
                return std::nullopt;
            default: return std::nullopt;
        }
    }

    // Variants of the enum type `type_name` names, if it is one.
    std::vector<std::string> pending_enum_variants(const std::string& type_name) {
        for (const auto& [sig, info] : enums_) {
            if (info.name == type_name) return info.variants;
        }
        for (const auto& [component_name, lapis_name] : type_names_) {
            if (lapis_name == type_name) {
                if (auto v = enum_variants(component(component_name))) return *v;
            }
        }
        return {};
    }

    std::vector<Field> fields(const Schema& obj, const std::string& owner) {
        std::vector<Field> out;
        NameTable names;
        for (const auto& p : obj.properties) {
            Field f;
            std::string name = identifier(p.name, "field");
            if (name != p.name) ++renamed_fields_;
            f.name = names.claim(name);
            const Schema& ps = *p.schema;
            f.type = expr(ps, {owner, p.name});
            f.optional = !obj.is_required(p.name);
            if (ps.default_value) f.default_value = literal(*ps.default_value, f.type);
            if (ps.deprecated) f.deprecated = std::string();
            out.push_back(std::move(f));
        }
        return out;
    }

    // An object schema whose properties can be listed, following component refs.
    std::optional<Schema> listable_object(const Schema& s, bool count_inline) {
        if (s.kind == Schema::Kind::object && !s.properties.empty()) return s;
        if (s.kind != Schema::Kind::named_ref) return std::nullopt;
        auto name = resolve_alias(s.name);
        if (!name || kind_of(*name) != Kind::object) return std::nullopt;
        if (count_inline) inlined_.insert(*name);
        return component(*name);
    }

    std::optional<Output> output(const Schema& raw, const std::string& owner) {
        Schema s = norm(raw);
        if (s.kind == Schema::Kind::named_ref) {
            auto name = resolve_alias(s.name);
            if (name && kind_of(*name) == Kind::object && doc_.ref_count(*name) <= opts_.inline_threshold) {
                inlined_.insert(*name);
                return Output{ObjectBody{fields(component(*name), *name)}};
            }
            return Output{expr(s, {owner, ""})};
        }
        if (s.kind == Schema::Kind::object && !s.properties.empty()) return Output{ObjectBody{fields(s, owner)}};
        return Output{expr(s, {owner, ""})};
    }

    std::vector<TypeDef> types() {
        std::vector<TypeDef> built;
        std::map<std::string, TypeDef> by_component;
        for (std::size_t i = 0; i < requested_.size(); ++i) {  // grows while mapping
            std::string name = requested_[i];
            TypeDef def;
            def.name = type_names_.at(name);
            const Schema s = component(name);
            if (auto variants = enum_variants(s)) {
                def.body = EnumBody{*variants};
            } else {
                def.body = ObjectBody{fields(s, name)};
            }
            by_component.emplace(name, std::move(def));
        }
        for (const auto& [name, schema] : doc_.components_schemas) {
            auto it = by_component.find(name);
            if (it != by_component.end()) built.push_back(std::move(it->second));
        }
        std::vector<const EnumInfo*> synthesized;
        for (const auto& [sig, info] : enums_) {
            if (!info.name.empty()) synthesized.push_back(&info);
        }
        std::sort(synthesized.begin(), synthesized.end(), [](const EnumInfo* a, const EnumInfo* b) { return a->order < b->order; });
        built.insert(built.end(), synthesized_.begin(), synthesized_.end());
        for (const auto* info : synthesized) built.push_back({info->name, EnumBody{info->variants}});
        if (api_error_) built.push_back(*api_error_);
        return built;
    }

    // ------------------------------------------------------------ meta

    Meta meta() {
        Meta m;
        m.api = one_line(doc_.info.title);
        if (m.api.empty()) m.api = "API";
        std::string base = doc_.servers.empty() ? "" : doc_.servers.front();
        if (base.size() > 1 && base.back() == '/') base.pop_back();
        if (base.rfind("//", 0) == 0) base = "https:" + base;
        if (!is_url_safe(base) || (!is_absolute(base) && base.front() != '/')) {
            if (!base.empty()) warn("base-url", fmt::format("server '{}' is not a URL; using '/'", base));
            base = "/";
        }
        m.base = base;
        std::string version = one_line(doc_.info.version);
        if (!version.empty()) {
            std::replace(version.begin(), version.end(), ' ', '_');
            if (version.find_first_of("#\"") == std::string::npos) m.version = version;
        }
        if (opts_.keep_descriptions) {
            std::string desc = prose(doc_.info.description);
            if (!desc.empty()) m.desc = desc;
        }
        m.auth = auth();
        return m;
    }

    AuthSpec auth() {
        const SecurityScheme* chosen = nullptr;
        auto find = [&](const std::string& name) -> const SecurityScheme* {
            for (const auto& s : doc_.security_schemes) {
                if (s.name == name) return &s;
            }
            return nullptr;
        };
        if (doc_.security) {
            for (const auto& name : *doc_.security) {
                if ((chosen = find(name))) break;
            }
        }
        if (!chosen && !doc_.security) {
            // Most used by operations, first declared on ties.
            std::map<std::string, int> uses;
            for (const auto& op : doc_.operations) {
                if (op.security) {
                    for (const auto& n : *op.security) ++uses[n];
                }
            }
            int best = 0;
            for (const auto& s : doc_.security_schemes) {
                if (uses[s.name] > best) {
                    best = uses[s.name];
                    chosen = &s;
                }
            }
        }
        AuthSpec a;
        if (!chosen) return a;
        auto header = [&](AuthScheme scheme) {
            a.scheme = scheme;
            a.location = CredentialLocation::header;
            a.name = "Authorization";
        };
        if (chosen->type == "http" && chosen->scheme == "basic") {
            header(AuthScheme::basic);
        } else if (chosen->type == "http") {
            header(AuthScheme::bearer);
        } else if (chosen->type == "oauth2" || chosen->type == "openIdConnect") {
            header(AuthScheme::oauth2);
        } else if (chosen->type == "apiKey") {
            a.scheme = AuthScheme::apikey;
            a.location = chosen->in == "query"    ? CredentialLocation::query
                         : chosen->in == "cookie" ? CredentialLocation::cookie
                                                  : CredentialLocation::header;
            std::string name = chosen->param_name.empty() ? "api_key" : chosen->param_name;
            if (name.find_first_of(" \t#\"") != std::string::npos) name = "api_key";
            a.name = name;
        } else {
            warn("auth-scheme", fmt::format("security scheme '{}' of type '{}' has no LAPIS form", chosen->name, chosen->type));
        }
        return a;
    }

    // ------------------------------------------------------------ operations

    NameTable op_names_;
    std::vector<std::pair<std::string, const RawOperation*>> converted_ops_;

    struct ParamBuilder {
        std::vector<std::string> route;
        ParamLocation fallback;
        std::vector<Param> params;
        std::map<ParamLocation, NameTable> names;

        void add(Param p, const std::string& wire) {
            p.name = names[p.location].claim(p.name);
            bool in_route = std::find(route.begin(), route.end(), p.name) != route.end();
            ParamLocation inferred = in_route ? ParamLocation::path : fallback;
            if (p.name != wire && wire.find_first_of(" \t\r\n#\"") == std::string::npos) {
                p.wire_name = wire;
                p.location_explicit = true;
            } else {
                p.location_explicit = p.location != inferred;
            }
            params.push_back(std::move(p));
        }
    };

    Param make_param(const std::string& name, const Schema& schema, bool optional, ParamLocation loc, const Context& ctx) {
        Param p;
        p.name = name;
        p.location = loc;
        p.optional = optional;
        Schema s = norm(schema);
        p.type = expr(s, ctx);
        const Schema* with_default = &s;
        if (s.kind == Schema::Kind::named_ref) {
            if (auto target = resolve_alias(s.name)) with_default = &component(*target);
        }
        if (with_default->default_value) p.default_value = literal(*with_default->default_value, p.type);
        return p;
    }

    void body_params(ParamBuilder& pb, const Schema& raw_body, const std::string& owner) {
        Schema body = norm(raw_body);
        auto obj = listable_object(body, true);
        if (!obj) {
            pb.add(make_param("body", body, false, ParamLocation::body, {owner, "body"}), "body");
            return;
        }
        for (const auto& prop : obj->properties) {
            std::string name = identifier(prop.name, "field");
            if (name != prop.name) ++renamed_fields_;
            Param p;
            p.name = name;
            p.location = ParamLocation::body;
            p.optional = !obj->is_required(prop.name);
            p.type = expr(*prop.schema, {owner, prop.name});
            if (prop.schema->default_value) p.default_value = literal(*prop.schema->default_value, p.type);
            pb.add(std::move(p), name == prop.name ? name : prop.name);
        }
    }

    void header_param(ParamBuilder& pb, const Parameter& param, const std::string& subject, const std::string& owner) {
        if (equals_ignore_case(param.name, "Accept") || equals_ignore_case(param.name, "Content-Type") ||
            equals_ignore_case(param.name, "Authorization")) {
            return;
        }
        if (param.name.find_first_of(" \t#\"") != std::string::npos) {
            warn("param-dropped", fmt::format("header '{}' cannot be written", param.name), subject);
            return;
        }
        std::string name = identifier(snake_case(param.name), "header");
        Param p = make_param(name, param.schema, !param.required, ParamLocation::header, {owner, param.name});
        p.name = pb.names[ParamLocation::header].claim(p.name);
        p.location_explicit = true;
        if (p.name != param.name) p.wire_name = param.name;
        pb.params.push_back(std::move(p));
    }

    std::optional<Operation> operation(const RawOperation& raw) {
        std::string subject = raw.method + " " + raw.path;
        auto method = lapis_method(raw.method);
        if (!method) {
            warn("unsupported-method", fmt::format("{}: method has no LAPIS form; operation skipped", subject), subject);
            return std::nullopt;
        }
        Operation op;
        op.name = op_names_.claim(synthesize_op_name(raw));
        op.method = *method;
        op.path = route(raw.path);
        if (opts_.keep_descriptions) {
            std::string desc = prose(raw.summary.empty() ? raw.description : raw.summary);
            if (desc.empty() && !raw.summary.empty()) desc = prose(raw.description);
            if (!desc.empty()) op.desc.push_back(desc);
        }

        ParamBuilder pb;
        pb.route = path_template_params(op.path);
        pb.fallback = default_location(op.method);
        std::set<std::string> seen_route;
        for (const auto& var : pb.route) {
            if (!seen_route.insert(var).second) continue;
            auto it = std::find_if(raw.parameters.begin(), raw.parameters.end(),
                                   [&](const Parameter& p) { return p.in == ParamIn::path && p.name == var; });
            if (it == raw.parameters.end()) {
                warn("missing-path-param", fmt::format("{}: route parameter '{}' is undeclared; typed as str", subject, var), subject);
            }
            if (var.empty() || var.find_first_of(" \t#\"") != std::string::npos) continue;
            Schema schema = it != raw.parameters.end() ? it->schema : Schema::scalar("string");
            std::string name = identifier(var, "param");
            Param p = make_param(name, schema, false, ParamLocation::path, {op.name, var});
            p.optional = false;
            pb.add(std::move(p), var);
        }
        for (const auto& param : raw.parameters) {
            switch (param.in) {
                case ParamIn::path:
                    if (!seen_route.count(param.name)) {
                        warn("unused-path-param", fmt::format("{}: path parameter '{}' is not in the route; dropped", subject, param.name), subject);
                    }
                    break;
                case ParamIn::query: {
                    if (param.name.empty() || param.name.find_first_of(" \t#\"") != std::string::npos) {
                        warn("param-dropped", fmt::format("{}: query parameter '{}' cannot be written", subject, param.name), subject);
                        break;
                    }
                    std::string name = identifier(param.name, "param");
                    pb.add(make_param(name, param.schema, !param.required, ParamLocation::query, {op.name, param.name}), param.name);
                    break;
                }
                case ParamIn::header: header_param(pb, param, subject, op.name); break;
                case ParamIn::cookie:
                    warn("param-dropped", fmt::format("{}: cookie parameter '{}' has no LAPIS location", subject, param.name), subject);
                    break;
            }
        }
        if (raw.request_body) body_params(pb, raw.request_body->schema, op.name);
        op.inputs = std::move(pb.params);

        for (const auto& r : raw.responses) {
            if (!is_success(r.status) || !r.schema) continue;
            op.output = output(*r.schema, op.name);
            if (auto* body = op.output ? std::get_if<ObjectBody>(&*op.output) : nullptr; body && body->fields.empty()) {
                op.output = Output{TypeExpr::map(TypeExpr::scalar(ScalarKind::any))};
            }
            for (const auto& media : r.media_types) {
                if (media == "text/event-stream" || media == "application/x-ndjson") op.modifiers.stream = true;
            }
            break;
        }
        op.modifiers.deprecated = raw.deprecated;
        converted_ops_.emplace_back(op.name, &raw);
        return op;
    }

    std::optional<Webhook> webhook(const WebhookEntry& hook, NameTable& names) {
        auto method = lapis_method(hook.op.method);
        if (!method) {
            warn("unsupported-method", fmt::format("webhook '{}': method has no LAPIS form; skipped", hook.name));
            return std::nullopt;
        }
        Webhook w;
        w.name = names.claim(identifier(snake_case(hook.name), "webhook"));
        w.method = *method;
        w.path = route(hook.name);
        w.trigger = prose(hook.op.description);
        if (w.trigger.empty()) warn("missing-trigger", fmt::format("webhook '{}' has no description for its trigger", hook.name));
        ParamBuilder pb;
        pb.fallback = ParamLocation::body;
        for (const auto& param : hook.op.parameters) {
            if (param.in == ParamIn::header) {
                header_param(pb, param, "webhook:" + hook.name, w.name);
            } else {
                warn("param-dropped", fmt::format("webhook '{}': {} parameter '{}' dropped", hook.name, to_string(param.in), param.name));
            }
        }
        if (hook.op.request_body) body_params(pb, hook.op.request_body->schema, w.name);
        w.payload = std::move(pb.params);
        return w;
    }

    // ------------------------------------------------------------ errors

    std::optional<ErrorSection> errors() {
        std::vector<ErrorInput> inputs;
        for (const auto& [name, raw] : converted_ops_) {
            for (const auto& r : raw->responses) {
                int code = status_code(r.status);
                if (code >= 400 && code <= 599) inputs.push_back({name, &r});
            }
        }
        error_defs_in_ = static_cast<int>(inputs.size());
        if (inputs.empty()) return std::nullopt;
        auto classes = classify_errors(inputs, doc_, opts_);

        // Object shape of each class, resolved through component refs.
        std::vector<std::optional<Schema>> shapes;
        std::vector<std::optional<std::string>> shape_component;
        for (const auto& c : classes) {
            std::optional<Schema> shape;
            std::optional<std::string> from;
            if (c.schema) {
                Schema s = norm(*c.schema);
                if (s.kind == Schema::Kind::named_ref) {
                    auto name = resolve_alias(s.name);
                    if (name && kind_of(*name) == Kind::object) {
                        shape = component(*name);
                        from = name;
                    }
                } else if (s.kind == Schema::Kind::object && !s.properties.empty()) {
                    shape = s;
                }
            }
            shapes.push_back(std::move(shape));
            shape_component.push_back(std::move(from));
        }

        ErrorSection section;
        std::optional<Schema> base;
        std::vector<std::size_t> globals;
        for (std::size_t i = 0; i < classes.size(); ++i) {
            if (classes[i].global) globals.push_back(i);
        }
        // The shape most global entries share becomes the base structure.
        std::map<std::string, std::vector<std::size_t>> by_shape;
        std::vector<std::string> shape_order;
        for (std::size_t i : globals) {
            if (!shapes[i]) continue;
            auto id = schema_identity(*shapes[i]);
            if (by_shape[id].empty()) shape_order.push_back(id);
            by_shape[id].push_back(i);
        }
        const std::vector<std::size_t>* sharing = nullptr;
        for (const auto& id : shape_order) {
            if (!sharing || by_shape[id].size() > sharing->size()) sharing = &by_shape[id];
        }
        if (sharing && sharing->size() >= 2 && sharing->size() * 2 > globals.size()) {
            base = shapes[sharing->front()];
            std::optional<std::string> component_name = shape_component[sharing->front()];
            for (std::size_t i : *sharing) {
                if (shape_component[i] != component_name) component_name.reset();
            }
            if (component_name) {
                request(*component_name);
                section.base_type = type_names_.at(*component_name);
            } else {
                std::string name = type_table_.claim_type("ApiError");
                api_error_ = TypeDef{name, ObjectBody{fields(*base, "ApiError")}};
                section.base_type = name;
            }
        }
        for (std::size_t i = 0; i < classes.size(); ++i) {
            const auto& c = classes[i];
            ErrorDef def;
            def.code = c.code;
            def.label = c.label;
            def.desc = c.desc;
            if (!c.global) def.ops = c.members;
            if (shapes[i]) {
                Schema extra = *shapes[i];
                if (base) {
                    std::erase_if(extra.properties, [&](const Property& p) { return base->property(p.name) != nullptr; });
                }
                def.extra_fields = fields(extra, upper_camel_case(c.label) + "Error");
            }
            section.entries.push_back(std::move(def));
        }
        return section;
    }
};

void canonical(const Schema& s, std::string& out) {
    if (s.nullable) out += '?';
    switch (s.kind) {
        case Schema::Kind::any: out += '*'; break;
        case Schema::Kind::named_ref: out += '#' + s.name + ';'; break;
        case Schema::Kind::scalar: {
            out += "s:" + s.type + '/' + s.format;
            if (!s.enum_values.empty()) {
                out += '(';
                for (const auto& v : s.enum_values) out += v.dump() + ',';
                out += ')';
            }
            out += ';';
            break;
        }
        case Schema::Kind::array:
            out += '[';
            canonical(**s.items, out);
            out += ']';
            break;
        case Schema::Kind::object: {
            std::vector<const Property*> props;
            for (const auto& p : s.properties) props.push_back(&p);
            std::sort(props.begin(), props.end(), [](const Property* a, const Property* b) { return a->name < b->name; });
            out += '{';
            for (const auto* p : props) {
                out += p->name + (s.is_required(p->name) ? "!:" : ":");
                canonical(*p->schema, out);
                out += ',';
            }
            if (s.additional) {
                out += "+:";
                canonical(**s.additional, out);
            }
            out += '}';
            break;
        }
        case Schema::Kind::union_:
        case Schema::Kind::all_of: {
            std::vector<std::string> parts;
            for (const auto& v : s.variants) {
                std::string p;
                canonical(v, p);
                parts.push_back(std::move(p));
            }
            if (s.kind == Schema::Kind::union_) std::sort(parts.begin(), parts.end());
            out += s.kind == Schema::Kind::union_ ? "|(" : "&(";
            for (const auto& p : parts) out += p + ',';
            out += ')';
            break;
        }
    }
}

std::string description_slug(const std::string& desc) {
    std::string words;
    int count = 0;
    for (char c : desc) {
        if (is_alnum(c) && static_cast<unsigned char>(c) < 0x80) {
            words += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!words.empty() && words.back() != '_') {
            if (++count == 4) break;
            words += '_';
        }
    }
    while (!words.empty() && words.back() == '_') words.pop_back();
    if (!words.empty() && std::isdigit(static_cast<unsigned char>(words.front()))) words.insert(0, "e_");
    return words;
}

}  // namespace

std::string snake_case(std::string_view text) {
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        auto u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::isalnum(u)) {
            if (std::isupper(u) && !out.empty() && out.back() != '_') {
                char prev = text[i - 1];
                bool next_lower = i + 1 < text.size() && std::islower(static_cast<unsigned char>(text[i + 1]));
                if (std::islower(static_cast<unsigned char>(prev)) || std::isdigit(static_cast<unsigned char>(prev)) ||
                    (std::isupper(static_cast<unsigned char>(prev)) && next_lower)) {
                    out += '_';
                }
            }
            out += static_cast<char>(std::tolower(u));
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

std::string upper_camel_case(std::string_view text) {
    std::string out;
    bool boundary = true;
    for (char c : text) {
        auto u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::isalnum(u)) {
            out += boundary ? static_cast<char>(std::toupper(u)) : c;
            boundary = false;
        } else {
            boundary = true;
        }
    }
    return out;
}

std::string synthesize_op_name(const RawOperation& op) {
    std::string name;
    if (op.operation_id) name = snake_case(*op.operation_id);
    if (name.empty()) {
        std::string resource;
        std::string_view path = op.path;
        while (!path.empty()) {
            auto slash = path.rfind('/');
            std::string_view segment = path.substr(slash == std::string_view::npos ? 0 : slash + 1);
            if (!segment.empty() && segment.front() != '{') {
                resource = snake_case(segment);
                if (!resource.empty()) break;
            }
            if (slash == std::string_view::npos) break;
            path = path.substr(0, slash);
        }
        name = op.method + "_" + (resource.empty() ? "root" : resource);
    }
    if (std::isdigit(static_cast<unsigned char>(name.front()))) name.insert(0, "op_");
    return name;
}

std::string reason_label(int code) {
    static const std::map<int, const char*> phrases{
        {400, "bad_request"},
        {401, "unauthorized"},
        {402, "payment_required"},
        {403, "forbidden"},
        {404, "not_found"},
        {405, "method_not_allowed"},
        {406, "not_acceptable"},
        {407, "proxy_authentication_required"},
        {408, "request_timeout"},
        {409, "conflict"},
        {410, "gone"},
        {411, "length_required"},
        {412, "precondition_failed"},
        {413, "content_too_large"},
        {414, "uri_too_long"},
        {415, "unsupported_media_type"},
        {416, "range_not_satisfiable"},
        {417, "expectation_failed"},
        {418, "im_a_teapot"},
        {421, "misdirected_request"},
        {422, "unprocessable_content"},
        {423, "locked"},
        {424, "failed_dependency"},
        {425, "too_early"},
        {426, "upgrade_required"},
        {428, "precondition_required"},
        {429, "too_many_requests"},
        {431, "request_header_fields_too_large"},
        {451, "unavailable_for_legal_reasons"},
        {500, "internal_server_error"},
        {501, "not_implemented"},
        {502, "bad_gateway"},
        {503, "service_unavailable"},
        {504, "gateway_timeout"},
        {505, "http_version_not_supported"},
        {506, "variant_also_negotiates"},
        {507, "insufficient_storage"},
        {508, "loop_detected"},
        {510, "not_extended"},
        {511, "network_authentication_required"},
    };
    auto it = phrases.find(code);
    if (it != phrases.end()) return it->second;
    return code < 500 ? "client_error" : "server_error";
}

std::string schema_identity(const Schema& s) {
    std::string out;
    canonical(s, out);
    return out;
}

std::vector<ErrorClass> classify_errors(const std::vector<ErrorInput>& inputs, const OpenApiDoc& doc,
                                        const ConvertOptions& options) {
    struct Building {
        ErrorClass c;
        std::optional<Schema> shape;  // resolved object, for subset tests
        std::vector<std::string> descriptions;
        bool wildcard = false;
        std::size_t first = 0;
    };
    auto resolved_object = [&](const Schema& s) -> std::optional<Schema> {
        const Schema* cur = &s;
        Schema holder;
        for (int depth = 0; cur->kind == Schema::Kind::named_ref && depth < 32; ++depth) {
            const Schema* def = doc.find_schema(cur->name);
            if (!def) return std::nullopt;
            holder = normalize_schema(*def, doc, options.max_union_variants);
            cur = &holder;
        }
        if (cur->kind == Schema::Kind::object && !cur->properties.empty()) return *cur;
        return std::nullopt;
    };
    auto informative = [](const Schema& s) {
        if (s.kind == Schema::Kind::any) return false;
        return !(s.kind == Schema::Kind::object && s.properties.empty() && !s.additional);
    };

    std::vector<Building> classes;
    std::map<std::pair<int, std::string>, std::size_t> index;
    std::map<int, std::vector<std::string>> declaring;
    struct Loose {
        int code;
        std::size_t input;
    };
    std::vector<Loose> schemaless;
    auto add_member = [](Building& b, const ErrorInput& in) {
        if (std::find(b.c.members.begin(), b.c.members.end(), in.op_name) == b.c.members.end()) b.c.members.push_back(in.op_name);
        std::string desc = prose(in.response->description);
        if (!desc.empty()) b.descriptions.push_back(desc);
    };
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto& in = inputs[i];
        int code = status_code(in.response->status);
        if (code < 400 || code > 599) continue;
        auto& ops = declaring[code];
        if (std::find(ops.begin(), ops.end(), in.op_name) == ops.end()) ops.push_back(in.op_name);
        std::optional<Schema> schema;
        if (in.response->schema) {
            Schema n = normalize_schema(*in.response->schema, doc, options.max_union_variants);
            if (informative(n)) schema = std::move(n);
        }
        if (!schema) {
            schemaless.push_back({code, i});
            continue;
        }
        auto key = std::make_pair(code, schema_identity(*schema));
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, classes.size()).first;
            Building b;
            b.c.code = code;
            b.shape = resolved_object(*schema);
            b.c.schema = std::move(schema);
            b.wildcard = wildcard_status(in.response->status);
            b.first = i;
            classes.push_back(std::move(b));
        }
        add_member(classes[it->second], in);
    }

    // Dominant class per status: most members, first on ties.
    std::map<int, std::size_t> dominant;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        auto [it, fresh] = dominant.emplace(classes[k].c.code, k);
        if (!fresh && classes[k].c.members.size() > classes[it->second].c.members.size()) it->second = k;
    }
    std::vector<bool> absorbed(classes.size(), false);
    for (std::size_t k = 0; k < classes.size(); ++k) {
        std::size_t d = dominant.at(classes[k].c.code);
        if (k == d || !classes[k].shape || !classes[d].shape) continue;
        const Schema& small = *classes[k].shape;
        const Schema& big = *classes[d].shape;
        bool subset = std::all_of(small.properties.begin(), small.properties.end(), [&](const Property& p) {
            const Schema* q = big.property(p.name);
            return q && schema_identity(*q) == schema_identity(*p.schema);
        });
        if (!subset) continue;
        absorbed[k] = true;
        auto& into = classes[d];
        for (const auto& m : classes[k].c.members) {
            if (std::find(into.c.members.begin(), into.c.members.end(), m) == into.c.members.end()) into.c.members.push_back(m);
        }
        into.descriptions.insert(into.descriptions.end(), classes[k].descriptions.begin(), classes[k].descriptions.end());
        into.first = std::min(into.first, classes[k].first);
    }
    for (const auto& loose : schemaless) {
        const auto& in = inputs[loose.input];
        auto it = dominant.find(loose.code);
        if (it == dominant.end()) {
            Building b;
            b.c.code = loose.code;
            b.wildcard = wildcard_status(in.response->status);
            b.first = loose.input;
            dominant.emplace(loose.code, classes.size());
            absorbed.push_back(false);
            classes.push_back(std::move(b));
            it = dominant.find(loose.code);
        }
        auto& into = classes[it->second];
        into.first = std::min(into.first, loose.input);
        add_member(into, in);
    }

    std::vector<Building> kept;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (!absorbed[k]) kept.push_back(std::move(classes[k]));
    }
    for (auto& b : kept) {
        // Members in the order their operations were given.
        const auto& order = declaring[b.c.code];
        std::sort(b.c.members.begin(), b.c.members.end(), [&](const std::string& x, const std::string& y) {
            return std::find(order.begin(), order.end(), x) < std::find(order.begin(), order.end(), y);
        });
        b.c.global = b.c.members.size() * 2 >= order.size();
        std::map<std::string, int> tally;
        int best = 0;
        for (const auto& d : b.descriptions) {
            if (++tally[d] > best) {
                best = tally[d];
                b.c.desc = d;
            }
        }
        // Ties go to the description seen first.
        for (const auto& d : b.descriptions) {
            if (tally[d] == best) {
                b.c.desc = d;
                break;
            }
        }
    }
    std::stable_sort(kept.begin(), kept.end(), [](const Building& a, const Building& b) {
        if (a.c.code != b.c.code) return a.c.code < b.c.code;
        if (a.c.global != b.c.global) return a.c.global;
        return a.first < b.first;
    });
    std::set<std::pair<int, std::string>> labels;
    std::vector<ErrorClass> out;
    for (auto& b : kept) {
        std::string label;
        if (options.error_label_source == ErrorLabelSource::description_slug) label = description_slug(b.c.desc);
        if (label.empty()) label = b.wildcard ? (b.c.code < 500 ? "client_error" : "server_error") : reason_label(b.c.code);
        std::string unique = label;
        for (int n = 2; !labels.insert({b.c.code, unique}).second; ++n) unique = label + "_" + std::to_string(n);
        b.c.label = unique;
        out.push_back(std::move(b.c));
    }
    return out;
}

ConvertResult convert(const OpenApiDoc& doc, const ConvertOptions& options) {
    if (options.inline_threshold < 0) throw std::invalid_argument("inline_threshold must be >= 0");
    return Converter(doc, options).run();
}

void merge_fragment(LapisDocument& base, const LapisDocument& fragment) {
    auto overlay = [](auto& into, const auto& from, auto key) {
        for (const auto& item : from) {
            auto it = std::find_if(into.begin(), into.end(), [&](const auto& x) { return key(x) == key(item); });
            if (it != into.end()) {
                *it = item;
            } else {
                into.push_back(item);
            }
        }
    };
    const Meta& m = fragment.meta;
    if (!m.api.empty()) base.meta.api = m.api;
    if (!m.base.empty()) base.meta.base = m.base;
    if (m.version) base.meta.version = m.version;
    if (m.desc) base.meta.desc = m.desc;
    if (m.auth.scheme != AuthScheme::none) base.meta.auth = m.auth;
    overlay(base.types, fragment.types, [](const TypeDef& t) { return t.name; });
    overlay(base.ops, fragment.ops, [](const Operation& o) { return o.name; });
    overlay(base.webhooks, fragment.webhooks, [](const Webhook& w) { return w.name; });
    if (fragment.errors) {
        if (!base.errors) base.errors.emplace();
        if (fragment.errors->base_type) base.errors->base_type = fragment.errors->base_type;
        overlay(base.errors->entries, fragment.errors->entries,
                [](const ErrorDef& e) { return std::make_pair(e.code, e.label); });
    }
    if (fragment.limits) base.limits = fragment.limits;
    overlay(base.flows, fragment.flows, [](const Flow& f) { return f.name; });
}

}  // namespace lapis
