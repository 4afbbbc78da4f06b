#include "lapis/openapi.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace lapis {

namespace {

// ---------------------------------------------------------------- sources

std::size_t first_invalid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        auto b = static_cast<unsigned char>(s[i]);
        std::size_t len = b < 0x80 ? 1 : (b >> 5) == 0x6 ? 2 : (b >> 4) == 0xE ? 3 : (b >> 3) == 0x1E ? 4 : 0;
        if (len == 0 || i + len > s.size()) return i;
        for (std::size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return i;
        }
        i += len;
    }
    return std::string_view::npos;
}

std::pair<int, int> line_col(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    int line = 1;
    std::size_t line_start = 0;
    for (std::size_t i = 0; i < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            line_start = i + 1;
        }
    }
    return {line, static_cast<int>(byte - line_start) + 1};
}

bool all_of_chars(std::string_view s, bool (*pred)(char)) { return !s.empty() && std::all_of(s.begin(), s.end(), pred); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_hex(char c) { return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F'); }
bool is_octal(char c) { return c >= '0' && c <= '7'; }

bool is_float_text(std::string_view v) {
    std::size_t i = 0;
    if (i < v.size() && (v[i] == '+' || v[i] == '-')) ++i;
    std::size_t int_digits = 0, frac_digits = 0;
    while (i < v.size() && is_digit(v[i])) ++i, ++int_digits;
    bool dot = i < v.size() && v[i] == '.';
    if (dot) {
        ++i;
        while (i < v.size() && is_digit(v[i])) ++i, ++frac_digits;
    }
    if (int_digits + frac_digits == 0) return false;
    if (i < v.size() && (v[i] == 'e' || v[i] == 'E')) {
        ++i;
        if (i < v.size() && (v[i] == '+' || v[i] == '-')) ++i;
        if (!all_of_chars(v.substr(i), is_digit)) return false;
        return true;
    }
    return i == v.size() && (dot || int_digits > 0);
}

// Plain scalars resolve with the YAML 1.2 core schema.
Json plain_scalar(const std::string& v) {
    if (v.empty() || v == "~" || v == "null" || v == "Null" || v == "NULL") return nullptr;
    if (v == "true" || v == "True" || v == "TRUE") return true;
    if (v == "false" || v == "False" || v == "FALSE") return false;
    std::string_view s = v;
    std::string_view digits = s.front() == '+' || s.front() == '-' ? s.substr(1) : s;
    if (all_of_chars(digits, is_digit)) {
        std::int64_t n = 0;
        auto body = s.front() == '+' ? s.substr(1) : s;
        auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), n);
        if (ec == std::errc() && ptr == body.data() + body.size()) return n;
        return std::strtod(v.c_str(), nullptr);
    }
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'o')) {
        auto body = s.substr(2);
        bool hex = s[1] == 'x';
        if (all_of_chars(body, hex ? is_hex : is_octal)) {
            std::int64_t n = 0;
            auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), n, hex ? 16 : 8);
            if (ec == std::errc() && ptr == body.data() + body.size()) return n;
        }
        return v;
    }
    if (is_float_text(s)) {
        double d = std::strtod(v.c_str(), nullptr);
        if (std::isfinite(d)) return d;
    }
    return v;
}

bool is_yaml_line_break(std::string_view s, std::size_t i) {
    // U+0085, U+2028, U+2029 break lines for YAML 1.1 readers.
    return (s.compare(i, 2, "\xC2\x85") == 0) || (s.compare(i, 3, "\xE2\x80\xA8") == 0) ||
           (s.compare(i, 3, "\xE2\x80\xA9") == 0) || (s.compare(i, 3, "\xEF\xBB\xBF") == 0);
}

bool has_special_chars(std::string_view s, bool allow_newline) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto c = static_cast<unsigned char>(s[i]);
        if (c == '\n' && allow_newline) continue;
        if (c < 0x20 && c != '\t') return true;
        if (c == 0x7F || is_yaml_line_break(s, i)) return true;
    }
    return false;
}

// Strings a YAML 1.1 reader would resolve to something else are quoted too.
bool needs_quotes(std::string_view s) {
    if (s.empty() || s.size() > 1000) return true;
    if (!plain_scalar(std::string(s)).is_string()) return true;
    if (s.front() == ' ' || s.front() == '\t' || s.back() == ' ' || s.back() == '\t' || s.back() == ':') return true;
    if (std::string_view("-?:,[]{}#&*!|>'\"%@`").find(s.front()) != std::string_view::npos) return true;
    if (s.find(": ") != std::string_view::npos || s.find(" #") != std::string_view::npos ||
        s.find(":\t") != std::string_view::npos || s.find("\t#") != std::string_view::npos) {
        return true;
    }
    if (has_special_chars(s, false) || s.find('\n') != std::string_view::npos) return true;
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const char* word : {"y", "n", "yes", "no", "on", "off", ".inf", ".nan", "+.inf", "-.inf"}) {
        if (lower == word) return true;
    }
    if (s.find_first_not_of("0123456789+-._:eE") == std::string_view::npos) return true;
    return s.size() >= 5 && all_of_chars(s.substr(0, 4), is_digit) && s[4] == '-';
}

std::string single_quoted(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += '\'';
        out += c;
    }
    return out + "'";
}

// Literal blocks need every line to be either empty or start with content.
bool literal_block_ok(std::string_view s) {
    if (s.find('\n') == std::string_view::npos || has_special_chars(s, true)) return false;
    if (s.front() == ' ' || s.front() == '\t' || s.front() == '\n') return false;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find('\n', start);
        if (end == std::string_view::npos) end = s.size();
        auto line = s.substr(start, end - start);
        if (!line.empty() && line.find_first_not_of(" \t") == std::string_view::npos) return false;
        start = end + 1;
    }
    return true;
}

class YamlWriter {
public:
    explicit YamlWriter(std::string& out) : out_(out) {}

    void document(const Json& tree) {
        if (tree.is_object() && !tree.empty()) {
            mapping(tree, 0, false);
        } else if (tree.is_array() && !tree.empty()) {
            sequence(tree, 0, false);
        } else {
            out_ += flat(tree, 0);
            out_ += '\n';
        }
    }

private:
    std::string& out_;

    void pad(int indent) { out_.append(static_cast<std::size_t>(indent), ' '); }

    static bool nested(const Json& v) { return (v.is_object() || v.is_array()) && !v.empty(); }

    static std::string key_text(const std::string& key) { return needs_quotes(key) ? quoted(key) : key; }

    static std::string quoted(std::string_view s) {
        if (!has_special_chars(s, false) && s.find('\n') == std::string_view::npos) return single_quoted(s);
        return Json(std::string(s)).dump(-1, ' ', false, Json::error_handler_t::replace);
    }

    // Scalar or empty collection; `indent` is the owning node's indentation.
    std::string flat(const Json& v, int indent) {
        switch (v.type()) {
            case Json::value_t::null: return "null";
            case Json::value_t::object: return "{}";
            case Json::value_t::array: return "[]";
            case Json::value_t::string: {
                const auto& s = v.get_ref<const std::string&>();
                if (!needs_quotes(s)) return s;
                if (literal_block_ok(s)) return literal(s, indent);
                return quoted(s);
            }
            default: return v.dump();
        }
    }

    static std::string literal(std::string_view s, int indent) {
        std::size_t trailing = 0;
        while (trailing < s.size() && s[s.size() - 1 - trailing] == '\n') ++trailing;
        std::string out = trailing == 0 ? "|-" : trailing == 1 ? "|" : "|+";
        auto body = s.substr(0, s.size() - trailing);
        std::string prefix(static_cast<std::size_t>(indent + 2), ' ');
        std::size_t start = 0;
        while (start <= body.size()) {
            auto end = body.find('\n', start);
            if (end == std::string_view::npos) end = body.size();
            out += '\n';
            if (end > start) out += prefix;
            out.append(body.substr(start, end - start));
            start = end + 1;
        }
        for (std::size_t i = 1; i < trailing; ++i) out += '\n';
        return out;
    }

    void value(const Json& v, int indent) {
        if (v.is_object() && !v.empty()) {
            out_ += '\n';
            mapping(v, indent + 2, false);
        } else if (v.is_array() && !v.empty()) {
            out_ += '\n';
            sequence(v, indent, false);
        } else {
            out_ += ' ';
            out_ += flat(v, indent);
            out_ += '\n';
        }
    }

    // `inline_first`: the first entry continues a "- " already written.
    void mapping(const Json& obj, int indent, bool inline_first) {
        bool first = true;
        for (const auto& [key, v] : obj.items()) {
            if (!(first && inline_first)) pad(indent);
            first = false;
            out_ += key_text(key);
            out_ += ':';
            value(v, indent);
        }
    }

    void sequence(const Json& arr, int indent, bool inline_first) {
        bool first = true;
        for (const auto& item : arr) {
            if (!(first && inline_first)) pad(indent);
            first = false;
            out_ += "- ";
            if (item.is_object() && !item.empty()) {
                mapping(item, indent + 2, true);
            } else if (item.is_array() && !item.empty()) {
                sequence(item, indent + 2, true);
            } else {
                out_ += flat(item, indent);
                out_ += '\n';
            }
        }
    }
};

Json from_yaml(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined: return nullptr;
        case YAML::NodeType::Scalar: {
            const std::string& tag = node.Tag();
            if (tag == "!" || tag == "tag:yaml.org,2002:str") return node.Scalar();
            return plain_scalar(node.Scalar());
        }
        case YAML::NodeType::Sequence: {
            Json arr = Json::array();
            for (const auto& item : node) arr.push_back(from_yaml(item));
            return arr;
        }
        case YAML::NodeType::Map: {
            Json obj = Json::object();
            for (const auto& kv : node) {
                if (!kv.first.IsScalar() && !kv.first.IsNull()) {
                    auto mark = kv.first.Mark();
                    throw LoadError("malformed-yaml", "mapping keys must be scalars", mark.line + 1, mark.column + 1);
                }
                std::string key = kv.first.IsNull() ? "" : kv.first.Scalar();
                obj[key] = from_yaml(kv.second);
            }
            return obj;
        }
    }
    return nullptr;
}

// ---------------------------------------------------------------- pointers

std::string decode_pointer_token(std::string_view token) {
    std::string out;
    for (std::size_t i = 0; i < token.size(); ++i) {
        char c = token[i];
        if (c == '%' && i + 2 < token.size() && is_hex(token[i + 1]) && is_hex(token[i + 2])) {
            out += static_cast<char>(std::stoi(std::string(token.substr(i + 1, 2)), nullptr, 16));
            i += 2;
        } else if (c == '~' && i + 1 < token.size() && (token[i + 1] == '0' || token[i + 1] == '1')) {
            out += token[i + 1] == '0' ? '~' : '/';
            ++i;
        } else {
            out += c;
        }
    }
    return out;
}

std::vector<std::string> pointer_tokens(std::string_view ref) {
    std::vector<std::string> out;
    std::string_view rest = ref.substr(1);  // drop '#'
    if (rest.empty()) return out;
    if (rest.front() != '/') return {std::string(1, '\0')};  // not a JSON pointer
    rest.remove_prefix(1);
    for (;;) {
        auto slash = rest.find('/');
        out.push_back(decode_pointer_token(rest.substr(0, slash)));
        if (slash == std::string_view::npos) break;
        rest.remove_prefix(slash + 1);
    }
    return out;
}

constexpr std::string_view kSchemaRefPrefix = "#/components/schemas/";

// The component name when `ref` names a whole component schema.
std::optional<std::string> component_schema_name(std::string_view ref) {
    if (ref.substr(0, kSchemaRefPrefix.size()) != kSchemaRefPrefix) return std::nullopt;
    std::string_view rest = ref.substr(kSchemaRefPrefix.size());
    if (rest.empty() || rest.find('/') != std::string_view::npos) return std::nullopt;
    return decode_pointer_token(rest);
}

// ---------------------------------------------------------------- discard

const std::set<std::string, std::less<>> kNameMapKeys{
    "properties", "patternProperties", "paths",   "schemas",   "responses",     "parameters", "headers",
    "securitySchemes", "requestBodies", "links", "callbacks", "webhooks", "content", "encoding",
    "variables", "pathItems", "$defs",  "definitions", "dependentSchemas"};

// Values that are data, never spec objects.
const std::set<std::string, std::less<>> kLiteralKeys{"default", "enum", "const", "security", "required", "scopes",
                                                      "mapping", "tags"};

class Discarder {
public:
    explicit Discarder(DiscardTally& tally) : tally_(tally) {}

    void root(Json& doc) {
        if (!doc.is_object()) return;
        if (doc.contains("openapi")) {
            doc.erase("openapi");
            bump("openapi");
        }
        if (auto it = doc.find("tags"); it != doc.end()) {
            bump("tags", it->is_array() ? static_cast<int>(it->size()) : 1);
            doc.erase(it);
        }
        if (auto it = doc.find("info"); it != doc.end() && it->is_object()) {
            for (const char* key : {"contact", "license", "termsOfService"}) {
                if (it->contains(key)) {
                    it->erase(key);
                    bump(std::string("info.") + key);
                }
            }
        }
        spec_object(doc, "");
    }

private:
    DiscardTally& tally_;

    void bump(const std::string& key, int n = 1) {
        if (n > 0) tally_[key] += n;
    }

    void spec_object(Json& obj, std::string_view parent_key) {
        std::vector<std::string> drop;
        for (auto& [key, value] : obj.items()) {
            if (key.rfind("x-", 0) == 0) {
                drop.push_back(key);
                bump("x-*");
            } else if (key == "externalDocs") {
                drop.push_back(key);
                bump("externalDocs");
            } else if (key == "example" || key == "examples") {
                drop.push_back(key);
                bump("examples");
            } else if (key == "xml" || key == "discriminator") {
                drop.push_back(key);
                bump(key);
            } else if (key == "headers" && parent_key == "responses" && value.is_object()) {
                drop.push_back(key);
                bump("responses.headers");
            }
        }
        for (const auto& key : drop) obj.erase(key);

        if (auto it = obj.find("servers"); it != obj.end() && it->is_array() && it->size() > 1) {
            bump("servers.extra", static_cast<int>(it->size()) - 1);
            it->erase(it->begin() + 1, it->end());
        }
        for (auto& [key, value] : obj.items()) {
            if (kLiteralKeys.count(key)) continue;
            if (value.is_object()) {
                if (kNameMapKeys.count(key)) {
                    name_map(value, key);
                } else {
                    spec_object(value, "");
                }
            } else if (value.is_array()) {
                for (auto& item : value) {
                    if (item.is_object()) spec_object(item, "");
                }
            }
        }
    }

    // Keys are user-chosen names; values are spec objects.
    void name_map(Json& map, std::string_view key) {
        for (auto& [name, value] : map.items()) {
            if (!value.is_object()) continue;
            if (key == "callbacks") {
                name_map(value, "paths");
            } else {
                spec_object(value, key);
            }
        }
    }
};

void count_refs(const Json& node, std::map<std::string, int>& counts) {
    if (node.is_object()) {
        if (auto it = node.find("$ref"); it != node.end() && it->is_string()) {
            if (auto name = component_schema_name(it->get_ref<const std::string&>())) ++counts[*name];
        }
        for (const auto& [key, value] : node.items()) count_refs(value, counts);
    } else if (node.is_array()) {
        for (const auto& item : node) count_refs(item, counts);
    }
}

// ---------------------------------------------------------------- build

const std::vector<std::string> kMethods{"get", "put", "post", "delete", "options", "head", "patch", "trace"};

std::string string_field(const Json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return {};
    if (it->is_string()) return it->get<std::string>();
    if (it->is_null()) return {};
    return it->dump();
}

bool bool_field(const Json& obj, const char* key) {
    auto it = obj.find(key);
    return it != obj.end() && it->is_boolean() && it->get<bool>();
}

// JSON first, then any JSON-suffixed type, then forms, then the first listed.
std::string pick_media(const Json& content) {
    if (!content.is_object() || content.empty()) return {};
    if (content.contains("application/json")) return "application/json";
    for (const auto& [key, value] : content.items()) {
        if (key.find("json") != std::string::npos) return key;
    }
    for (const char* form : {"multipart/form-data", "application/x-www-form-urlencoded"}) {
        if (content.contains(form)) return form;
    }
    return content.begin().key();
}

std::optional<std::vector<std::string>> security_names(const Json& obj) {
    auto it = obj.find("security");
    if (it == obj.end() || !it->is_array()) return std::nullopt;
    std::vector<std::string> names;
    for (const auto& requirement : *it) {
        if (!requirement.is_object()) continue;
        for (const auto& [name, scopes] : requirement.items()) {
            if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
        }
    }
    return names;
}

class Builder {
public:
    Builder(const Json& root, OpenApiDoc& doc) : root_(root), doc_(doc) {}

    void run() {
        if (auto info = root_.find("info"); info != root_.end() && info->is_object()) {
            doc_.info = {string_field(*info, "title"), string_field(*info, "version"), string_field(*info, "description")};
        }
        if (auto servers = root_.find("servers"); servers != root_.end() && servers->is_array()) {
            for (const auto& s : *servers) {
                if (s.is_object()) doc_.servers.push_back(server_url(s));
            }
        }
        doc_.security = security_names(root_);
        if (auto components = root_.find("components"); components != root_.end() && components->is_object()) {
            if (auto schemas = components->find("schemas"); schemas != components->end() && schemas->is_object()) {
                for (const auto& [name, value] : schemas->items()) doc_.components_schemas.emplace_back(name, Schema{});
                doc_.reindex();
                std::size_t i = 0;
                for (const auto& [name, value] : schemas->items()) {
                    stack_.push_back(std::string(kSchemaRefPrefix) + name);
                    doc_.components_schemas[i++].second = schema(value);
                    stack_.pop_back();
                }
            }
            if (auto schemes = components->find("securitySchemes"); schemes != components->end() && schemes->is_object()) {
                for (const auto& [name, value] : schemes->items()) {
                    const Json& s = deref(value);
                    std::string scheme = string_field(s, "scheme");
                    std::transform(scheme.begin(), scheme.end(), scheme.begin(), [](unsigned char c) { return std::tolower(c); });
                    doc_.security_schemes.push_back(
                        {name, string_field(s, "type"), scheme, string_field(s, "in"), string_field(s, "name")});
                }
            }
        }
        if (auto paths = root_.find("paths"); paths != root_.end() && paths->is_object()) {
            for (const auto& [path, item] : paths->items()) {
                for (auto& op : path_item(path, deref(item))) doc_.operations.push_back(std::move(op));
            }
        }
        if (auto hooks = root_.find("webhooks"); hooks != root_.end() && hooks->is_object()) {
            for (const auto& [name, item] : hooks->items()) {
                for (auto& op : path_item(name, deref(item))) doc_.webhooks.push_back({name, std::move(op)});
            }
        }
    }

private:
    const Json& root_;
    OpenApiDoc& doc_;
    std::vector<std::string> stack_;  // pointer refs being expanded

    void warn(std::string code, std::string message) {
        doc_.warnings.push_back({Severity::warning, std::move(code), std::move(message), {}, std::nullopt});
    }

    // Template variables take their declared defaults.
    static std::string server_url(const Json& server) {
        std::string url = string_field(server, "url");
        auto vars = server.find("variables");
        if (vars == server.end() || !vars->is_object()) return url;
        for (const auto& [name, var] : vars->items()) {
            if (!var.is_object()) continue;
            std::string placeholder = "{" + name + "}";
            std::string value = string_field(var, "default");
            for (auto pos = url.find(placeholder); pos != std::string::npos; pos = url.find(placeholder, pos + value.size())) {
                url.replace(pos, placeholder.size(), value);
            }
        }
        return url;
    }

    const Json& resolve(const std::string& ref) {
        if (ref.empty() || ref.front() != '#') {
            throw LoadError("external-ref", "external reference '" + ref + "' is not supported");
        }
        const Json* node = &root_;
        for (const auto& token : pointer_tokens(ref)) {
            if (node->is_object()) {
                auto it = node->find(token);
                if (it == node->end()) throw LoadError("unresolvable-ref", "unresolvable reference '" + ref + "'");
                node = &*it;
            } else if (node->is_array() && all_of_chars(token, is_digit) && std::stoul(token) < node->size()) {
                node = &(*node)[std::stoul(token)];
            } else {
                throw LoadError("unresolvable-ref", "unresolvable reference '" + ref + "'");
            }
        }
        return *node;
    }

    // Follows reference chains on non-schema objects.
    const Json& deref(const Json& node) {
        const Json* cur = &node;
        std::vector<std::string> seen;
        while (cur->is_object()) {
            auto it = cur->find("$ref");
            if (it == cur->end() || !it->is_string()) break;
            std::string ref = it->get<std::string>();
            if (std::find(seen.begin(), seen.end(), ref) != seen.end()) {
                throw LoadError("unresolvable-ref", "reference cycle through '" + ref + "'");
            }
            seen.push_back(ref);
            cur = &resolve(ref);
        }
        return *cur;
    }

    static bool structural(const Json& j) {
        if (!j.is_object()) return false;
        for (const char* key : {"type", "properties", "items", "$ref", "allOf", "oneOf", "anyOf", "enum", "const",
                                "additionalProperties", "format"}) {
            if (j.contains(key)) return true;
        }
        return false;
    }

    Schema schema(const Json& j) {
        if (!j.is_object()) return Schema::any();
        if (auto it = j.find("$ref"); it != j.end() && it->is_string()) {
            const std::string& ref = it->get_ref<const std::string&>();
            if (auto name = component_schema_name(ref)) {
                if (!doc_.find_schema(*name)) throw LoadError("unresolvable-ref", "unresolvable reference '" + ref + "'");
                Schema s = Schema::named(*name);
                s.description = string_field(j, "description");
                return s;
            }
            if (std::find(stack_.begin(), stack_.end(), ref) != stack_.end()) {
                warn("ref-cycle", "reference cycle through '" + ref + "' kept as any");
                return Schema::any();
            }
            const Json& target = resolve(ref);
            stack_.push_back(ref);
            Schema s = schema(target);
            stack_.pop_back();
            return s;
        }

        Schema s;
        s.title = string_field(j, "title");
        s.description = string_field(j, "description");
        s.nullable = bool_field(j, "nullable");
        s.deprecated = bool_field(j, "deprecated");
        s.read_only = bool_field(j, "readOnly");
        s.write_only = bool_field(j, "writeOnly");

        if (auto all = j.find("allOf"); all != j.end() && all->is_array()) {
            s.kind = Schema::Kind::all_of;
            for (const auto& part : *all) s.variants.push_back(schema(part));
            Json own = j;
            own.erase("allOf");
            own.erase("description");
            own.erase("title");
            if (structural(own)) s.variants.push_back(schema(own));
            return s;
        }
        for (const char* key : {"oneOf", "anyOf"}) {
            auto it = j.find(key);
            if (it == j.end() || !it->is_array()) continue;
            bool any_structural = std::any_of(it->begin(), it->end(), [](const Json& v) { return structural(v); });
            // Variants that only restate `required` leave the own shape in charge.
            if (!any_structural && structural(j.contains("type") || j.contains("properties") ? j : Json())) break;
            s.kind = Schema::Kind::union_;
            s.flavor = std::string_view(key) == "oneOf" ? Schema::Flavor::one_of : Schema::Flavor::any_of;
            for (const auto& v : *it) s.variants.push_back(schema(v));
            return s;
        }

        std::vector<std::string> types;
        if (auto t = j.find("type"); t != j.end()) {
            if (t->is_string()) {
                types.push_back(t->get<std::string>());
            } else if (t->is_array()) {
                for (const auto& x : *t) {
                    if (x.is_string()) types.push_back(x.get<std::string>());
                }
            }
        }
        if (std::find(types.begin(), types.end(), "null") != types.end()) {
            types.erase(std::remove(types.begin(), types.end(), "null"), types.end());
            if (types.empty()) return null_schema(s);
            s.nullable = true;
        }
        if (types.size() > 1) {
            s.kind = Schema::Kind::union_;
            s.flavor = Schema::Flavor::any_of;
            for (const auto& t : types) {
                Json one = j;
                one["type"] = t;
                s.variants.push_back(schema(one));
            }
            return s;
        }
        std::string type = types.empty() ? "" : types.front();
        if (type == "object" || (type.empty() && (j.contains("properties") || j.contains("additionalProperties")))) {
            return object_schema(j, std::move(s));
        }
        if (type == "array" || (type.empty() && j.contains("items"))) {
            s.kind = Schema::Kind::array;
            auto items = j.find("items");
            s.items = Box<Schema>(items != j.end() ? schema(*items) : Schema::any());
            return s;
        }
        bool constrained = j.contains("enum") || j.contains("const") || j.contains("format");
        if (type.empty() && !constrained) {
            if (j.contains("default")) s.default_value = j.at("default");
            return s;
        }
        s.kind = Schema::Kind::scalar;
        s.type = type;
        s.format = string_field(j, "format");
        if (auto e = j.find("enum"); e != j.end() && e->is_array() && !e->empty()) {
            s.enum_values.assign(e->begin(), e->end());
        } else if (auto c = j.find("const"); c != j.end()) {
            s.enum_values.push_back(*c);
        }
        if (auto d = j.find("default"); d != j.end()) s.default_value = *d;
        if (s.type.empty() && !s.enum_values.empty()) s.type = infer_type(s.enum_values);
        if (s.type == "null") return null_schema(s);
        return s;
    }

    static Schema null_schema(Schema s) {
        s.kind = Schema::Kind::scalar;
        s.type = "null";
        s.nullable = true;
        return s;
    }

    static std::string infer_type(const std::vector<Json>& values) {
        auto all = [&](auto pred) { return std::all_of(values.begin(), values.end(), pred); };
        if (all([](const Json& v) { return v.is_string() || v.is_null(); })) return "string";
        if (all([](const Json& v) { return v.is_number_integer() || v.is_null(); })) return "integer";
        if (all([](const Json& v) { return v.is_number() || v.is_null(); })) return "number";
        if (all([](const Json& v) { return v.is_boolean() || v.is_null(); })) return "boolean";
        return {};
    }

    Schema object_schema(const Json& j, Schema s) {
        s.kind = Schema::Kind::object;
        if (auto props = j.find("properties"); props != j.end() && props->is_object()) {
            for (const auto& [name, value] : props->items()) s.properties.push_back({name, Box<Schema>(schema(value))});
        }
        if (auto req = j.find("required"); req != j.end() && req->is_array()) {
            for (const auto& r : *req) {
                if (r.is_string() && std::find(s.required.begin(), s.required.end(), r.get<std::string>()) == s.required.end()) {
                    s.required.push_back(r.get<std::string>());
                }
            }
        }
        if (auto add = j.find("additionalProperties"); add != j.end()) {
            if (add->is_object()) {
                s.additional = Box<Schema>(schema(*add));
            } else if (add->is_boolean() && add->get<bool>()) {
                s.additional = Box<Schema>(Schema::any());
            }
        }
        return s;
    }

    Schema content_schema(const Json& obj, std::string* media_out = nullptr) {
        auto content = obj.find("content");
        if (content == obj.end() || !content->is_object()) return Schema::any();
        std::string media = pick_media(*content);
        if (media_out) *media_out = media;
        const Json& mt = deref((*content)[media]);
        auto sch = mt.find("schema");
        return sch != mt.end() ? schema(*sch) : Schema::any();
    }

    std::optional<Parameter> parameter(const Json& raw, const std::string& where) {
        const Json& j = deref(raw);
        if (!j.is_object()) return std::nullopt;
        Parameter p;
        p.name = string_field(j, "name");
        std::string in = string_field(j, "in");
        if (in == "path") p.in = ParamIn::path;
        else if (in == "query") p.in = ParamIn::query;
        else if (in == "header") p.in = ParamIn::header;
        else if (in == "cookie") p.in = ParamIn::cookie;
        else {
            warn("unknown-param-location", fmt::format("{}: parameter '{}' has unknown location '{}'; dropped", where, p.name, in));
            return std::nullopt;
        }
        p.required = p.in == ParamIn::path || bool_field(j, "required");
        p.description = string_field(j, "description");
        p.deprecated = bool_field(j, "deprecated");
        if (auto sch = j.find("schema"); sch != j.end()) {
            p.schema = schema(*sch);
        } else {
            p.schema = content_schema(j);
        }
        return p;
    }

    static void merge_params(std::vector<Parameter>& into, Parameter p) {
        for (auto& q : into) {
            if (q.name == p.name && q.in == p.in) {
                q = std::move(p);
                return;
            }
        }
        into.push_back(std::move(p));
    }

    std::vector<RawOperation> path_item(const std::string& path, const Json& item) {
        std::vector<RawOperation> ops;
        if (!item.is_object()) return ops;
        std::vector<Parameter> common;
        if (auto ps = item.find("parameters"); ps != item.end() && ps->is_array()) {
            for (const auto& p : *ps) {
                if (auto param = parameter(p, path)) merge_params(common, std::move(*param));
            }
        }
        for (const auto& [key, value] : item.items()) {
            if (std::find(kMethods.begin(), kMethods.end(), key) == kMethods.end() || !value.is_object()) continue;
            RawOperation op;
            op.method = key;
            op.path = path;
            if (auto id = value.find("operationId"); id != value.end() && id->is_string()) op.operation_id = id->get<std::string>();
            op.summary = string_field(value, "summary");
            op.description = string_field(value, "description");
            op.deprecated = bool_field(value, "deprecated");
            if (auto tags = value.find("tags"); tags != value.end() && tags->is_array()) {
                for (const auto& t : *tags) {
                    if (t.is_string()) op.tags.push_back(t.get<std::string>());
                }
            }
            op.security = security_names(value);
            op.parameters = common;
            std::string where = key + " " + path;
            if (auto ps = value.find("parameters"); ps != value.end() && ps->is_array()) {
                for (const auto& p : *ps) {
                    if (auto param = parameter(p, where)) merge_params(op.parameters, std::move(*param));
                }
            }
            if (auto body = value.find("requestBody"); body != value.end()) {
                const Json& b = deref(*body);
                if (b.is_object() && b.contains("content") && b["content"].is_object() && !b["content"].empty()) {
                    RequestBody rb;
                    rb.schema = content_schema(b, &rb.media_type);
                    rb.required = bool_field(b, "required");
                    rb.description = string_field(b, "description");
                    op.request_body = std::move(rb);
                }
            }
            if (auto responses = value.find("responses"); responses != value.end() && responses->is_object()) {
                for (const auto& [status, raw] : responses->items()) {
                    const Json& r = deref(raw);
                    Response resp;
                    resp.status = status;
                    if (r.is_object()) {
                        resp.description = string_field(r, "description");
                        if (auto content = r.find("content"); content != r.end() && content->is_object() && !content->empty()) {
                            for (const auto& [media, mt] : content->items()) resp.media_types.push_back(media);
                            const Json& mt = deref((*content)[pick_media(*content)]);
                            if (auto sch = mt.find("schema"); sch != mt.end()) resp.schema = schema(*sch);
                        }
                    }
                    op.responses.push_back(std::move(resp));
                }
            }
            ops.push_back(std::move(op));
        }
        return ops;
    }
};

void version_gate(const Json& raw, OpenApiDoc& doc) {
    if (raw.contains("swagger")) {
        throw LoadError("unsupported-version", "unsupported version: Swagger " + string_field(raw, "swagger") +
                                                   " documents are not supported; convert to OpenAPI 3.x first");
    }
    auto it = raw.find("openapi");
    if (it == raw.end()) throw LoadError("unsupported-version", "unsupported version: no 'openapi' field");
    std::string v = it->is_string() ? it->get<std::string>() : it->dump();
    int major = 0, minor = 0;
    auto dot = v.find('.');
    auto [p1, e1] = std::from_chars(v.data(), v.data() + (dot == std::string::npos ? v.size() : dot), major);
    if (e1 != std::errc() || major != 3) {
        throw LoadError("unsupported-version", "unsupported version: openapi '" + v + "' (need 3.x)");
    }
    if (dot != std::string::npos) {
        auto rest = std::string_view(v).substr(dot + 1);
        std::from_chars(rest.data(), rest.data() + rest.size(), minor);
    }
    doc.openapi_version = v;
    doc.minor_version = minor;
}

// ---------------------------------------------------------------- normalize

bool has_information(const Schema& s) {
    return s.kind != Schema::Kind::any || s.default_value.has_value();
}

class Merger {
public:
    Merger(const OpenApiDoc* doc, std::vector<Diagnostic>* diags) : doc_(doc), diags_(diags) {}

    Schema deep(const Schema& s) {
        switch (s.kind) {
            case Schema::Kind::all_of: return merge(s);
            case Schema::Kind::object: {
                Schema out = s;
                for (auto& p : out.properties) *p.schema = deep(*p.schema);
                if (out.additional) **out.additional = deep(**out.additional);
                return out;
            }
            case Schema::Kind::array: {
                Schema out = s;
                **out.items = deep(**out.items);
                return out;
            }
            case Schema::Kind::union_: {
                Schema out = s;
                for (auto& v : out.variants) v = deep(v);
                return out;
            }
            default: return s;
        }
    }

private:
    const OpenApiDoc* doc_;
    std::vector<Diagnostic>* diags_;
    std::vector<std::string> expanding_;

    void report(const char* code, std::string message) {
        if (diags_) diags_->push_back({Severity::warning, code, std::move(message), {}, std::nullopt});
    }

    // The definition behind a named part, merged; nullopt when unavailable.
    std::optional<Schema> expand(const Schema& named) {
        const Schema* def = doc_ ? doc_->find_schema(named.name) : nullptr;
        if (!def) {
            report("allof-unresolved", "allOf part '" + named.name + "' cannot be looked up; merged as any");
            return std::nullopt;
        }
        if (std::find(expanding_.begin(), expanding_.end(), named.name) != expanding_.end()) {
            report("allof-cycle", "allOf part '" + named.name + "' refers back to itself; merged as any");
            return std::nullopt;
        }
        expanding_.push_back(named.name);
        Schema out = deep(*def);
        expanding_.pop_back();
        if (out.kind == Schema::Kind::named_ref) return expand(out);
        return out;
    }

    Schema merge(const Schema& s) {
        std::vector<Schema> parts;
        for (const auto& p : s.variants) {
            Schema m = deep(p);
            if (has_information(m)) parts.push_back(std::move(m));
        }
        Schema out;
        if (parts.size() == 1) {
            out = std::move(parts.front());
        } else if (!parts.empty()) {
            std::vector<Schema> concrete;
            for (auto& p : parts) {
                if (p.kind == Schema::Kind::named_ref) {
                    auto e = expand(p);
                    if (!e) return with_outer(Schema::any(), s);
                    concrete.push_back(std::move(*e));
                } else {
                    concrete.push_back(std::move(p));
                }
            }
            out = combine(concrete);
        }
        return with_outer(std::move(out), s);
    }

    static Schema with_outer(Schema out, const Schema& outer) {
        if (!outer.description.empty()) out.description = outer.description;
        if (!outer.title.empty() && out.kind != Schema::Kind::named_ref) out.title = outer.title;
        out.nullable = out.nullable || outer.nullable;
        out.deprecated = out.deprecated || outer.deprecated;
        return out;
    }

    Schema combine(const std::vector<Schema>& parts) {
        auto all = [&](Schema::Kind k) {
            return std::all_of(parts.begin(), parts.end(), [&](const Schema& p) { return p.kind == k; });
        };
        if (all(Schema::Kind::object)) {
            Schema out;
            out.kind = Schema::Kind::object;
            for (const auto& part : parts) {
                for (const auto& prop : part.properties) {
                    auto it = std::find_if(out.properties.begin(), out.properties.end(),
                                           [&](const Property& q) { return q.name == prop.name; });
                    if (it == out.properties.end()) {
                        out.properties.push_back(prop);
                    } else {
                        if (!(*it->schema == *prop.schema)) {
                            report("allof-override", "allOf property '" + prop.name + "' redefined; later part wins");
                        }
                        it->schema = prop.schema;
                    }
                }
                for (const auto& r : part.required) {
                    if (std::find(out.required.begin(), out.required.end(), r) == out.required.end()) out.required.push_back(r);
                }
                if (part.additional) out.additional = part.additional;
                out.nullable = out.nullable || part.nullable;
            }
            std::erase_if(out.required, [&](const std::string& r) { return !out.property(r); });
            return out;
        }
        if (all(Schema::Kind::scalar)) {
            Schema out = parts.front();
            for (std::size_t i = 1; i < parts.size(); ++i) {
                const Schema& p = parts[i];
                if (!p.type.empty() && !out.type.empty() && p.type != out.type) {
                    report("allof-conflict", "allOf mixes scalar types '" + out.type + "' and '" + p.type + "'; merged as any");
                    return Schema::any();
                }
                if (!p.type.empty()) out.type = p.type;
                if (!p.format.empty()) out.format = p.format;
                if (!p.enum_values.empty()) out.enum_values = p.enum_values;
                if (p.default_value) out.default_value = p.default_value;
            }
            return out;
        }
        if (all(Schema::Kind::array)) return parts.back();
        report("allof-conflict", "allOf combines incompatible parts (object, scalar, array or union); merged as any");
        return Schema::any();
    }
};

bool is_null_variant(const Schema& s) { return s.kind == Schema::Kind::scalar && s.type == "null"; }

// Object-like (object, array, map) versus scalar; nullopt for any/unknown.
std::optional<bool> structured(const Schema& s, const OpenApiDoc& doc, int depth = 0) {
    switch (s.kind) {
        case Schema::Kind::object:
        case Schema::Kind::array:
        case Schema::Kind::all_of: return true;
        case Schema::Kind::scalar: return false;
        case Schema::Kind::named_ref: {
            const Schema* def = doc.find_schema(s.name);
            if (!def || depth > 32) return true;
            return structured(*def, doc, depth + 1);
        }
        case Schema::Kind::union_:
        case Schema::Kind::any: return std::nullopt;
    }
    return std::nullopt;
}

Schema collapse_deep(const Schema& s, const OpenApiDoc& doc, int max_variants) {
    Schema out = s;
    for (auto& p : out.properties) *p.schema = collapse_deep(*p.schema, doc, max_variants);
    if (out.additional) **out.additional = collapse_deep(**out.additional, doc, max_variants);
    if (out.items) **out.items = collapse_deep(**out.items, doc, max_variants);
    for (auto& v : out.variants) v = collapse_deep(v, doc, max_variants);
    return collapse_union(out, doc, max_variants);
}

}  // namespace

const Schema* Schema::property(std::string_view name) const {
    for (const auto& p : properties) {
        if (p.name == name) return &*p.schema;
    }
    return nullptr;
}

bool Schema::is_required(std::string_view name) const {
    return std::find(required.begin(), required.end(), name) != required.end();
}

const Schema* OpenApiDoc::find_schema(std::string_view name) const {
    auto it = schema_index_.find(name);
    return it == schema_index_.end() ? nullptr : &components_schemas[it->second].second;
}

int OpenApiDoc::ref_count(std::string_view name) const {
    auto it = ref_counts.find(std::string(name));
    return it == ref_counts.end() ? 0 : it->second;
}

void OpenApiDoc::reindex() {
    schema_index_.clear();
    for (std::size_t i = 0; i < components_schemas.size(); ++i) schema_index_.emplace(components_schemas[i].first, i);
}

std::string_view to_string(ParamIn in) {
    switch (in) {
        case ParamIn::path: return "path";
        case ParamIn::query: return "query";
        case ParamIn::header: return "header";
        case ParamIn::cookie: return "cookie";
    }
    return "query";
}

SourceFormat sniff_format(std::string_view bytes) {
    if (bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);
    auto first = bytes.find_first_not_of(" \t\r\n");
    return first != std::string_view::npos && bytes[first] == '{' ? SourceFormat::json : SourceFormat::yaml;
}

std::string to_yaml(const Json& tree) {
    std::string out;
    YamlWriter(out).document(tree);
    return out;
}

Json parse_source(std::string_view bytes, std::optional<SourceFormat> hint) {
    if (auto bad = first_invalid_utf8(bytes); bad != std::string_view::npos) {
        auto [line, col] = line_col(bytes, bad);
        throw LoadError("invalid-utf8", "input is not valid UTF-8", line, col);
    }
    if (bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);
    if (!hint) hint = sniff_format(bytes);
    if (*hint == SourceFormat::json) {
        try {
            return Json::parse(bytes.begin(), bytes.end());
        } catch (const nlohmann::json::parse_error& e) {
            auto [line, col] = line_col(bytes, e.byte > 0 ? e.byte - 1 : 0);
            throw LoadError("malformed-json", e.what(), line, col);
        }
    }
    try {
        return from_yaml(YAML::Load(std::string(bytes)));
    } catch (const YAML::Exception& e) {
        throw LoadError("malformed-yaml", e.msg, e.mark.line + 1, e.mark.column + 1);
    }
}

std::pair<Json, DiscardTally> discard_metadata(Json raw) {
    DiscardTally tally;
    Discarder(tally).root(raw);
    return {std::move(raw), std::move(tally)};
}

std::map<std::string, int> count_schema_refs(const Json& raw) {
    std::map<std::string, int> counts;
    count_refs(raw, counts);
    return counts;
}

OpenApiDoc load_openapi(std::string_view bytes, std::optional<SourceFormat> hint) {
    Json raw = parse_source(bytes, hint);
    if (!raw.is_object()) throw LoadError("not-an-object", "document root must be a mapping");
    OpenApiDoc doc;
    version_gate(raw, doc);
    auto counts = count_schema_refs(raw);
    auto [pruned, tally] = discard_metadata(std::move(raw));
    doc.discarded = std::move(tally);
    Builder(pruned, doc).run();
    for (const auto& [name, schema] : doc.components_schemas) {
        auto it = counts.find(name);
        doc.ref_counts[name] = it == counts.end() ? 0 : it->second;
    }
    return doc;
}

OpenApiDoc load_openapi_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("io", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string ext = path.extension().string();
    std::optional<SourceFormat> hint;
    if (ext == ".json") hint = SourceFormat::json;
    else if (ext == ".yaml" || ext == ".yml") hint = SourceFormat::yaml;
    return load_openapi(ss.str(), hint);
}

Schema merge_all_of(const Schema& s, const OpenApiDoc* doc, std::vector<Diagnostic>* diags) {
    return Merger(doc, diags).deep(s);
}

Schema collapse_union(const Schema& s, const OpenApiDoc& doc, int max_variants) {
    if (s.kind != Schema::Kind::union_) return s;
    std::vector<const Schema*> variants;
    bool nullable = s.nullable;
    for (const auto& v : s.variants) {
        if (is_null_variant(v)) {
            nullable = true;
        } else {
            variants.push_back(&v);
        }
    }
    auto finish = [&](Schema out) {
        out.nullable = out.nullable || nullable;
        if (!s.description.empty()) out.description = s.description;
        return out;
    };
    if (variants.empty()) return finish(Schema::any());
    if (variants.size() == 1) return finish(*variants.front());
    if (static_cast<int>(variants.size()) > max_variants) return finish(Schema::any());
    bool saw_structured = false, saw_scalar = false;
    for (const auto* v : variants) {
        auto kind = structured(*v, doc);
        if (!kind) return finish(Schema::any());
        (*kind ? saw_structured : saw_scalar) = true;
    }
    if (saw_structured && saw_scalar) return finish(Schema::any());
    const Schema* best = variants.front();
    int best_count = -1;
    for (const auto* v : variants) {
        int count = v->kind == Schema::Kind::named_ref ? doc.ref_count(v->name) : 0;
        if (count > best_count) {
            best = v;
            best_count = count;
        }
    }
    return finish(*best);
}

Schema normalize_schema(const Schema& s, const OpenApiDoc& doc, int max_variants, std::vector<Diagnostic>* diags) {
    Schema collapsed = collapse_deep(s, doc, max_variants);
    Schema merged = merge_all_of(collapsed, &doc, diags);
    return collapse_deep(merged, doc, max_variants);
}

}  // namespace lapis
