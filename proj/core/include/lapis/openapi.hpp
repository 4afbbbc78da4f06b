#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lapis/box.hpp"
#include "lapis/diagnostic.hpp"

namespace lapis {

/// Source order is significant everywhere, so trees keep key order.
using Json = nlohmann::ordered_json;

enum class SourceFormat { json, yaml };

/// Fatal load failure. `line`/`column` are 1-based when known, else 0.
class LoadError : public std::runtime_error {
public:
    LoadError(std::string code, const std::string& message, int line = 0, int column = 0)
        : std::runtime_error(line > 0 ? std::to_string(line) + ":" + std::to_string(column) + ": " + message : message),
          code_(std::move(code)), line_(line), column_(column) {}

    const std::string& code() const { return code_; }
    int line() const { return line_; }
    int column() const { return column_; }

private:
    std::string code_;
    int line_;
    int column_;
};

struct Schema;

struct Property {
    std::string name;
    Box<Schema> schema;

    friend bool operator==(const Property&, const Property&) = default;
};

/// Structural view of a JSON Schema node. References to components/schemas
/// stay as named_ref nodes so callers can choose between naming and inlining;
/// every other internal reference is substituted during load.
struct Schema {
    enum class Kind { any, object, array, scalar, named_ref, union_, all_of };
    enum class Flavor { one_of, any_of };

    Kind kind = Kind::any;

    // object. `required` may name properties contributed by sibling allOf
    // parts; after merge_all_of it is a subset of the property names.
    std::vector<Property> properties;
    std::vector<std::string> required;
    std::optional<Box<Schema>> additional;  // additionalProperties schema

    // array
    std::optional<Box<Schema>> items;

    // scalar; `type` is string|integer|number|boolean, or empty when only a
    // format or enum constrains the value.
    std::string type;
    std::string format;
    std::vector<Json> enum_values;
    std::optional<Json> default_value;

    // named_ref
    std::string name;

    // union_ variants or all_of parts
    std::vector<Schema> variants;
    Flavor flavor = Flavor::one_of;

    std::string title;
    std::string description;
    bool nullable = false;
    bool deprecated = false;
    bool read_only = false;
    bool write_only = false;

    bool operator==(const Schema&) const = default;

    static Schema any() { return {}; }
    static Schema named(std::string name) {
        Schema s;
        s.kind = Kind::named_ref;
        s.name = std::move(name);
        return s;
    }
    static Schema scalar(std::string type, std::string format = {}) {
        Schema s;
        s.kind = Kind::scalar;
        s.type = std::move(type);
        s.format = std::move(format);
        return s;
    }
    const Schema* property(std::string_view name) const;
    bool is_required(std::string_view name) const;
};

enum class ParamIn { path, query, header, cookie };

struct Parameter {
    std::string name;
    ParamIn in = ParamIn::query;
    bool required = false;
    Schema schema;
    std::string description;
    bool deprecated = false;
};

struct RequestBody {
    std::string media_type;
    Schema schema;
    bool required = false;
    std::string description;
};

struct Response {
    std::string status;  // "200", "4XX", "default"
    std::string description;
    std::vector<std::string> media_types;
    std::optional<Schema> schema;  // from the preferred media type
};

struct RawOperation {
    std::string method;  // lowercase
    std::string path;
    std::optional<std::string> operation_id;
    std::string summary;
    std::string description;
    std::vector<Parameter> parameters;  // path-level ones merged in
    std::optional<RequestBody> request_body;
    std::vector<Response> responses;  // source order
    bool deprecated = false;
    std::vector<std::string> tags;
    /// Scheme names of the operation's own requirement; empty list means
    /// explicitly unauthenticated, nullopt means inherit the global one.
    std::optional<std::vector<std::string>> security;
};

struct WebhookEntry {
    std::string name;
    RawOperation op;  // op.path holds the webhook key
};

struct SecurityScheme {
    std::string name;
    std::string type;    // http | apiKey | oauth2 | openIdConnect | mutualTLS
    std::string scheme;  // http: bearer | basic | ...
    std::string in;      // apiKey: header | query | cookie
    std::string param_name;
};

struct Info {
    std::string title;
    std::string version;
    std::string description;
};

/// Field path to the number of removals, e.g. {"info.contact": 1, "x-*": 40}.
using DiscardTally = std::map<std::string, int>;

struct OpenApiDoc {
    std::string openapi_version;  // e.g. "3.1.0"
    int minor_version = 0;
    Info info;
    std::vector<std::string> servers;  // at most one survives discard
    std::vector<SecurityScheme> security_schemes;
    std::optional<std::vector<std::string>> security;  // global requirement
    std::vector<RawOperation> operations;               // path order, then method order
    std::vector<WebhookEntry> webhooks;
    std::vector<std::pair<std::string, Schema>> components_schemas;
    /// Raw `$ref` occurrences per component schema name; every name present.
    std::map<std::string, int> ref_counts;
    DiscardTally discarded;
    std::vector<Diagnostic> warnings;

    const Schema* find_schema(std::string_view name) const;
    int ref_count(std::string_view name) const;
    /// Rebuilds the name lookup after components_schemas changes.
    void reindex();

private:
    std::map<std::string, std::size_t, std::less<>> schema_index_;
};

/// A leading `{` (after an optional BOM and whitespace) means JSON.
SourceFormat sniff_format(std::string_view bytes);

/// Block-style YAML in one fixed style: 2-space indent, sequences not indented
/// under their key, keys in tree order, plain scalars unless a YAML 1.1 or 1.2
/// reader would change their type, single quotes otherwise, literal blocks for
/// multi-line strings, no line folding. parse_source reads it back to an equal
/// tree.
std::string to_yaml(const Json& tree);

/// Parses JSON or YAML into a tree. Without a hint, a leading `{` (after
/// whitespace) selects JSON. Throws LoadError with a position on bad input.
Json parse_source(std::string_view bytes, std::optional<SourceFormat> hint = std::nullopt);

/// Removes the fields conversion never uses and counts each removal.
std::pair<Json, DiscardTally> discard_metadata(Json raw);

/// Counts `$ref` values of the form "#/components/schemas/<name>" anywhere in
/// the tree, including names that are not defined.
std::map<std::string, int> count_schema_refs(const Json& raw);

/// Version gate, discard, reference resolution. Throws LoadError on
/// unsupported versions, unresolvable or external refs, and malformed input.
OpenApiDoc load_openapi(std::string_view bytes, std::optional<SourceFormat> hint = std::nullopt);
OpenApiDoc load_openapi_file(const std::filesystem::path& path);

/// Flattens all_of nodes at any depth. Later parts override earlier ones on
/// property-name collisions (warning); required sets are unioned; incompatible
/// parts fall back to `any` with a diagnostic. Named parts are looked up in
/// `doc` when given.
Schema merge_all_of(const Schema& s, const OpenApiDoc* doc = nullptr, std::vector<Diagnostic>* diags = nullptr);

/// Picks one variant of a union: nulls are dropped (making the result
/// nullable), more than `max_variants` or a mix of structured and scalar
/// variants gives `any`, otherwise the variant with the highest ref count wins,
/// first listed on ties. Applies to the top-level node only.
Schema collapse_union(const Schema& s, const OpenApiDoc& doc, int max_variants = 4);

/// Collapses unions and merges all_of parts at every depth; the result has
/// neither node kind left.
Schema normalize_schema(const Schema& s, const OpenApiDoc& doc, int max_variants = 4,
                        std::vector<Diagnostic>* diags = nullptr);

std::string_view to_string(ParamIn in);

}  // namespace lapis
