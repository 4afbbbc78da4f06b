#pragma once

// In-memory model of a LAPIS document. Parser, emitter and converter all
// produce or consume these types; equality is structural and field-by-field.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lapis/box.hpp"
#include "lapis/diagnostic.hpp"

namespace lapis {

// ---------------------------------------------------------------------------
// Types

enum class ScalarKind { str, int_, float_, bool_, date, datetime, file, any };

std::string_view to_string(ScalarKind kind);
std::optional<ScalarKind> scalar_from_string(std::string_view name);

struct TypeExpr;

struct ScalarType {
    ScalarKind kind = ScalarKind::any;
    friend bool operator==(const ScalarType&, const ScalarType&) = default;
};

struct NamedType {
    std::string name;
    friend bool operator==(const NamedType&, const NamedType&) = default;
};

struct ArrayType {
    Box<TypeExpr> element;
    friend bool operator==(const ArrayType&, const ArrayType&) = default;
};

/// `{str:T}`; keys are always strings.
struct MapType {
    Box<TypeExpr> value;
    friend bool operator==(const MapType&, const MapType&) = default;
};

struct TypeExpr {
    std::variant<ScalarType, NamedType, ArrayType, MapType> node;

    static TypeExpr scalar(ScalarKind kind) { return {ScalarType{kind}}; }
    static TypeExpr named(std::string name) { return {NamedType{std::move(name)}}; }
    static TypeExpr array(TypeExpr element) { return {ArrayType{std::move(element)}}; }
    static TypeExpr map(TypeExpr value) { return {MapType{std::move(value)}}; }

    bool is_scalar(ScalarKind kind) const {
        const auto* s = std::get_if<ScalarType>(&node);
        return s != nullptr && s->kind == kind;
    }

    friend bool operator==(const TypeExpr&, const TypeExpr&) = default;
};

/// A default value after `=`. `text` is the decoded value (quotes and escapes
/// removed for strings); `kind` records how it was written so that emission
/// reproduces the same token.
struct Literal {
    enum class Kind { string, integer, number, boolean, bare };
    Kind kind = Kind::bare;
    std::string text;

    friend bool operator==(const Literal&, const Literal&) = default;
};

struct Field {
    std::string name;
    TypeExpr type;
    bool optional = false;
    std::optional<Literal> default_value;
    std::optional<std::string> since;
    /// Present when deprecated; empty string means "deprecated, no reason".
    std::optional<std::string> deprecated;

    friend bool operator==(const Field&, const Field&) = default;
};

struct ObjectBody {
    std::vector<Field> fields;
    friend bool operator==(const ObjectBody&, const ObjectBody&) = default;
};

struct EnumBody {
    std::vector<std::string> variants;
    friend bool operator==(const EnumBody&, const EnumBody&) = default;
};

struct TypeDef {
    std::string name;
    std::variant<ObjectBody, EnumBody> body;

    friend bool operator==(const TypeDef&, const TypeDef&) = default;
};

// ---------------------------------------------------------------------------
// Meta

enum class AuthScheme { bearer, apikey, basic, oauth2, none };
enum class CredentialLocation { header, query, cookie };

std::string_view to_string(AuthScheme scheme);
std::string_view to_string(CredentialLocation location);

struct AuthSpec {
    AuthScheme scheme = AuthScheme::none;
    std::optional<CredentialLocation> location;
    std::optional<std::string> name;

    friend bool operator==(const AuthSpec&, const AuthSpec&) = default;
};

struct Meta {
    std::string api;
    std::string base;
    std::optional<std::string> version;
    std::optional<std::string> desc;
    AuthSpec auth;

    friend bool operator==(const Meta&, const Meta&) = default;
};

// ---------------------------------------------------------------------------
// Operations and webhooks

enum class HttpMethod { get, post, put, patch, delete_, head, options };

std::string_view to_string(HttpMethod method);
std::optional<HttpMethod> method_from_string(std::string_view text);

enum class ParamLocation { path, query, body, header };

std::string_view to_string(ParamLocation location);
std::optional<ParamLocation> location_from_string(std::string_view text);

/// Location a parameter gets when no `@location` annotation is written:
/// GET/DELETE/HEAD/OPTIONS take query parameters, the rest take a body.
ParamLocation default_location(HttpMethod method);

struct Param {
    std::string name;
    TypeExpr type;
    bool optional = false;
    std::optional<Literal> default_value;
    ParamLocation location = ParamLocation::query;
    bool location_explicit = false;
    /// Name on the wire when it differs from `name` (`@header:X-Event-ID`).
    /// Only legal together with an explicit location.
    std::optional<std::string> wire_name;

    friend bool operator==(const Param&, const Param&) = default;
};

struct Modifiers {
    bool paginated = false;
    bool idempotent = false;
    bool stream = false;
    bool deprecated = false;

    friend bool operator==(const Modifiers&, const Modifiers&) = default;
};

using Output = std::variant<TypeExpr, ObjectBody>;

struct Operation {
    std::string name;
    HttpMethod method = HttpMethod::get;
    std::string path;
    std::vector<std::string> desc;
    std::vector<Param> inputs;
    std::optional<Output> output;
    Modifiers modifiers;

    friend bool operator==(const Operation&, const Operation&) = default;
};

struct Webhook {
    std::string name;
    HttpMethod method = HttpMethod::post;
    std::string path;
    /// The `!` line; empty when the source had none.
    std::string trigger;
    std::vector<Param> payload;

    friend bool operator==(const Webhook&, const Webhook&) = default;
};

// ---------------------------------------------------------------------------
// Errors and limits

struct ErrorDef {
    int code = 500;
    std::string label;
    std::string desc;
    /// Empty = global error; otherwise the operations it is scoped to.
    std::vector<std::string> ops;
    std::vector<Field> extra_fields;

    friend bool operator==(const ErrorDef&, const ErrorDef&) = default;
};

struct ErrorSection {
    std::optional<std::string> base_type;
    std::vector<ErrorDef> entries;

    friend bool operator==(const ErrorSection&, const ErrorSection&) = default;
};

enum class RatePeriod { second, minute, hour, day, month };

std::string_view to_string(RatePeriod period);
std::optional<RatePeriod> period_from_string(std::string_view text);

struct RateSpec {
    std::uint64_t amount = 1;
    RatePeriod period = RatePeriod::minute;
    std::optional<std::string> scope;
    std::optional<std::string> note;

    friend bool operator==(const RateSpec&, const RateSpec&) = default;
};

struct Plan {
    std::string name;
    std::vector<RateSpec> rates;
    std::vector<RateSpec> quotas;

    friend bool operator==(const Plan&, const Plan&) = default;
};

struct OnExceed {
    int code = 429;
    std::string behavior;

    friend bool operator==(const OnExceed&, const OnExceed&) = default;
};

struct LimitsSection {
    std::optional<OnExceed> on_exceed;
    std::vector<Plan> plans;

    friend bool operator==(const LimitsSection&, const LimitsSection&) = default;
};

// ---------------------------------------------------------------------------
// Flows

struct FlowExpr;

struct FlowStep {
    std::string name;
    bool repeated = false;
    friend bool operator==(const FlowStep&, const FlowStep&) = default;
};

struct FlowWait {
    std::string label;
    friend bool operator==(const FlowWait&, const FlowWait&) = default;
};

struct FlowBranch {
    std::vector<FlowExpr> arms;
    friend bool operator==(const FlowBranch& a, const FlowBranch& b);
};

struct FlowSeq {
    std::vector<FlowExpr> steps;
    friend bool operator==(const FlowSeq& a, const FlowSeq& b);
};

struct FlowExpr {
    std::variant<FlowStep, FlowWait, FlowBranch, FlowSeq> node;

    static FlowExpr step(std::string name, bool repeated = false) {
        return {FlowStep{std::move(name), repeated}};
    }
    static FlowExpr wait(std::string label) { return {FlowWait{std::move(label)}}; }
    static FlowExpr branch(std::vector<FlowExpr> arms) { return {FlowBranch{std::move(arms)}}; }
    static FlowExpr seq(std::vector<FlowExpr> steps) { return {FlowSeq{std::move(steps)}}; }

    friend bool operator==(const FlowExpr&, const FlowExpr&) = default;
};

inline bool operator==(const FlowBranch& a, const FlowBranch& b) { return a.arms == b.arms; }
inline bool operator==(const FlowSeq& a, const FlowSeq& b) { return a.steps == b.steps; }

struct FlowCondition {
    std::string branch;
    std::string prose;
    friend bool operator==(const FlowCondition&, const FlowCondition&) = default;
};

struct Flow {
    std::string name;
    std::optional<std::string> title;
    FlowExpr expr;
    std::vector<FlowCondition> conditions;

    friend bool operator==(const Flow&, const Flow&) = default;
};

// ---------------------------------------------------------------------------

struct LapisDocument {
    Meta meta;
    std::vector<TypeDef> types;
    std::vector<Operation> ops;
    std::vector<Webhook> webhooks;
    std::optional<ErrorSection> errors;
    std::optional<LimitsSection> limits;
    std::vector<Flow> flows;

    friend bool operator==(const LapisDocument&, const LapisDocument&) = default;
};

// ---------------------------------------------------------------------------
// Lexical helpers shared by parser, emitter, validator and converter.

bool is_identifier(std::string_view text);

/// `-?[0-9]+`
bool is_integer_literal(std::string_view text);

/// Decimal with a fraction and/or exponent: `-?[0-9]+(\.[0-9]+)?([eE][+-]?[0-9]+)?`,
/// excluding plain integers.
bool is_number_literal(std::string_view text);

/// Non-empty single line without leading or trailing whitespace.
bool is_trimmed_line(std::string_view text);

/// Text usable as one unquoted token: non-empty, no whitespace, no `#`, `"`, `@`
/// prefix, and not readable as a number or boolean.
bool is_bare_token(std::string_view text);

/// Prose lines (descriptions, triggers, conditions) must be a single trimmed
/// line that does not start with a structural marker.
bool is_prose_line(std::string_view text);

/// `{name}` placeholders of a route template, in order.
std::vector<std::string> path_template_params(std::string_view path);

/// Names of every flow step (operation or webhook) appearing in `expr`.
void collect_flow_steps(const FlowExpr& expr, std::vector<std::string>& out);

// ---------------------------------------------------------------------------

/// All invariant violations in `doc`. Never throws; an empty result (or one
/// holding only warnings) means the document can be emitted.
std::vector<Diagnostic> validate(const LapisDocument& doc);

}  // namespace lapis
