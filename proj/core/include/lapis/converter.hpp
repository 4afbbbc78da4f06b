#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lapis/diagnostic.hpp"
#include "lapis/model.hpp"
#include "lapis/openapi.hpp"

namespace lapis {

enum class ErrorLabelSource { reason_phrase, description_slug };

struct ConvertOptions {
    /// Component schemas referenced at most this many times are inlined.
    int inline_threshold = 1;
    int max_union_variants = 4;
    bool keep_descriptions = true;
    ErrorLabelSource error_label_source = ErrorLabelSource::reason_phrase;
};

struct ConvertReport {
    int named_types_emitted = 0;
    /// Distinct component schemas written inline at their use site.
    int schemas_inlined = 0;
    int error_defs_in = 0;
    int error_defs_out = 0;
    DiscardTally discarded_fields;
    std::vector<Diagnostic> warnings;
};

struct ConvertResult {
    LapisDocument document;
    ConvertReport report;
};

/// Deterministic OpenAPI to LAPIS mapping. Never throws on a loaded document;
/// constructs the target format cannot express degrade to `any` with a
/// warning. The result always passes validate() without errors.
ConvertResult convert(const OpenApiDoc& doc, const ConvertOptions& options = {});

/// `createInvoice` -> `create_invoice`; any other character run becomes `_`.
std::string snake_case(std::string_view text);

/// `simple-user` -> `SimpleUser`.
std::string upper_camel_case(std::string_view text);

/// operationId in snake case, else `<method>_<last literal path segment>`.
/// Collisions are resolved by the caller.
std::string synthesize_op_name(const RawOperation& op);

/// HTTP reason phrase as a label: 404 -> not_found. Unknown codes give
/// `client_error` or `server_error`.
std::string reason_label(int code);

struct ErrorInput {
    std::string op_name;
    const Response* response;  // status 4xx/5xx
};

struct ErrorClass {
    int code = 500;
    std::string label;
    std::string desc;
    /// Declaring operations in input order.
    std::vector<std::string> members;
    bool global = false;
    std::optional<Schema> schema;
};

/// One class per (status, schema identity), hashed after normalization.
/// Responses without a schema, and object schemas whose fields are a subset
/// of the dominant class's fields, join that status's dominant class (most
/// members). A class declared by at least half of the operations that declare
/// its status is global; the rest are scoped to their members. Ordered by
/// status, global first, then first appearance.
std::vector<ErrorClass> classify_errors(const std::vector<ErrorInput>& inputs, const OpenApiDoc& doc,
                                        const ConvertOptions& options = {});

/// Structural identity of a schema: ignores descriptions, titles and property
/// order.
std::string schema_identity(const Schema& s);

/// Overlays an authored fragment on converted output. Fragment entries replace
/// converted ones with the same name; [limits] is replaced; flows are added.
void merge_fragment(LapisDocument& base, const LapisDocument& fragment);

}  // namespace lapis
