#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lapis/diagnostic.hpp"
#include "lapis/model.hpp"

namespace lapis {

/// Thrown by the single-construct parsers. `span.column` is 1-based within the
/// text that was passed in.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string code, std::string message, SourceSpan span)
        : std::runtime_error(message), code_(std::move(code)), span_(span) {}

    const std::string& code() const { return code_; }
    const SourceSpan& span() const { return span_; }

private:
    std::string code_;
    SourceSpan span_;
};

/// Subject key (see Diagnostic::subject) to the line that declared it.
using SourceMap = std::map<std::string, SourceSpan>;

struct ParseOptions {
    int indent_width = 2;
    /// Fragments merged into converter output may omit [meta], its required
    /// keys, and [ops].
    bool require_core_sections = true;
};

struct ParseResult {
    /// Present iff no error-severity diagnostic was produced.
    std::optional<LapisDocument> document;
    std::vector<Diagnostic> diagnostics;
    SourceMap locations;

    bool ok() const { return document.has_value(); }
};

ParseResult parse_document(std::string_view text, const ParseOptions& options = {});

TypeExpr parse_type_expr(std::string_view text);
AuthSpec parse_auth(std::string_view text);
/// Continuation lines must already be joined.
FlowExpr parse_flow_expr(std::string_view text);

/// Attaches source positions to diagnostics (e.g. from validate) whose
/// subject appears in `locations` and that have no span yet.
void locate(std::vector<Diagnostic>& diagnostics, const SourceMap& locations);

}  // namespace lapis
