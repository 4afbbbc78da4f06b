#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lapis/diagnostic.hpp"
#include "lapis/model.hpp"

namespace lapis {

struct EmitStyle {
    int indent_width = 2;
    /// Flow expressions longer than this wrap before `->`; nullopt never wraps.
    std::optional<int> max_line = 100;
    bool blank_line_between_ops = true;
};

class EmitError : public std::runtime_error {
public:
    explicit EmitError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

/// Canonical text of each section including its header line; empty when the
/// section is omitted. Concatenated in order they form emit_document().
struct EmittedSections {
    std::string meta, types, ops, webhooks, errors, limits, flows;

    std::string joined() const { return meta + types + ops + webhooks + errors + limits + flows; }
};

/// Throws EmitError if validate(doc) reports errors.
EmittedSections emit_sections(const LapisDocument& doc, const EmitStyle& style = {});

/// Throws EmitError if validate(doc) reports errors.
std::string emit_document(const LapisDocument& doc, const EmitStyle& style = {});

std::string emit_type_expr(const TypeExpr& type);
std::string emit_literal(const Literal& literal);
std::string emit_auth(const AuthSpec& auth);
/// Single-line rendering, no wrapping.
std::string emit_flow_expr(const FlowExpr& expr);
/// `"..."` with `\"` and `\\` escapes.
std::string quote(std::string_view text);

}  // namespace lapis
