#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lapis {

/// 1-based source position of a construct in LAPIS text.
struct SourceSpan {
    int line = 1;
    int column = 1;
    int length = 0;

    friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

enum class Severity { error, warning };

/// A finding from the parser or the validator.
///
/// `code` is a stable kebab-case identifier (tests and tooling match on it);
/// `subject` names the AST entity the finding is about, using the same keys as
/// the parser's source map, so validator findings can be traced back to lines.
struct Diagnostic {
    Severity severity = Severity::error;
    std::string code;
    std::string message;
    std::string subject;
    std::optional<SourceSpan> span;

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags) {
        if (d.severity == Severity::error) return true;
    }
    return false;
}

inline std::size_t count_errors(const std::vector<Diagnostic>& diags) {
    std::size_t n = 0;
    for (const auto& d : diags) {
        if (d.severity == Severity::error) ++n;
    }
    return n;
}

/// "3:14: error[dangling-type-ref]: ..." style rendering.
std::string format_diagnostic(const Diagnostic& d, const std::string& file = {});

}  // namespace lapis
