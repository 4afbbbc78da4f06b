#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lapis/model.hpp"
#include "lapis/openapi.hpp"

namespace lapis {

/// Whether `default` responses count as error definitions.
enum class DefaultResponses { exclude, include };

struct DuplicationReport {
    int op_count = 0;
    int error_def_count = 0;
    int unique_codes = 0;
    /// Status key as written ("404", "4XX", "default") to occurrences.
    std::map<std::string, int> per_code_counts;
    /// Highest count; the lowest status wins ties. Absent when there are no
    /// error definitions.
    std::optional<std::pair<std::string, int>> most_repeated;
};

/// Counts every 4xx/5xx response entry across all operations, before any
/// deduplication. Webhooks are not operations and are not counted.
DuplicationReport error_duplication_report(const OpenApiDoc& doc,
                                           DefaultResponses defaults = DefaultResponses::exclude);

struct DuplicationRow {
    std::string spec;
    DuplicationReport report;
};

/// Plain-text table: Spec, Ops, Error defs, Unique codes, Most repeated.
std::string format_duplication_table(const std::vector<DuplicationRow>& rows);

/// Character savings (UTF-8 code points) of a conversion, split by cause.
/// Source sizes are measured on to_yaml renderings so JSON and YAML inputs
/// are comparable.
struct WasteBreakdown {
    std::int64_t source_chars = 0;
    std::int64_t lapis_chars = 0;
    std::int64_t total_savings = 0;
    /// Fields removed by discard_metadata.
    std::int64_t metadata = 0;
    /// Kept info/servers/security, paths, parameters and request bodies
    /// against [meta], [ops] and [webhooks].
    std::int64_t signature = 0;
    /// components.schemas against [types].
    std::int64_t types = 0;
    /// Per-operation 4xx/5xx responses against [errors].
    std::int64_t errors = 0;
    /// total_savings minus the four buckets: YAML nesting overhead that no
    /// single class owns, and any authored [limits]/[flows].
    std::int64_t residual = 0;
};

WasteBreakdown waste_decomposition(const Json& raw, const LapisDocument& converted);

/// The YAML a spec is measured against: the bytes themselves for YAML
/// sources, to_yaml of the tree for JSON sources.
std::string yaml_baseline(std::string_view source_bytes);

}  // namespace lapis
