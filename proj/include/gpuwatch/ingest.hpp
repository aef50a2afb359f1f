#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gpuwatch/types.hpp"

namespace gpuwatch {

struct ParseDiagnostics {
    std::size_t totalRows = 0;   // data rows seen (header excluded)
    std::size_t malformed = 0;   // rejected rows (bad field count, non-finite value, ...)
    std::size_t duplicates = 0;  // (node,metric,labels,timestamp) collisions, last kept
};

// Parses a tidy archive (header: timestamp,node,metric,labels,value).
// Optional ".bz2" suffix. Malformed rows are skipped and tallied; duplicate
// keys keep the last occurrence. Throws std::runtime_error on unreadable
// files or an unknown header.
std::vector<MetricSample> parseArchive(const std::string& path, ParseDiagnostics& diag);

// One node's telemetry aligned to the union of its observed timestamps.
// Absent samples are NaN.
struct NodeSeries {
    std::string node;
    std::vector<std::int64_t> timeline;  // strictly increasing
    std::map<ColumnKey, std::vector<double>> columns;  // |timeline| entries each
    std::int64_t nativeInterval = 0;     // median consecutive timestamp delta

    std::size_t columnIndexCount() const { return timeline.size(); }
};

// Builds one NodeSeries per node, filtered to [spec.startTime, spec.endTime].
// Nodes with zero in-range samples are excluded (a warning is appended to
// `warnings` when non-null).
std::map<std::string, NodeSeries> buildNodeSeries(
    const std::vector<MetricSample>& samples, const SliceSpec& spec,
    std::vector<std::string>* warnings = nullptr);

struct ColumnGapStats {
    std::size_t missingCount = 0;
    double missRatio = 0.0;
    std::map<std::size_t, std::size_t> gapHistogram;  // gap length (samples) -> count
    std::int64_t longestGapSeconds = 0;
};

struct GapStats {
    std::map<ColumnKey, ColumnGapStats> perColumn;
};

GapStats computeGapStats(const NodeSeries& series);

// Serializes gap stats as CSV: node,metric,labels,missRatio,gapCount,longestGapSeconds
std::string gapStatsCsv(const std::map<std::string, NodeSeries>& series,
                        const std::map<std::string, GapStats>& stats);

// Per-node cap: keeps all windows when under the cap, otherwise draws
// perNodeCap indices uniformly without replacement, seeded from
// (spec.seed, node id). Selected indices are returned sorted ascending.
std::map<std::string, std::vector<std::size_t>> sampleWindows(
    const std::map<std::string, std::vector<std::size_t>>& windowsPerNode,
    const SliceSpec& spec);

}  // namespace gpuwatch
