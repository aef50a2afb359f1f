#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpuwatch/catalog.hpp"
#include "gpuwatch/ingest.hpp"

namespace gpuwatch {

struct AlignmentResult {
    std::string node;
    std::int64_t t0Used = 0;
    std::string method = "scrapeCountDrop";
    std::int64_t scrapeInterval = 600;
    std::int64_t dropoutThreshold = 3000;
    std::int64_t lastGoodScrape = 0;
    double payloadBefore = 0.0;  // payload at the last good scrape
    double payloadAfter = 0.0;   // payload at the first collapsed scrape (0 for a gap)
    std::string rule;            // "gap" or "payloadDrop"
};

// Locates t0 via scrape payload collapse inside [collectStart, collectEnd].
// Rule (a): the observation gap after a scrape exceeds the dropout threshold.
// Rule (b): payload falls below 50% of the trailing median (6 scrapes) and
// does not recover within the dropout threshold. (a) takes precedence at each
// candidate; the earliest collapse wins. Returns nullopt when no collapse is
// found ("noCollapse": the incident is excluded from forensic tables).
std::optional<AlignmentResult> alignScrapeCountDrop(const NodeSeries& series,
                                                    const IncidentRecord& incident,
                                                    std::int64_t scrapeInterval = 600,
                                                    std::int64_t dropout = 3000);

// Per-scrape payload: number of present column samples at each timeline
// timestamp within [begin, end].
std::vector<std::pair<std::int64_t, std::size_t>> payloadSeries(
    const NodeSeries& series, std::int64_t begin, std::int64_t end);

enum class FamilyStatus { disappeared, persistent };

struct DisappearanceReport {
    // per (metric, labels) column with >= minLongSamples before t0
    std::map<ColumnKey, FamilyStatus> columnStatus;
    // per metric name: disappeared / partial / persistent over its columns
    std::map<std::string, std::string> metricStatus;
    // metric -> gpu-label values whose columns disappeared (partial loss detail)
    std::map<std::string, std::vector<std::string>> partialGpuLoss;
};

DisappearanceReport detectDisappearance(const NodeSeries& series, std::int64_t t0,
                                        std::size_t minLongSamples = 3,
                                        std::int64_t postHorizon = 6000,
                                        const std::string& gpuLabel = "gpu");

struct ShiftEntry {
    ColumnKey column;
    double delta = 0.0;    // meanAdjacent - meanBaseline
    double diffStd = 0.0;  // stdAdjacent - stdBaseline
};

struct ForensicSummary {
    std::string node;
    std::int64_t t0 = 0;
    std::string category;
    std::size_t numSignalsLong = 0;  // columns with >= minLongSamples in baseline
    std::vector<ShiftEntry> ranked;  // |delta| descending, ties by column name
    std::vector<ColumnKey> vanished;  // qualified in baseline, nothing in the adjacent interval
    bool adjacentBefore = true;
};

// Baseline [t0 - baselineMinutes, t0); adjacent interval (t0 - afterMinutes, t0]
// when adjacentBefore, else [t0, t0 + afterMinutes].
ForensicSummary rankShifts(const NodeSeries& series, std::int64_t t0,
                           const std::string& category, int baselineMinutes = 30,
                           int afterMinutes = 5, bool adjacentBefore = true,
                           std::size_t minLongSamples = 3);

std::string forensicSummaryCsv(const std::vector<ForensicSummary>& summaries);
std::string alignmentCsv(
    const std::vector<std::tuple<IncidentRecord, std::optional<AlignmentResult>, std::string>>&
        results);

}  // namespace gpuwatch
