#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpuwatch/detectors.hpp"
#include "gpuwatch/features.hpp"

namespace gpuwatch {

struct WeakEvent {
    std::string node;
    std::size_t startWindow = 0;  // inclusive window indices
    std::size_t endWindow = 0;
    std::int64_t startTime = 0;
    double peak = 0.0;
    double threshold = 0.0;  // per-node signature quantile that triggered it
};

// Maximal runs of >= minRun consecutive windows with scalar signature strictly
// above the per-node nearest-rank q-quantile. `pooled` switches to one
// threshold over all nodes.
std::vector<WeakEvent> extractWeakEvents(const SignatureMatrix& sig, double q = 0.99,
                                         int minRun = 3, bool pooled = false);

struct LeadStats {
    std::vector<double> leads;  // one entry per event, in windows
    double avgLead = 0.0;
    double medianLead = 0.0;
    double maxLead = 0.0;
    std::size_t detectedEvents = 0;  // events with an alert inside the lookback
};

// For each event, the earliest alert within [startWindow - lookback,
// startWindow]; lead = startWindow - earliestAlertIndex, 0 when no alert
// qualifies. With includeMisses=false, undetected events are excluded from
// the aggregates instead of contributing zero.
LeadStats computeLeadTime(const std::vector<WeakEvent>& events, const ScoreSeries& alerts,
                          int lookback = 48, bool includeMisses = true);

struct RunStats {
    std::size_t runCount = 0;
    std::size_t totalAlertWindows = 0;
    std::optional<double> avgRunLen;  // absent when runCount == 0
};

RunStats alertRunStats(const ScoreSeries& alerts);

struct ComparisonRow {
    std::string plane;
    std::string method;
    bool available = true;
    std::optional<LeadStats> lead;  // absent when no weak events exist
    RunStats runs;
};

// Table-shaped comparison restricted to available planes; unavailable planes
// are annotated, never zero-filled.
std::string comparisonCsv(const std::vector<ComparisonRow>& rows, bool anyEvents);

// Per-event rows for every (plane, detector) with lead stats; each row's
// LeadStats.leads is aligned with `events`.
std::string eventsCsv(const std::vector<WeakEvent>& events,
                      const std::vector<ComparisonRow>& rows);

// Grouped bar chart of average lead per (plane, detector), static SVG.
std::string leadBarChartSvg(const std::vector<ComparisonRow>& rows);

}  // namespace gpuwatch
