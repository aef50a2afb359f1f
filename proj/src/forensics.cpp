#include "gpuwatch/forensics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "gpuwatch/csv.hpp"
#include "gpuwatch/stats.hpp"
#include "gpuwatch/time_util.hpp"

namespace gpuwatch {

std::vector<std::pair<std::int64_t, std::size_t>> payloadSeries(
    const NodeSeries& series, std::int64_t begin, std::int64_t end) {
    std::vector<std::pair<std::int64_t, std::size_t>> out;
    for (std::size_t i = 0; i < series.timeline.size(); ++i) {
        const std::int64_t t = series.timeline[i];
        if (t < begin || t > end) continue;
        std::size_t count = 0;
        for (const auto& [key, col] : series.columns)
            if (!isMissing(col[i])) ++count;
        out.emplace_back(t, count);
    }
    return out;
}

std::optional<AlignmentResult> alignScrapeCountDrop(const NodeSeries& series,
                                                    const IncidentRecord& incident,
                                                    std::int64_t scrapeInterval,
                                                    std::int64_t dropout) {
    if (!incident.refinedT0) return std::nullopt;
    const std::int64_t begin = incident.collectStart();
    const std::int64_t end = incident.collectEnd();
    auto payload = payloadSeries(series, begin, end);
    if (payload.empty()) return std::nullopt;

    auto makeResult = [&](std::size_t lastGoodIdx, const char* rule,
                          double after) {
        AlignmentResult r;
        r.node = series.node;
        r.scrapeInterval = scrapeInterval;
        r.dropoutThreshold = dropout;
        r.lastGoodScrape = payload[lastGoodIdx].first;
        r.t0Used = r.lastGoodScrape + scrapeInterval;
        r.payloadBefore = static_cast<double>(payload[lastGoodIdx].second);
        r.payloadAfter = after;
        r.rule = rule;
        return r;
    };

    for (std::size_t i = 0; i < payload.size(); ++i) {
        // rule (a): hard observation gap after this scrape
        const std::int64_t next =
            i + 1 < payload.size() ? payload[i + 1].first : end;
        if (next - payload[i].first > dropout)
            return makeResult(i, "gap", 0.0);

        // rule (b): payload below 50% of the trailing median without recovery
        if (i == 0) continue;
        std::vector<double> trailing;
        for (std::size_t j = i >= 6 ? i - 6 : 0; j < i; ++j)
            trailing.push_back(static_cast<double>(payload[j].second));
        const double med = median(std::move(trailing));
        const double cutoff = 0.5 * med;
        if (static_cast<double>(payload[i].second) >= cutoff) continue;
        bool recovered = false;
        for (std::size_t j = i + 1;
             j < payload.size() && payload[j].first <= payload[i].first + dropout; ++j) {
            if (static_cast<double>(payload[j].second) >= cutoff) {
                recovered = true;
                break;
            }
        }
        if (!recovered)
            return makeResult(i - 1, "payloadDrop",
                              static_cast<double>(payload[i].second));
    }
    return std::nullopt;
}

DisappearanceReport detectDisappearance(const NodeSeries& series, std::int64_t t0,
                                        std::size_t minLongSamples,
                                        std::int64_t postHorizon,
                                        const std::string& gpuLabel) {
    DisappearanceReport out;
    auto t0It = std::upper_bound(series.timeline.begin(), series.timeline.end(), t0);
    const std::size_t t0Pos = static_cast<std::size_t>(t0It - series.timeline.begin());
    auto horizonIt = std::upper_bound(series.timeline.begin(), series.timeline.end(),
                                      t0 + postHorizon);
    const std::size_t horizonPos =
        static_cast<std::size_t>(horizonIt - series.timeline.begin());

    for (const auto& [key, col] : series.columns) {
        std::size_t before = 0;
        for (std::size_t i = 0; i < t0Pos; ++i)
            if (!isMissing(col[i])) ++before;
        if (before < minLongSamples) continue;  // too sparse to classify
        std::size_t after = 0;
        for (std::size_t i = t0Pos; i < horizonPos; ++i)
            if (!isMissing(col[i])) ++after;
        out.columnStatus[key] =
            after == 0 ? FamilyStatus::disappeared : FamilyStatus::persistent;
    }

    std::map<std::string, std::pair<std::size_t, std::size_t>> perMetric;  // gone, kept
    for (const auto& [key, status] : out.columnStatus) {
        auto& [gone, kept] = perMetric[key.metric];
        if (status == FamilyStatus::disappeared) {
            ++gone;
            for (const auto& [k, v] : key.labels)
                if (k == gpuLabel) out.partialGpuLoss[key.metric].push_back(v);
        } else {
            ++kept;
        }
    }
    for (const auto& [metric, counts] : perMetric) {
        const auto& [gone, kept] = counts;
        if (gone == 0) {
            out.metricStatus[metric] = "persistent";
            out.partialGpuLoss.erase(metric);
        } else if (kept == 0) {
            out.metricStatus[metric] = "disappeared";
            out.partialGpuLoss.erase(metric);
        } else {
            out.metricStatus[metric] = "partial";
        }
    }
    for (auto& [metric, gpus] : out.partialGpuLoss) std::sort(gpus.begin(), gpus.end());
    return out;
}

ForensicSummary rankShifts(const NodeSeries& series, std::int64_t t0,
                           const std::string& category, int baselineMinutes,
                           int afterMinutes, bool adjacentBefore,
                           std::size_t minLongSamples) {
    ForensicSummary out;
    out.node = series.node;
    out.t0 = t0;
    out.category = category;
    out.adjacentBefore = adjacentBefore;

    const std::int64_t baseBegin = t0 - static_cast<std::int64_t>(baselineMinutes) * 60;
    const std::int64_t baseEnd = t0;  // exclusive
    std::int64_t adjBegin, adjEnd;
    bool adjBeginOpen;
    if (adjacentBefore) {
        adjBegin = t0 - static_cast<std::int64_t>(afterMinutes) * 60;  // exclusive
        adjEnd = t0;                                                   // inclusive
        adjBeginOpen = true;
    } else {
        adjBegin = t0;                                                 // inclusive
        adjEnd = t0 + static_cast<std::int64_t>(afterMinutes) * 60;    // inclusive
        adjBeginOpen = false;
    }

    for (const auto& [key, col] : series.columns) {
        std::vector<double> base, adj;
        for (std::size_t i = 0; i < series.timeline.size(); ++i) {
            const std::int64_t t = series.timeline[i];
            const double v = col[i];
            if (isMissing(v)) continue;
            if (t >= baseBegin && t < baseEnd) base.push_back(v);
            const bool inAdj = adjBeginOpen ? (t > adjBegin && t <= adjEnd)
                                            : (t >= adjBegin && t <= adjEnd);
            if (inAdj) adj.push_back(v);
        }
        if (base.size() < minLongSamples) continue;
        ++out.numSignalsLong;
        if (adj.empty()) {
            out.vanished.push_back(key);
            continue;
        }
        ShiftEntry e;
        e.column = key;
        e.delta = mean(adj) - mean(base);
        e.diffStd = populationStd(adj) - populationStd(base);
        out.ranked.push_back(std::move(e));
    }

    std::stable_sort(out.ranked.begin(), out.ranked.end(),
                     [](const ShiftEntry& a, const ShiftEntry& b) {
                         const double da = std::abs(a.delta), db = std::abs(b.delta);
                         if (da != db) return da > db;
                         return a.column < b.column;
                     });
    return out;
}

std::string forensicSummaryCsv(const std::vector<ForensicSummary>& summaries) {
    std::ostringstream os;
    os.precision(17);
    os << "node,t0,category,numSignalsLong,rank,metric,delta,diffStd\n";
    for (const ForensicSummary& s : summaries) {
        std::size_t rank = 1;
        for (const ShiftEntry& e : s.ranked) {
            os << csvField(s.node) << ',' << s.t0 << ',' << csvField(s.category) << ','
               << s.numSignalsLong << ',' << rank++ << ',' << csvField(e.column.str())
               << ',' << e.delta << ',' << e.diffStd << '\n';
        }
        if (s.ranked.empty())
            os << csvField(s.node) << ',' << s.t0 << ',' << csvField(s.category) << ','
               << s.numSignalsLong << ",,,,\n";
    }
    return os.str();
}

std::string alignmentCsv(
    const std::vector<std::tuple<IncidentRecord, std::optional<AlignmentResult>, std::string>>&
        results) {
    std::ostringstream os;
    os << "node,t0Incident,t0Used,archive,status\n";
    for (const auto& [rec, align, archive] : results) {
        os << csvField(rec.node) << ',' << formatDateTime(rec.catalogDate) << ',';
        if (align) os << formatDateTime(align->t0Used);
        os << ',' << csvField(archive) << ','
           << (align ? "aligned" : "noCollapse") << '\n';
    }
    return os.str();
}

}  // namespace gpuwatch
