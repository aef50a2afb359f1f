#include "gpuwatch/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "gpuwatch/csv.hpp"
#include "gpuwatch/stats.hpp"

namespace gpuwatch {

namespace {

bool parseDouble(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

constexpr const char* kTidyHeader = "timestamp,node,metric,labels,value";

}  // namespace

std::vector<MetricSample> parseArchive(const std::string& path, ParseDiagnostics& diag) {
    std::vector<std::string> lines = readLines(path);
    if (lines.empty()) throw std::runtime_error("empty archive: " + path);

    std::string header = lines[0];
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != kTidyHeader)
        throw std::runtime_error("unknown tidy header in " + path + ": " + header);

    std::vector<MetricSample> out;
    out.reserve(lines.size() - 1);
    std::map<std::tuple<std::string, std::string, Labels, std::int64_t>, std::size_t> seen;

    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string& line = lines[li];
        if (line.empty() || line == "\r") continue;
        ++diag.totalRows;
        std::vector<std::string> f = splitCsvLine(line);
        if (f.size() != 5) {
            ++diag.malformed;
            continue;
        }
        double tsRaw, value;
        if (!parseDouble(f[0], tsRaw) || !std::isfinite(tsRaw) || tsRaw <= 0.0 ||
            !parseDouble(f[4], value) || !std::isfinite(value) || f[1].empty() ||
            f[2].empty()) {
            ++diag.malformed;
            continue;
        }
        MetricSample s;
        s.timestamp = static_cast<std::int64_t>(tsRaw);  // sub-second precision truncated
        s.node = f[1];
        s.metric = f[2];
        s.labels = labelsFromString(f[3]);
        s.value = value;

        auto key = std::make_tuple(s.node, s.metric, s.labels, s.timestamp);
        auto [it, inserted] = seen.emplace(std::move(key), out.size());
        if (inserted) {
            out.push_back(std::move(s));
        } else {
            out[it->second] = std::move(s);  // keep last occurrence
            ++diag.duplicates;
        }
    }
    return out;
}

std::map<std::string, NodeSeries> buildNodeSeries(
    const std::vector<MetricSample>& samples, const SliceSpec& spec,
    std::vector<std::string>* warnings) {
    std::map<std::string, std::vector<const MetricSample*>> byNode;
    const bool filterNodes = !spec.nodes.empty();
    for (const MetricSample& s : samples) {
        if (s.timestamp < spec.startTime || s.timestamp > spec.endTime) continue;
        if (filterNodes &&
            std::find(spec.nodes.begin(), spec.nodes.end(), s.node) == spec.nodes.end())
            continue;
        byNode[s.node].push_back(&s);
    }

    if (warnings) {
        std::set<std::string> candidates(spec.nodes.begin(), spec.nodes.end());
        if (!filterNodes)
            for (const MetricSample& s : samples) candidates.insert(s.node);
        for (const std::string& n : candidates)
            if (!byNode.count(n))
                warnings->push_back("node " + n + " has no in-range samples; excluded");
    }

    std::map<std::string, NodeSeries> out;
    for (auto& [node, rows] : byNode) {
        NodeSeries ns;
        ns.node = node;

        std::vector<std::int64_t> times;
        times.reserve(rows.size());
        for (const MetricSample* s : rows) times.push_back(s->timestamp);
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        ns.timeline = std::move(times);

        std::map<std::int64_t, std::size_t> tIndex;
        for (std::size_t i = 0; i < ns.timeline.size(); ++i) tIndex[ns.timeline[i]] = i;

        for (const MetricSample* s : rows) {
            ColumnKey key{s->metric, s->labels};
            auto [it, inserted] = ns.columns.try_emplace(key);
            if (inserted) it->second.assign(ns.timeline.size(), kMissing);
            it->second[tIndex[s->timestamp]] = s->value;
        }

        if (ns.timeline.size() >= 2) {
            std::vector<double> deltas;
            deltas.reserve(ns.timeline.size() - 1);
            for (std::size_t i = 1; i < ns.timeline.size(); ++i)
                deltas.push_back(static_cast<double>(ns.timeline[i] - ns.timeline[i - 1]));
            ns.nativeInterval = static_cast<std::int64_t>(std::llround(median(deltas)));
        }
        out.emplace(node, std::move(ns));
    }
    return out;
}

GapStats computeGapStats(const NodeSeries& series) {
    GapStats out;
    const std::size_t n = series.timeline.size();
    const std::int64_t span =
        n >= 2 ? series.timeline.back() - series.timeline.front() : 0;

    for (const auto& [key, col] : series.columns) {
        ColumnGapStats cs;
        std::size_t run = 0;
        auto closeRun = [&](bool atEnd) {
            if (run == 0) return;
            cs.missingCount += run;
            if (run == n && atEnd) {
                // fully missing column: no gap of defined length, span-long hole
                cs.longestGapSeconds = span;
            } else {
                ++cs.gapHistogram[run];
                std::int64_t secs =
                    static_cast<std::int64_t>(run) * series.nativeInterval;
                cs.longestGapSeconds = std::max(cs.longestGapSeconds, secs);
            }
            run = 0;
        };
        for (std::size_t i = 0; i < col.size(); ++i) {
            if (isMissing(col[i])) {
                ++run;
            } else {
                closeRun(false);
            }
        }
        closeRun(true);
        cs.missRatio = n == 0 ? 1.0
                              : static_cast<double>(cs.missingCount) /
                                    static_cast<double>(n);
        out.perColumn.emplace(key, std::move(cs));
    }
    return out;
}

std::string gapStatsCsv(const std::map<std::string, NodeSeries>& series,
                        const std::map<std::string, GapStats>& stats) {
    std::ostringstream os;
    os << "node,metric,labels,missRatio,gapCount,longestGapSeconds\n";
    for (const auto& [node, st] : stats) {
        (void)series;
        for (const auto& [key, cs] : st.perColumn) {
            std::size_t gaps = 0;
            for (const auto& [len, count] : cs.gapHistogram) gaps += count;
            os << csvField(node) << ',' << csvField(key.metric) << ','
               << csvField(labelsToString(key.labels)) << ',' << cs.missRatio << ','
               << gaps << ',' << cs.longestGapSeconds << '\n';
        }
    }
    return os.str();
}

std::map<std::string, std::vector<std::size_t>> sampleWindows(
    const std::map<std::string, std::vector<std::size_t>>& windowsPerNode,
    const SliceSpec& spec) {
    std::map<std::string, std::vector<std::size_t>> out;
    for (const auto& [node, indices] : windowsPerNode) {
        if (indices.size() <= spec.perNodeCap) {
            out.emplace(node, indices);
            continue;
        }
        std::vector<std::size_t> pool = indices;
        std::mt19937_64 rng(splitmix64(spec.seed ^ fnv1a64(node)));
        std::vector<std::size_t> picked;
        picked.reserve(spec.perNodeCap);
        // partial Fisher-Yates
        for (std::size_t i = 0; i < spec.perNodeCap; ++i) {
            std::uniform_int_distribution<std::size_t> dist(i, pool.size() - 1);
            std::size_t j = dist(rng);
            std::swap(pool[i], pool[j]);
            picked.push_back(pool[i]);
        }
        std::sort(picked.begin(), picked.end());
        out.emplace(node, std::move(picked));
    }
    return out;
}

}  // namespace gpuwatch
