#include "gpuwatch/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "gpuwatch/csv.hpp"
#include "gpuwatch/stats.hpp"

namespace gpuwatch {

const char* planeName(Plane p) {
    switch (p) {
        case Plane::gpu: return "gpu";
        case Plane::pipe: return "pipe";
        case Plane::os: return "os";
    }
    return "?";
}

Plane MetricConfig::classify(const std::string& metric) const {
    if (metric == ambientMetric || metric.rfind("DCGM_", 0) == 0) return Plane::gpu;
    if (metric == "up" || metric.rfind("scrape_", 0) == 0) return Plane::pipe;
    for (const std::string& p : pipeMetrics)
        if (metric == p) return Plane::pipe;
    return Plane::os;
}

std::optional<std::size_t> WindowFeatureMatrix::columnIndex(
    const std::string& name) const {
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (cols[i].name == name) return i;
    return std::nullopt;
}

std::size_t windowCount(const SliceSpec& spec) {
    const std::int64_t span = spec.endTime - spec.startTime;
    if (span < spec.windowLength) return 0;
    return static_cast<std::size_t>((span - spec.windowLength) / spec.stride) + 1;
}

namespace {

constexpr const char* kAggNames[5] = {"mean", "std", "min", "max", "slope"};

struct Aggregates {
    double v[5];  // mean, std, min, max, slope
};

Aggregates aggregate(const std::vector<double>& xs, const std::vector<double>& ys) {
    Aggregates a;
    a.v[0] = mean(ys);
    a.v[1] = populationStd(ys);
    a.v[2] = *std::min_element(ys.begin(), ys.end());
    a.v[3] = *std::max_element(ys.begin(), ys.end());
    double slope = olsSlope(xs, ys);
    a.v[4] = isMissing(slope) ? 0.0 : slope;  // zero x-spread cannot happen; constant y -> 0
    return a;
}

}  // namespace

WindowFeatureMatrix aggregateWindows(const std::map<std::string, NodeSeries>& series,
                                     const SliceSpec& spec, const MetricConfig& cfg) {
    WindowFeatureMatrix m;
    const std::size_t nWindows = windowCount(spec);

    // union of source columns across nodes, deterministic order
    std::set<ColumnKey> sourceKeys;
    for (const auto& [node, ns] : series)
        for (const auto& [key, col] : ns.columns) sourceKeys.insert(key);

    for (const auto& [node, ns] : series) {
        (void)ns;
        for (std::size_t k = 0; k < nWindows; ++k)
            m.rows.push_back({node, spec.startTime + static_cast<std::int64_t>(k) * spec.stride, k});
    }

    const std::size_t nRows = m.rows.size();
    for (const ColumnKey& key : sourceKeys) {
        Plane plane = cfg.classify(key.metric);
        for (const char* agg : kAggNames) {
            FeatureColumn col;
            col.name = std::string(planeName(plane)) + "." + key.str() + "." + agg;
            col.plane = plane;
            col.values.assign(nRows, kMissing);
            m.cols.push_back(std::move(col));
        }
    }
    FeatureColumn gapFrac{"pipe.gapFraction.window", Plane::pipe, {}};
    gapFrac.values.assign(nRows, kMissing);
    FeatureColumn cardinality{"pipe.familyCardinality.window", Plane::pipe, {}};
    cardinality.values.assign(nRows, kMissing);

    std::size_t row = 0;
    for (const auto& [node, ns] : series) {
        for (std::size_t k = 0; k < nWindows; ++k, ++row) {
            const std::int64_t a = m.rows[row].start;
            const std::int64_t b = a + spec.windowLength;
            auto loIt = std::lower_bound(ns.timeline.begin(), ns.timeline.end(), a);
            auto hiIt = std::lower_bound(ns.timeline.begin(), ns.timeline.end(), b);
            const std::size_t lo = static_cast<std::size_t>(loIt - ns.timeline.begin());
            const std::size_t hi = static_cast<std::size_t>(hiIt - ns.timeline.begin());

            std::size_t present = 0, expected = 0, families = 0;
            std::size_t colIdx = 0;
            for (const ColumnKey& key : sourceKeys) {
                auto it = ns.columns.find(key);
                if (it != ns.columns.end()) {
                    std::vector<double> xs, ys;
                    for (std::size_t i = lo; i < hi; ++i) {
                        ++expected;
                        double v = it->second[i];
                        if (!isMissing(v)) {
                            xs.push_back(static_cast<double>(ns.timeline[i] - a));
                            ys.push_back(v);
                            ++present;
                        }
                    }
                    if (!ys.empty()) ++families;
                    if (ys.size() >= static_cast<std::size_t>(cfg.minSamplesPerWindow)) {
                        Aggregates ag = aggregate(xs, ys);
                        for (int j = 0; j < 5; ++j) m.cols[colIdx + j].values[row] = ag.v[j];
                    }
                }
                colIdx += 5;
            }
            gapFrac.values[row] =
                expected == 0 ? 1.0
                              : static_cast<double>(expected - present) /
                                    static_cast<double>(expected);
            cardinality.values[row] = static_cast<double>(families);
        }
    }
    m.cols.push_back(std::move(gapFrac));
    m.cols.push_back(std::move(cardinality));
    return m;
}

WindowFeatureMatrix selectRows(const WindowFeatureMatrix& m,
                               const std::map<std::string, std::vector<std::size_t>>& keep) {
    std::vector<std::size_t> rowIdx;
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        auto it = keep.find(m.rows[r].node);
        if (it == keep.end()) continue;
        if (std::binary_search(it->second.begin(), it->second.end(), m.rows[r].index))
            rowIdx.push_back(r);
    }
    WindowFeatureMatrix out;
    out.rows.reserve(rowIdx.size());
    for (std::size_t r : rowIdx) out.rows.push_back(m.rows[r]);
    out.cols.reserve(m.cols.size());
    for (const FeatureColumn& c : m.cols) {
        FeatureColumn nc{c.name, c.plane, {}};
        nc.values.reserve(rowIdx.size());
        for (std::size_t r : rowIdx) nc.values.push_back(c.values[r]);
        out.cols.push_back(std::move(nc));
    }
    return out;
}

SignatureMatrix selectSignatureRows(
    const SignatureMatrix& sig,
    const std::map<std::string, std::vector<std::size_t>>& keep) {
    std::vector<std::size_t> rowIdx;
    for (std::size_t r = 0; r < sig.rows.size(); ++r) {
        auto it = keep.find(sig.rows[r].node);
        if (it == keep.end()) continue;
        if (std::binary_search(it->second.begin(), it->second.end(), sig.rows[r].index))
            rowIdx.push_back(r);
    }
    SignatureMatrix out;
    out.columnNames = sig.columnNames;
    out.full = sig.full;
    out.rows.reserve(rowIdx.size());
    for (std::size_t r : rowIdx) out.rows.push_back(sig.rows[r]);
    out.columns.resize(sig.columns.size());
    for (std::size_t c = 0; c < sig.columns.size(); ++c) {
        out.columns[c].reserve(rowIdx.size());
        for (std::size_t r : rowIdx) out.columns[c].push_back(sig.columns[c][r]);
    }
    out.scalar.reserve(rowIdx.size());
    for (std::size_t r : rowIdx) out.scalar.push_back(sig.scalar[r]);
    return out;
}

std::optional<std::size_t> RobustScaler::featureIndex(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    return std::nullopt;
}

RobustScaler fitRobustScaler(const WindowFeatureMatrix& m,
                             const std::vector<std::size_t>& trainRows) {
    RobustScaler sc;
    std::vector<std::size_t> rows = trainRows;
    if (rows.empty())
        for (std::size_t r = 0; r < m.rows.size(); ++r) rows.push_back(r);

    for (const FeatureColumn& col : m.cols) {
        std::vector<double> vals;
        for (std::size_t r : rows)
            if (!isMissing(col.values[r])) vals.push_back(col.values[r]);
        if (vals.empty()) {
            sc.dropped.push_back(col.name);
            continue;
        }
        const double c = median(vals);
        std::vector<double> dev;
        dev.reserve(vals.size());
        for (double v : vals) dev.push_back(std::abs(v - c));
        const double mad = median(dev);
        double scale;
        if (mad > 0.0) {
            scale = kMadConsistency * mad;
        } else {
            scale = std::max(populationStd(vals), 1e-9);
        }
        sc.names.push_back(col.name);
        sc.center.push_back(c);
        sc.scale.push_back(scale);
    }
    return sc;
}

namespace {

// trailing median of present values at window indices [idx-horizon, idx-1],
// over this node's row span [begin, end); returns NaN before warm-up
double trailingMedian(const FeatureColumn& col, const std::vector<WindowRow>& rows,
                      std::size_t begin, std::size_t end, std::size_t rowPos,
                      int horizon, int warmup) {
    const std::size_t idx = rows[rowPos].index;
    std::vector<double> vals;
    for (std::size_t r = begin; r < end && r < rowPos; ++r) {
        if (rows[r].index + static_cast<std::size_t>(horizon) < idx) continue;
        if (!isMissing(col.values[r])) vals.push_back(col.values[r]);
    }
    if (vals.size() < static_cast<std::size_t>(warmup)) return kMissing;
    return median(std::move(vals));
}

}  // namespace

SignatureMatrix buildSignature(const WindowFeatureMatrix& m, const SliceSpec& spec,
                               const MetricConfig& cfg) {
    SignatureMatrix sig;
    sig.rows = m.rows;
    const std::size_t nRows = m.rows.size();

    struct SourceCol {
        std::string sigName;
        std::optional<std::size_t> src;
    };
    std::vector<SourceCol> drifts;
    const char* sigAggs[3] = {"avg", "min", "max"};
    const char* srcAggs[3] = {"mean", "min", "max"};
    for (int g = 0; g < 4; ++g) {
        for (int a = 0; a < 3; ++a) {
            std::string srcName = "gpu." + cfg.memTempMetric + "{" + cfg.gpuLabel +
                                  "=" + std::to_string(g) + "}." + srcAggs[a];
            drifts.push_back({"memTemp_drift_" + std::string(sigAggs[a]) + "_gpu" +
                                  std::to_string(g),
                              m.columnIndex(srcName)});
        }
    }
    for (int a = 0; a < 3; ++a) {
        std::string srcName = "gpu." + cfg.ambientMetric + "." + srcAggs[a];
        drifts.push_back({"ambient_drift_" + std::string(sigAggs[a]), m.columnIndex(srcName)});
    }

    // node row spans (rows are node-contiguous by construction)
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (std::size_t r = 0; r < nRows;) {
        std::size_t e = r;
        while (e < nRows && m.rows[e].node == m.rows[r].node) ++e;
        spans.emplace_back(r, e);
        r = e;
    }

    for (const SourceCol& d : drifts) {
        std::vector<double> col(nRows, kMissing);
        if (d.src) {
            const FeatureColumn& src = m.cols[*d.src];
            for (auto [b, e] : spans) {
                for (std::size_t r = b; r < e; ++r) {
                    double v = src.values[r];
                    if (isMissing(v)) continue;
                    double base = trailingMedian(src, m.rows, b, e, r,
                                                 spec.baselineHorizon, cfg.warmupWindows);
                    if (!isMissing(base)) col[r] = v - base;
                }
            }
        } else {
            sig.full = false;
        }
        sig.columnNames.push_back(d.sigName);
        sig.columns.push_back(std::move(col));
    }

    // node-mean memory temperature (mean aggregate over available GPU columns)
    std::vector<double> nodeMean(nRows, kMissing);
    {
        std::vector<std::size_t> memCols;
        std::string prefix = "gpu." + cfg.memTempMetric + "{";
        for (std::size_t c = 0; c < m.cols.size(); ++c) {
            const std::string& n = m.cols[c].name;
            if (n.rfind(prefix, 0) == 0 && n.size() > 5 &&
                n.compare(n.size() - 5, 5, ".mean") == 0)
                memCols.push_back(c);
        }
        if (memCols.empty()) sig.full = false;
        for (std::size_t r = 0; r < nRows; ++r) {
            double sum = 0.0;
            std::size_t cnt = 0;
            for (std::size_t c : memCols) {
                double v = m.cols[c].values[r];
                if (!isMissing(v)) {
                    sum += v;
                    ++cnt;
                }
            }
            if (cnt > 0) nodeMean[r] = sum / static_cast<double>(cnt);
        }
    }

    // rolling slope of the node-mean memory temperature, units per window
    std::vector<double> rollSlope(nRows, kMissing);
    for (auto [b, e] : spans) {
        for (std::size_t r = b; r < e; ++r) {
            const std::size_t idx = m.rows[r].index;
            std::vector<double> xs, ys;
            for (std::size_t q = b; q <= r; ++q) {
                if (m.rows[q].index + static_cast<std::size_t>(cfg.rollSlopeHorizon) <=
                    idx)
                    continue;
                if (!isMissing(nodeMean[q])) {
                    xs.push_back(static_cast<double>(m.rows[q].index));
                    ys.push_back(nodeMean[q]);
                }
            }
            if (xs.size() >= 2) {
                double s = olsSlope(xs, ys);
                rollSlope[r] = isMissing(s) ? 0.0 : s;
            }
        }
    }
    sig.columnNames.push_back("memTemp_rollSlope_32");
    sig.columns.push_back(std::move(rollSlope));

    // scalar signature: max |robust-z| over the 16 columns
    sig.scalar.assign(nRows, kMissing);
    for (std::size_t c = 0; c < sig.columns.size(); ++c) {
        std::vector<double> vals;
        for (double v : sig.columns[c])
            if (!isMissing(v)) vals.push_back(v);
        if (vals.empty()) continue;
        const double center = median(vals);
        std::vector<double> dev;
        dev.reserve(vals.size());
        for (double v : vals) dev.push_back(std::abs(v - center));
        const double mad = median(dev);
        const double scale =
            mad > 0.0 ? kMadConsistency * mad : std::max(populationStd(vals), 1e-9);
        for (std::size_t r = 0; r < nRows; ++r) {
            double v = sig.columns[c][r];
            if (isMissing(v)) continue;
            double z = std::abs((v - center) / scale);
            if (isMissing(sig.scalar[r]) || z > sig.scalar[r]) sig.scalar[r] = z;
        }
    }
    return sig;
}

namespace {

bool anyPresent(const FeatureColumn& c) {
    for (double v : c.values)
        if (!isMissing(v)) return true;
    return false;
}

std::size_t presentColumnCount(const std::vector<FeatureColumn>& cols) {
    std::size_t n = 0;
    for (const FeatureColumn& c : cols)
        if (anyPresent(c)) ++n;
    return n;
}

}  // namespace

PlaneSet assemblePlanes(const WindowFeatureMatrix& m, const SignatureMatrix& sig,
                        const MetricConfig& cfg) {
    PlaneSet out;
    out.gpu.name = "gpu";
    out.pipe.name = "pipe";
    out.os.name = "os";
    out.joint.name = "joint";
    out.gpu.rows = out.pipe.rows = out.os.rows = out.joint.rows = m.rows;

    for (std::size_t c = 0; c < sig.columns.size(); ++c)
        out.gpu.cols.push_back(
            {"gpu." + sig.columnNames[c], Plane::gpu, sig.columns[c]});

    // 17th GPU feature: node-mean memory-temperature level
    {
        FeatureColumn level{"gpu.memTemp.level", Plane::gpu, {}};
        level.values.assign(m.rows.size(), kMissing);
        std::vector<std::size_t> memCols;
        std::string prefix = "gpu." + cfg.memTempMetric + "{";
        for (std::size_t c = 0; c < m.cols.size(); ++c) {
            const std::string& n = m.cols[c].name;
            if (n.rfind(prefix, 0) == 0 && n.size() > 5 &&
                n.compare(n.size() - 5, 5, ".mean") == 0)
                memCols.push_back(c);
        }
        for (std::size_t r = 0; r < m.rows.size(); ++r) {
            double sum = 0.0;
            std::size_t cnt = 0;
            for (std::size_t c : memCols) {
                double v = m.cols[c].values[r];
                if (!isMissing(v)) {
                    sum += v;
                    ++cnt;
                }
            }
            if (cnt > 0) level.values[r] = sum / static_cast<double>(cnt);
        }
        out.gpu.cols.push_back(std::move(level));
    }

    bool pipeMetricPresent = false;
    for (const FeatureColumn& c : m.cols) {
        if (c.plane == Plane::pipe) {
            bool derived = c.name == "pipe.gapFraction.window" ||
                           c.name == "pipe.familyCardinality.window";
            if (!derived && anyPresent(c)) pipeMetricPresent = true;
            out.pipe.cols.push_back(c);
        } else if (c.plane == Plane::os) {
            out.os.cols.push_back(c);
        }
    }

    const bool gpuAvail = presentColumnCount(out.gpu.cols) > 0;
    const bool osAvail = presentColumnCount(out.os.cols) > 0;
    const bool pipeAvail = pipeMetricPresent;

    out.availability.push_back({"gpu", gpuAvail, presentColumnCount(out.gpu.cols)});
    out.availability.push_back({"pipe", pipeAvail, presentColumnCount(out.pipe.cols)});
    out.availability.push_back({"os", osAvail, presentColumnCount(out.os.cols)});

    if (gpuAvail)
        out.joint.cols.insert(out.joint.cols.end(), out.gpu.cols.begin(),
                              out.gpu.cols.end());
    if (pipeAvail)
        out.joint.cols.insert(out.joint.cols.end(), out.pipe.cols.begin(),
                              out.pipe.cols.end());
    if (osAvail)
        out.joint.cols.insert(out.joint.cols.end(), out.os.cols.begin(),
                              out.os.cols.end());
    out.availability.push_back({"joint", gpuAvail || pipeAvail || osAvail,
                                presentColumnCount(out.joint.cols)});
    return out;
}

namespace {

void writeValue(std::ostringstream& os, double v) {
    if (isMissing(v)) return;  // empty field
    os << v;
}

}  // namespace

std::string featureMatrixCsv(const WindowFeatureMatrix& m) {
    std::ostringstream os;
    os.precision(17);
    os << "node,windowStart,windowIndex";
    for (const FeatureColumn& c : m.cols) os << ',' << csvField(c.name);
    os << '\n';
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        os << csvField(m.rows[r].node) << ',' << m.rows[r].start << ','
           << m.rows[r].index;
        for (const FeatureColumn& c : m.cols) {
            os << ',';
            writeValue(os, c.values[r]);
        }
        os << '\n';
    }
    return os.str();
}

std::string featureMaskCsv(const WindowFeatureMatrix& m) {
    std::ostringstream os;
    os << "node,windowStart,windowIndex";
    for (const FeatureColumn& c : m.cols) os << ',' << csvField(c.name);
    os << '\n';
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        os << csvField(m.rows[r].node) << ',' << m.rows[r].start << ','
           << m.rows[r].index;
        for (const FeatureColumn& c : m.cols)
            os << ',' << (isMissing(c.values[r]) ? 1 : 0);
        os << '\n';
    }
    return os.str();
}

std::string availabilityCsv(const std::string& sliceName,
                            const std::vector<AvailabilityEntry>& availability) {
    std::ostringstream os;
    os << "slice,plane,available,columnCount\n";
    for (const AvailabilityEntry& e : availability)
        os << csvField(sliceName) << ',' << e.plane << ',' << (e.available ? 1 : 0)
           << ',' << e.columnCount << '\n';
    return os.str();
}

}  // namespace gpuwatch
