#include "gpuwatch/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gpuwatch/csv.hpp"
#include "gpuwatch/stats.hpp"

namespace gpuwatch {

void smoothScores(ScoreSeries& s, int window) {
    const std::size_t n = s.rows.size();
    s.smoothed.assign(n, kMissing);
    for (std::size_t b = 0; b < n;) {
        std::size_t e = b;
        while (e < n && s.rows[e].node == s.rows[b].node) ++e;
        for (std::size_t i = b; i < e; ++i) {
            if (isMissing(s.raw[i])) continue;
            double sum = 0.0;
            std::size_t cnt = 0;
            std::size_t lo = (i >= b + static_cast<std::size_t>(window) - 1)
                                 ? i - static_cast<std::size_t>(window) + 1
                                 : b;
            for (std::size_t j = lo; j <= i; ++j) {
                if (!isMissing(s.raw[j])) {
                    sum += s.raw[j];
                    ++cnt;
                }
            }
            s.smoothed[i] = sum / static_cast<double>(cnt);
        }
        b = e;
    }
}

namespace {

void budgetSpan(ScoreSeries& s, double budget, std::size_t b, std::size_t e,
                double& threshold, bool& degenerate) {
    std::vector<double> present;
    for (std::size_t i = b; i < e; ++i)
        if (!isMissing(s.smoothed[i])) present.push_back(s.smoothed[i]);
    if (present.empty()) {
        threshold = kMissing;
        degenerate = true;
        return;
    }
    auto [mn, mx] = std::minmax_element(present.begin(), present.end());
    degenerate = (*mn == *mx);
    threshold = nearestRankQuantile(present, 1.0 - budget);
    for (std::size_t i = b; i < e; ++i)
        if (!isMissing(s.smoothed[i]) && s.smoothed[i] > threshold) s.alert[i] = 1;
}

}  // namespace

void applyBudget(ScoreSeries& s, double budget, bool perNode) {
    s.budget = budget;
    s.alert.assign(s.rows.size(), 0);
    s.perNodeThresholds.clear();
    if (!perNode) {
        budgetSpan(s, budget, 0, s.rows.size(), s.threshold, s.degenerate);
        return;
    }
    s.threshold = kMissing;
    s.degenerate = true;
    for (std::size_t b = 0; b < s.rows.size();) {
        std::size_t e = b;
        while (e < s.rows.size() && s.rows[e].node == s.rows[b].node) ++e;
        double thr = kMissing;
        bool deg = true;
        budgetSpan(s, budget, b, e, thr, deg);
        if (!deg) s.degenerate = false;
        s.perNodeThresholds.emplace_back(s.rows[b].node, thr);
        b = e;
    }
}

ScoreSeries scoreRobustZ(const PlaneMatrix& plane, const RobustScaler& scaler) {
    ScoreSeries out;
    out.detector = "zscore";
    out.plane = plane.name;
    out.rows = plane.rows;
    out.raw.assign(plane.rows.size(), kMissing);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (planeCol, scalerIdx)
    for (std::size_t c = 0; c < plane.cols.size(); ++c) {
        auto idx = scaler.featureIndex(plane.cols[c].name);
        if (idx) pairs.emplace_back(c, *idx);
    }
    for (std::size_t r = 0; r < plane.rows.size(); ++r) {
        double best = kMissing;
        for (auto [c, f] : pairs) {
            double v = plane.cols[c].values[r];
            if (isMissing(v)) continue;
            double z = std::abs(scaler.transform(f, v));
            if (isMissing(best) || z > best) best = z;
        }
        out.raw[r] = best;
    }
    return out;
}

DenseMatrix denseStandardized(const PlaneMatrix& plane, const RobustScaler& scaler) {
    DenseMatrix d;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t c = 0; c < plane.cols.size(); ++c) {
        auto idx = scaler.featureIndex(plane.cols[c].name);
        if (idx) pairs.emplace_back(c, *idx);
    }
    d.nRows = plane.rows.size();
    d.nCols = pairs.size() + 1;  // + fraction-missing
    d.data.assign(d.nRows * d.nCols, 0.0);
    for (std::size_t r = 0; r < d.nRows; ++r) {
        std::size_t missing = 0;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            double v = plane.cols[pairs[k].first].values[r];
            if (isMissing(v)) {
                ++missing;  // imputed at the center: z = 0
            } else {
                d.data[r * d.nCols + k] = scaler.transform(pairs[k].second, v);
            }
        }
        d.data[r * d.nCols + pairs.size()] =
            pairs.empty() ? 0.0
                          : static_cast<double>(missing) /
                                static_cast<double>(pairs.size());
    }
    return d;
}

double averagePathLength(std::size_t n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    const double h = std::log(static_cast<double>(n - 1)) + 0.5772156649015329;
    return 2.0 * h - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

namespace {

struct BuildFrame {
    std::vector<std::size_t> rows;
    int depth;
    int parent;     // node index to patch
    bool leftChild;
};

int growTree(std::vector<IsolationTreeNode>& nodes, const DenseMatrix& m,
             std::vector<std::size_t> rootRows, int heightLimit,
             std::mt19937_64& rng) {
    std::vector<BuildFrame> stack;
    stack.push_back({std::move(rootRows), 0, -1, false});
    int root = -1;
    while (!stack.empty()) {
        BuildFrame fr = std::move(stack.back());
        stack.pop_back();

        int nodeIdx = static_cast<int>(nodes.size());
        nodes.emplace_back();
        if (fr.parent >= 0) {
            if (fr.leftChild) nodes[fr.parent].left = nodeIdx;
            else nodes[fr.parent].right = nodeIdx;
        } else {
            root = nodeIdx;
        }

        IsolationTreeNode& nd = nodes[nodeIdx];
        nd.size = static_cast<int>(fr.rows.size());
        if (fr.rows.size() <= 1 || fr.depth >= heightLimit) continue;  // leaf

        // candidate features must have spread within this subsample
        std::vector<int> candidates;
        for (std::size_t c = 0; c < m.nCols; ++c) {
            double mn = m.at(fr.rows[0], c), mx = mn;
            for (std::size_t r : fr.rows) {
                double v = m.at(r, c);
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            if (mx > mn) candidates.push_back(static_cast<int>(c));
        }
        if (candidates.empty()) continue;  // constant block -> leaf

        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        int feat = candidates[pick(rng)];
        double mn = m.at(fr.rows[0], static_cast<std::size_t>(feat)), mx = mn;
        for (std::size_t r : fr.rows) {
            double v = m.at(r, static_cast<std::size_t>(feat));
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        std::uniform_real_distribution<double> val(mn, mx);
        double split = val(rng);

        std::vector<std::size_t> left, right;
        for (std::size_t r : fr.rows) {
            if (m.at(r, static_cast<std::size_t>(feat)) < split) left.push_back(r);
            else right.push_back(r);
        }
        if (left.empty() || right.empty()) continue;  // degenerate split -> leaf

        nd.feature = feat;
        nd.split = split;
        // push right first so left is processed first (stable layout)
        stack.push_back({std::move(right), fr.depth + 1, nodeIdx, false});
        stack.push_back({std::move(left), fr.depth + 1, nodeIdx, true});
    }
    return root;
}

}  // namespace

IsolationForestModel trainIsolationForest(const DenseMatrix& m, std::size_t trees,
                                          std::size_t subsample, std::uint64_t seed) {
    if (m.nRows < 2) throw std::runtime_error("isolation forest needs >= 2 rows");
    IsolationForestModel model;
    model.seed = seed;
    model.subsample = std::min(subsample, m.nRows);
    model.normalizer = averagePathLength(model.subsample);
    const int heightLimit = static_cast<int>(
        std::ceil(std::log2(static_cast<double>(model.subsample))));

    std::vector<std::size_t> all(m.nRows);
    for (std::size_t i = 0; i < m.nRows; ++i) all[i] = i;

    for (std::size_t t = 0; t < trees; ++t) {
        std::mt19937_64 rng(splitmix64(seed ^ (0x9e3779b9ull + t)));
        std::vector<std::size_t> pool = all;
        std::vector<std::size_t> rows;
        rows.reserve(model.subsample);
        for (std::size_t i = 0; i < model.subsample; ++i) {
            std::uniform_int_distribution<std::size_t> dist(i, pool.size() - 1);
            std::size_t j = dist(rng);
            std::swap(pool[i], pool[j]);
            rows.push_back(pool[i]);
        }
        std::vector<IsolationTreeNode> nodes;
        growTree(nodes, m, std::move(rows), heightLimit, rng);
        model.trees.push_back(std::move(nodes));
    }
    return model;
}

std::vector<double> scoreIsolationForest(const IsolationForestModel& model,
                                         const DenseMatrix& m) {
    std::vector<double> scores(m.nRows, 0.0);
    for (std::size_t r = 0; r < m.nRows; ++r) {
        double sum = 0.0;
        for (const auto& nodes : model.trees) {
            int idx = 0;
            int depth = 0;
            while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
                const IsolationTreeNode& nd = nodes[static_cast<std::size_t>(idx)];
                idx = m.at(r, static_cast<std::size_t>(nd.feature)) < nd.split
                          ? nd.left
                          : nd.right;
                ++depth;
            }
            sum += depth + averagePathLength(
                               static_cast<std::size_t>(nodes[static_cast<std::size_t>(idx)].size));
        }
        const double avg = sum / static_cast<double>(model.trees.size());
        scores[r] = std::pow(2.0, -avg / model.normalizer);
    }
    return scores;
}

namespace {

double rbf(const std::vector<double>& a, const std::vector<double>& b, double gamma) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

}  // namespace

OneClassSvmModel trainOneClassSvm(const DenseMatrix& m, const OneClassSvmParams& params) {
    if (m.nRows < 2) throw std::runtime_error("one-class SVM needs >= 2 rows");

    // reservoir-sample the training rows when over the cap
    std::vector<std::size_t> rowIdx;
    if (m.nRows <= params.maxTrain) {
        for (std::size_t i = 0; i < m.nRows; ++i) rowIdx.push_back(i);
    } else {
        std::mt19937_64 rng(splitmix64(params.seed));
        rowIdx.resize(params.maxTrain);
        for (std::size_t i = 0; i < params.maxTrain; ++i) rowIdx[i] = i;
        for (std::size_t i = params.maxTrain; i < m.nRows; ++i) {
            std::uniform_int_distribution<std::size_t> dist(0, i);
            std::size_t j = dist(rng);
            if (j < params.maxTrain) rowIdx[j] = i;
        }
        std::sort(rowIdx.begin(), rowIdx.end());
    }
    const std::size_t l = rowIdx.size();

    OneClassSvmModel model;
    model.nu = params.nu;
    std::vector<std::vector<double>> X(l, std::vector<double>(m.nCols));
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t c = 0; c < m.nCols; ++c) X[i][c] = m.at(rowIdx[i], c);

    double gamma = params.gamma;
    if (gamma <= 0.0) {
        // "scale" convention: 1 / (d * mean feature variance)
        double varSum = 0.0;
        for (std::size_t c = 0; c < m.nCols; ++c) {
            double s = 0.0, ss = 0.0;
            for (std::size_t i = 0; i < l; ++i) {
                s += X[i][c];
                ss += X[i][c] * X[i][c];
            }
            double mu = s / static_cast<double>(l);
            varSum += ss / static_cast<double>(l) - mu * mu;
        }
        double meanVar = varSum / static_cast<double>(m.nCols);
        gamma = meanVar > 1e-12 ? 1.0 / (static_cast<double>(m.nCols) * meanVar) : 1.0;
    }
    model.gamma = gamma;

    // kernel matrix
    std::vector<double> K(l * l);
    for (std::size_t i = 0; i < l; ++i) {
        K[i * l + i] = 1.0;
        for (std::size_t j = i + 1; j < l; ++j) {
            double v = rbf(X[i], X[j], gamma);
            K[i * l + j] = v;
            K[j * l + i] = v;
        }
    }

    const double C = 1.0 / (params.nu * static_cast<double>(l));
    const double eps = C * 1e-10;
    std::vector<double> alpha(l, 0.0);
    std::size_t nFull = static_cast<std::size_t>(params.nu * static_cast<double>(l));
    nFull = std::min(nFull, l);
    for (std::size_t i = 0; i < nFull; ++i) alpha[i] = C;
    double rem = 1.0 - static_cast<double>(nFull) * C;
    if (rem > 0.0 && nFull < l) alpha[nFull] = rem;

    // gradient of 1/2 a'Ka
    std::vector<double> g(l, 0.0);
    for (std::size_t i = 0; i < l; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < l; ++j) s += K[i * l + j] * alpha[j];
        g[i] = s;
    }

    std::size_t iter = 0;
    for (; iter < params.maxIterations; ++iter) {
        // maximal violating pair
        std::size_t iUp = l, jDown = l;
        double gMin = 0.0, gMax = 0.0;
        for (std::size_t k = 0; k < l; ++k) {
            if (alpha[k] < C - eps && (iUp == l || g[k] < gMin)) {
                gMin = g[k];
                iUp = k;
            }
            if (alpha[k] > eps && (jDown == l || g[k] > gMax)) {
                gMax = g[k];
                jDown = k;
            }
        }
        if (iUp == l || jDown == l || gMax - gMin < params.tolerance) break;

        const std::size_t i = iUp, j = jDown;
        double eta = K[i * l + i] + K[j * l + j] - 2.0 * K[i * l + j];
        if (eta < 1e-12) eta = 1e-12;
        double delta = (gMax - gMin) / eta;
        delta = std::min(delta, std::min(C - alpha[i], alpha[j]));
        if (delta <= 0.0) break;
        alpha[i] += delta;
        alpha[j] -= delta;
        for (std::size_t k = 0; k < l; ++k)
            g[k] += delta * (K[k * l + i] - K[k * l + j]);
    }
    model.converged = iter < params.maxIterations;
    model.iterations = iter;

    // rho from KKT conditions
    double freeSum = 0.0;
    std::size_t freeCnt = 0;
    double upperMax = -1e300, lowerMin = 1e300;
    for (std::size_t k = 0; k < l; ++k) {
        if (alpha[k] > eps && alpha[k] < C - eps) {
            freeSum += g[k];
            ++freeCnt;
        }
        if (alpha[k] >= C - eps) upperMax = std::max(upperMax, g[k]);
        if (alpha[k] <= eps) lowerMin = std::min(lowerMin, g[k]);
    }
    if (freeCnt > 0) {
        model.rho = freeSum / static_cast<double>(freeCnt);
    } else {
        double hi = lowerMin < 1e300 ? lowerMin : upperMax;
        double lo = upperMax > -1e300 ? upperMax : lowerMin;
        model.rho = 0.5 * (hi + lo);
    }

    for (std::size_t k = 0; k < l; ++k) {
        if (alpha[k] > eps) {
            model.supportVectors.push_back(X[k]);
            model.alpha.push_back(alpha[k]);
        }
    }
    return model;
}

std::vector<double> scoreOneClassSvm(const OneClassSvmModel& model,
                                     const DenseMatrix& m) {
    std::vector<double> scores(m.nRows, 0.0);
    std::vector<double> x(m.nCols);
    for (std::size_t r = 0; r < m.nRows; ++r) {
        for (std::size_t c = 0; c < m.nCols; ++c) x[c] = m.at(r, c);
        double s = 0.0;
        for (std::size_t k = 0; k < model.supportVectors.size(); ++k)
            s += model.alpha[k] * rbf(model.supportVectors[k], x, model.gamma);
        scores[r] = model.rho - s;
    }
    return scores;
}

std::string scoresCsv(const std::vector<ScoreSeries>& all) {
    std::ostringstream os;
    os.precision(17);
    os << "node,windowStart,detector,plane,rawScore,smoothScore,alert\n";
    for (const ScoreSeries& s : all) {
        for (std::size_t r = 0; r < s.rows.size(); ++r) {
            os << csvField(s.rows[r].node) << ',' << s.rows[r].start << ','
               << s.detector << ',' << s.plane << ',';
            if (!isMissing(s.raw[r])) os << s.raw[r];
            os << ',';
            if (!isMissing(s.smoothed[r])) os << s.smoothed[r];
            os << ',' << static_cast<int>(s.alert[r]) << '\n';
        }
    }
    return os.str();
}

}  // namespace gpuwatch
