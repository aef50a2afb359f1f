#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpuwatch/features.hpp"

namespace gpuwatch {

struct ScoreSeries {
    std::string detector;
    std::string plane;
    std::vector<WindowRow> rows;
    std::vector<double> raw;       // NaN = window not scorable
    std::vector<double> smoothed;  // trailing mean, window 5, per node
    std::vector<char> alert;
    double threshold = 0.0;
    double budget = 0.0;
    bool degenerate = false;  // all present scores identical
    std::vector<std::pair<std::string, double>> perNodeThresholds;  // per-node mode only
};

// Trailing rolling mean (window 5) per node; shorter at each node's start.
void smoothScores(ScoreSeries& s, int window = 5);

// Nearest-rank (1-budget) quantile of present smoothed scores; alert iff
// strictly greater than the threshold. perNode fits one threshold per node
// instead of a global one.
void applyBudget(ScoreSeries& s, double budget = 0.01, bool perNode = false);

// raw score = max over present features of |robust-z|; fully-missing rows
// stay NaN.
ScoreSeries scoreRobustZ(const PlaneMatrix& plane, const RobustScaler& scaler);

// Dense detector input: per-feature robust-z with missing entries imputed at
// the center (z = 0), plus one trailing fraction-missing column per row.
struct DenseMatrix {
    std::size_t nRows = 0, nCols = 0;
    std::vector<double> data;  // row-major
    double at(std::size_t r, std::size_t c) const { return data[r * nCols + c]; }
};

DenseMatrix denseStandardized(const PlaneMatrix& plane, const RobustScaler& scaler);

struct IsolationTreeNode {
    int feature = -1;  // -1 = leaf
    double split = 0.0;
    int left = -1, right = -1;
    int size = 0;  // leaf: number of subsample rows that ended here
};

struct IsolationForestModel {
    std::vector<std::vector<IsolationTreeNode>> trees;
    std::size_t subsample = 256;
    double normalizer = 0.0;  // c(subsample)
    std::uint64_t seed = 0;
};

// Average path length adjustment c(n).
double averagePathLength(std::size_t n);

IsolationForestModel trainIsolationForest(const DenseMatrix& m, std::size_t trees = 100,
                                          std::size_t subsample = 256,
                                          std::uint64_t seed = 0);

// score(x) = 2^(-E[h(x)]/c(psi)), higher = more anomalous
std::vector<double> scoreIsolationForest(const IsolationForestModel& model,
                                         const DenseMatrix& m);

struct OneClassSvmModel {
    std::vector<std::vector<double>> supportVectors;
    std::vector<double> alpha;
    double rho = 0.0;
    double gamma = 0.0;
    double nu = 0.05;
    bool converged = true;
    std::size_t iterations = 0;
};

struct OneClassSvmParams {
    double nu = 0.05;
    double gamma = 0.0;  // <= 0: "scale" convention, 1 / (d * meanVariance)
    std::size_t maxTrain = 2000;
    double tolerance = 1e-4;
    std::size_t maxIterations = 200000;
    std::uint64_t seed = 0;
};

OneClassSvmModel trainOneClassSvm(const DenseMatrix& m, const OneClassSvmParams& params);

// score(x) = rho - sum_i alpha_i K(x_i, x); higher = more anomalous
std::vector<double> scoreOneClassSvm(const OneClassSvmModel& model,
                                     const DenseMatrix& m);

std::string scoresCsv(const std::vector<ScoreSeries>& all);

}  // namespace gpuwatch
