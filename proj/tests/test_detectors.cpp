#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "gpuwatch/detectors.hpp"
#include "gpuwatch/stats.hpp"

using namespace gpuwatch;

namespace {

ScoreSeries seriesWithSmoothed(std::vector<double> smoothed) {
    ScoreSeries s;
    s.rows.resize(smoothed.size());
    for (std::size_t i = 0; i < smoothed.size(); ++i) {
        s.rows[i].node = "n1";
        s.rows[i].index = i;
        s.rows[i].start = static_cast<std::int64_t>(i) * 600;
    }
    s.raw = smoothed;
    s.smoothed = std::move(smoothed);
    return s;
}

DenseMatrix denseFrom(const std::vector<std::vector<double>>& rows) {
    DenseMatrix m;
    m.nRows = rows.size();
    m.nCols = rows[0].size();
    for (const auto& r : rows) m.data.insert(m.data.end(), r.begin(), r.end());
    return m;
}

}  // namespace

TEST_SUITE("detectors") {

TEST_CASE("smoothing: trailing mean over window 5 per node") {
    ScoreSeries s;
    for (int i = 0; i < 6; ++i) s.rows.push_back({"n1", i * 600, (std::size_t)i});
    s.raw = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    smoothScores(s, 5);
    CHECK(s.smoothed[0] == 1.0);
    CHECK(s.smoothed[1] == 1.5);
    CHECK(s.smoothed[4] == 3.0);
    CHECK(s.smoothed[5] == 4.0);
}

TEST_CASE("smoothing constants and shift invariance") {
    ScoreSeries a, b;
    for (int i = 0; i < 10; ++i) {
        a.rows.push_back({"n1", i * 600, (std::size_t)i});
        b.rows.push_back({"n1", i * 600, (std::size_t)i});
        a.raw.push_back(3.0);
        b.raw.push_back(3.0 + i);
    }
    smoothScores(a, 5);
    for (double v : a.smoothed) CHECK(v == 3.0);
    smoothScores(b, 5);
    ScoreSeries c = b;
    for (double& v : c.raw) v += 10.0;
    smoothScores(c, 5);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(c.smoothed[i] == doctest::Approx(b.smoothed[i] + 10.0).epsilon(1e-12));
}

TEST_CASE("smoothing does not cross node boundaries") {
    ScoreSeries s;
    for (int i = 0; i < 3; ++i) s.rows.push_back({"a", i * 600, (std::size_t)i});
    for (int i = 0; i < 3; ++i) s.rows.push_back({"b", i * 600, (std::size_t)i});
    s.raw = {100.0, 100.0, 100.0, 1.0, 1.0, 1.0};
    smoothScores(s, 5);
    CHECK(s.smoothed[3] == 1.0);
}

TEST_CASE("budget: 1000 distinct scores at 1% give exactly 10 alerts") {
    std::vector<double> v(1000);
    std::iota(v.begin(), v.end(), 0.0);
    std::mt19937_64 rng(1);
    std::shuffle(v.begin(), v.end(), rng);
    auto s = seriesWithSmoothed(v);
    applyBudget(s, 0.01);
    CHECK(std::count(s.alert.begin(), s.alert.end(), 1) == 10);
    CHECK(!s.degenerate);
}

TEST_CASE("budget: ties give zero alerts") {
    auto s = seriesWithSmoothed(std::vector<double>(100, 5.0));
    applyBudget(s, 0.01);
    CHECK(std::count(s.alert.begin(), s.alert.end(), 1) == 0);
    CHECK(s.degenerate);
}

TEST_CASE("budget bound holds for random inputs") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(257);
        for (double& x : v) x = u(rng);
        auto s = seriesWithSmoothed(v);
        applyBudget(s, 0.05);
        double frac = static_cast<double>(std::count(s.alert.begin(), s.alert.end(), 1)) /
                      static_cast<double>(v.size());
        CHECK(frac <= 0.05);
    }
}

TEST_CASE("per-node budget thresholds") {
    ScoreSeries s;
    for (int i = 0; i < 100; ++i) s.rows.push_back({"a", i * 600, (std::size_t)i});
    for (int i = 0; i < 100; ++i) s.rows.push_back({"b", i * 600, (std::size_t)i});
    s.raw.assign(200, 0.0);
    s.smoothed.clear();
    for (int i = 0; i < 100; ++i) s.smoothed.push_back(i);           // node a: 0..99
    for (int i = 0; i < 100; ++i) s.smoothed.push_back(1000.0 + i);  // node b: higher
    applyBudget(s, 0.05, true);
    REQUIRE(s.perNodeThresholds.size() == 2);
    // rank = ceil(0.95 * 100) = 95, sorted value 94
    CHECK(s.perNodeThresholds[0].second == 94.0);
    CHECK(s.perNodeThresholds[1].second == 1094.0);
    // node a still alerts despite node b's larger magnitude
    CHECK(std::count(s.alert.begin(), s.alert.begin() + 100, 1) == 5);
    CHECK(std::count(s.alert.begin() + 100, s.alert.end(), 1) == 5);
}

TEST_CASE("robust-z score oracle") {
    PlaneMatrix plane;
    plane.name = "gpu";
    for (int i = 0; i < 5; ++i) plane.rows.push_back({"n1", i * 600, (std::size_t)i});
    plane.cols.push_back({"f", Plane::gpu, {1.0, 2.0, 3.0, 4.0, 5.0}});
    WindowFeatureMatrix m;
    m.rows = plane.rows;
    m.cols = plane.cols;
    auto sc = fitRobustScaler(m);
    // center 3, scale 1.4826; shift one window to center + 10*scale
    plane.cols[0].values[2] = 3.0 + 10.0 * sc.scale[0];
    auto s = scoreRobustZ(plane, sc);
    CHECK(s.raw[2] == doctest::Approx(10.0).epsilon(1e-12));
    plane.cols[0].values[0] = kMissing;
    auto s2 = scoreRobustZ(plane, sc);
    CHECK(isMissing(s2.raw[0]));
}

TEST_CASE("dense standardization imputes at center with a missing fraction") {
    PlaneMatrix plane;
    plane.name = "gpu";
    for (int i = 0; i < 4; ++i) plane.rows.push_back({"n1", i * 600, (std::size_t)i});
    plane.cols.push_back({"a", Plane::gpu, {1.0, 2.0, 3.0, kMissing}});
    plane.cols.push_back({"b", Plane::gpu, {4.0, 5.0, 6.0, 7.0}});
    WindowFeatureMatrix m;
    m.rows = plane.rows;
    m.cols = plane.cols;
    auto sc = fitRobustScaler(m);
    auto d = denseStandardized(plane, sc);
    CHECK(d.nCols == 3);
    CHECK(d.at(3, 0) == 0.0);  // imputed at center
    CHECK(d.at(3, 2) == 0.5);  // one of two features missing
    CHECK(d.at(0, 2) == 0.0);
}

TEST_CASE("average path length constant") {
    CHECK(averagePathLength(1) == 0.0);
    CHECK(averagePathLength(2) == 1.0);
    // c(256) from the closed form
    CHECK(averagePathLength(256) == doctest::Approx(10.244770920116851).epsilon(1e-9));
}

TEST_CASE("isolation forest: two-point oracle") {
    // many copies of one point and one far outlier
    std::vector<std::vector<double>> rows(50, {0.0, 0.0});
    rows.push_back({50.0, 50.0});
    auto m = denseFrom(rows);
    auto model = trainIsolationForest(m, 50, 32, 3);
    auto scores = scoreIsolationForest(model, m);
    CHECK(scores[50] > scores[0]);
}

TEST_CASE("isolation forest: bitwise seeded determinism") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> rows(300, std::vector<double>(4));
    for (auto& r : rows)
        for (double& x : r) x = gauss(rng);
    auto m = denseFrom(rows);
    auto a = scoreIsolationForest(trainIsolationForest(m, 100, 256, 9), m);
    auto b = scoreIsolationForest(trainIsolationForest(m, 100, 256, 9), m);
    CHECK(a == b);
    auto c = scoreIsolationForest(trainIsolationForest(m, 100, 256, 10), m);
    CHECK(a != c);
}

TEST_CASE("isolation forest: constant matrix scores are all equal") {
    std::vector<std::vector<double>> rows(64, {1.0, 1.0});
    auto m = denseFrom(rows);
    auto scores = scoreIsolationForest(trainIsolationForest(m, 20, 32, 1), m);
    for (double s : scores) CHECK(s == doctest::Approx(scores[0]));
}

TEST_CASE("ocsvm: centroid scores below a far point") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> rows(200, std::vector<double>(2));
    for (auto& r : rows)
        for (double& x : r) x = gauss(rng);
    auto m = denseFrom(rows);
    OneClassSvmParams params;
    params.seed = 3;
    auto model = trainOneClassSvm(m, params);
    CHECK(model.converged);
    auto probe = denseFrom({{0.0, 0.0}, {10.0, 10.0}});
    auto scores = scoreOneClassSvm(model, probe);
    CHECK(scores[0] < scores[1]);
}

TEST_CASE("ocsvm: duplicate inputs score identically") {
    std::vector<std::vector<double>> rows;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) rows.push_back({u(rng), u(rng)});
    auto m = denseFrom(rows);
    OneClassSvmParams params;
    auto model = trainOneClassSvm(m, params);
    auto probe = denseFrom({{0.3, -0.2}, {0.3, -0.2}});
    auto scores = scoreOneClassSvm(model, probe);
    CHECK(scores[0] == scores[1]);
}

TEST_CASE("ocsvm: nu property on training data") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> rows(1000, std::vector<double>(3));
    for (auto& r : rows)
        for (double& x : r) x = gauss(rng);
    auto m = denseFrom(rows);
    OneClassSvmParams params;
    params.nu = 0.05;
    auto model = trainOneClassSvm(m, params);
    auto scores = scoreOneClassSvm(model, m);
    double outliers = 0;
    for (double s : scores)
        if (s > 0.0) ++outliers;
    CHECK(outliers / 1000.0 <= params.nu + 0.02);
}

TEST_CASE("scores csv shape") {
    auto s = seriesWithSmoothed({1.0, 2.0});
    s.detector = "zscore";
    s.plane = "gpu";
    applyBudget(s, 0.5);
    auto csv = scoresCsv({s});
    CHECK(csv.rfind("node,windowStart,detector,plane,rawScore,smoothScore,alert\n", 0) ==
          0);
    CHECK(csv.find("n1,0,zscore,gpu,1,1,0") != std::string::npos);
}

}
