#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "gpuwatch/csv.hpp"
#include "gpuwatch/ingest.hpp"
#include "gpuwatch/stats.hpp"

using namespace gpuwatch;

namespace {

std::string tempFile(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / ("gpuwatch_test_" + name);
    writeTextFile(path.string(), content);
    return path.string();
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("tidy row parsing") {
    auto path = tempFile("parse.csv",
                         "timestamp,node,metric,labels,value\n"
                         "1739710200,ggpu142,DCGM_FI_DEV_MEM_CLOCK,gpu=0,1215\n");
    ParseDiagnostics diag;
    auto samples = parseArchive(path, diag);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].timestamp == 1739710200);
    CHECK(samples[0].node == "ggpu142");
    CHECK(samples[0].metric == "DCGM_FI_DEV_MEM_CLOCK");
    REQUIRE(samples[0].labels.size() == 1);
    CHECK(samples[0].labels[0] == std::pair<std::string, std::string>{"gpu", "0"});
    CHECK(samples[0].value == 1215.0);
    CHECK(diag.totalRows == 1);
    CHECK(diag.malformed == 0);
}

TEST_CASE("malformed rows are tallied, not dropped silently") {
    auto path = tempFile("malformed.csv",
                         "timestamp,node,metric,labels,value\n"
                         "100,n1,m,,1\n"
                         "101,n1,m,,NaN\n"
                         "bad line\n");
    ParseDiagnostics diag;
    auto samples = parseArchive(path, diag);
    CHECK(samples.size() == 1);
    CHECK(diag.totalRows == 3);
    CHECK(diag.malformed == 2);
}

TEST_CASE("duplicate keys keep the last occurrence") {
    auto path = tempFile("dup.csv",
                         "timestamp,node,metric,labels,value\n"
                         "100,n1,m,,1\n"
                         "200,n1,m,,2\n"
                         "100,n1,m,,9\n");
    ParseDiagnostics diag;
    auto samples = parseArchive(path, diag);
    REQUIRE(samples.size() == 2);
    CHECK(diag.duplicates == 1);
    CHECK(samples[0].timestamp == 100);
    CHECK(samples[0].value == 9.0);  // last occurrence wins
}

TEST_CASE("unknown header is fatal") {
    auto path = tempFile("badheader.csv", "time,node,metric,labels,value\n");
    ParseDiagnostics diag;
    CHECK_THROWS(parseArchive(path, diag));
}

TEST_CASE("bz2 archives decompress transparently") {
    auto plain = tempFile("bz.csv",
                          "timestamp,node,metric,labels,value\n"
                          "100,n1,m,,1\n"
                          "700,n1,m,,2\n");
    std::string cmd = "bzip2 -kf '" + plain + "'";
    REQUIRE(std::system(cmd.c_str()) == 0);
    ParseDiagnostics diag;
    auto samples = parseArchive(plain + ".bz2", diag);
    CHECK(samples.size() == 2);
}

TEST_CASE("node series timeline and native interval") {
    std::vector<MetricSample> samples;
    for (std::int64_t t : {0, 600, 1200, 4200})
        samples.push_back({t, "n1", "m", {}, 1.0});
    SliceSpec spec;
    spec.startTime = 0;
    spec.endTime = 10000;
    auto series = buildNodeSeries(samples, spec);
    REQUIRE(series.count("n1") == 1);
    CHECK(series["n1"].timeline.size() == 4);
    // median of deltas {600, 600, 3000}
    CHECK(series["n1"].nativeInterval == 600);
}

TEST_CASE("out of range samples are filtered, empty nodes excluded") {
    std::vector<MetricSample> samples{{100, "n1", "m", {}, 1.0},
                                      {99999, "n1", "m", {}, 2.0},
                                      {5, "n2", "m", {}, 3.0}};
    SliceSpec spec;
    spec.startTime = 50;
    spec.endTime = 1000;
    std::vector<std::string> warnings;
    auto series = buildNodeSeries(samples, spec, &warnings);
    REQUIRE(series.count("n1") == 1);
    CHECK(series.count("n2") == 0);
    CHECK(series["n1"].timeline.size() == 1);
    CHECK(warnings.size() == 1);
}

TEST_CASE("gap stats count maximal runs") {
    NodeSeries s;
    s.node = "n1";
    s.timeline = {0, 600, 1200, 1800, 2400};
    s.nativeInterval = 600;
    ColumnKey key{"m", {}};
    s.columns[key] = {1.0, kMissing, kMissing, 1.0, 1.0};
    auto stats = computeGapStats(s);
    const auto& col = stats.perColumn.at(key);
    CHECK(col.missingCount == 2);
    CHECK(col.missRatio == doctest::Approx(0.4));
    REQUIRE(col.gapHistogram.size() == 1);
    CHECK(col.gapHistogram.at(2) == 1);
    CHECK(col.longestGapSeconds == 1200);
}

TEST_CASE("fully present and fully missing columns") {
    NodeSeries s;
    s.node = "n1";
    s.timeline = {0, 600, 1200};
    s.nativeInterval = 600;
    s.columns[{"full", {}}] = {1.0, 1.0, 1.0};
    s.columns[{"empty", {}}] = {kMissing, kMissing, kMissing};
    auto stats = computeGapStats(s);
    CHECK(stats.perColumn.at({"full", {}}).missRatio == 0.0);
    CHECK(stats.perColumn.at({"full", {}}).gapHistogram.empty());
    CHECK(stats.perColumn.at({"empty", {}}).missRatio == 1.0);
}

TEST_CASE("planted gaps of 3 and 7 samples") {
    NodeSeries s;
    s.node = "n1";
    s.nativeInterval = 600;
    for (int i = 0; i < 100; ++i) s.timeline.push_back(i * 600);
    std::vector<double> col(100, 1.0);
    for (int i = 20; i < 23; ++i) col[i] = kMissing;
    for (int i = 60; i < 67; ++i) col[i] = kMissing;
    s.columns[{"m", {}}] = col;
    auto stats = computeGapStats(s);
    const auto& g = stats.perColumn.at({"m", {}});
    CHECK(g.gapHistogram.at(3) == 1);
    CHECK(g.gapHistogram.at(7) == 1);
    CHECK(g.longestGapSeconds == 7 * 600);
    CHECK(g.missingCount == 10);
}

TEST_CASE("window sampling respects the cap and is deterministic") {
    std::map<std::string, std::vector<std::size_t>> windows;
    for (std::size_t i = 0; i < 300; ++i) windows["small"].push_back(i);
    for (std::size_t i = 0; i < 2000; ++i) windows["big"].push_back(i);
    SliceSpec spec;
    spec.startTime = 0;
    spec.endTime = 1;
    spec.perNodeCap = 500;
    spec.seed = 11;
    auto a = sampleWindows(windows, spec);
    auto b = sampleWindows(windows, spec);
    CHECK(a.at("small").size() == 300);
    CHECK(a.at("big").size() == 500);
    CHECK(a == b);
    CHECK(std::is_sorted(a.at("big").begin(), a.at("big").end()));
    spec.seed = 12;
    auto c = sampleWindows(windows, spec);
    CHECK(a.at("big") != c.at("big"));
}

}
