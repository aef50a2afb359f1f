#include <doctest.h>

#include <vector>

#include "gpuwatch/forensics.hpp"
#include "gpuwatch/stats.hpp"
#include "gpuwatch/types.hpp"

using namespace gpuwatch;

namespace {

NodeSeries uniformSeries(std::size_t n, std::int64_t cadence = 600) {
    NodeSeries s;
    s.node = "n1";
    s.nativeInterval = cadence;
    for (std::size_t i = 0; i < n; ++i)
        s.timeline.push_back(static_cast<std::int64_t>(i) * cadence);
    return s;
}

IncidentRecord incidentOver(std::int64_t t0, double beforeHours, double afterHours) {
    IncidentRecord rec;
    rec.node = "n1";
    rec.beforeHours = beforeHours;
    rec.afterHours = afterHours;
    rec.refinedT0 = t0;
    return rec;
}

}  // namespace

TEST_SUITE("forensics") {

TEST_CASE("payload series counts present samples per scrape") {
    auto s = uniformSeries(4);
    s.columns[{"a", {}}] = {1.0, 1.0, kMissing, 1.0};
    s.columns[{"b", {}}] = {1.0, kMissing, kMissing, 1.0};
    auto p = payloadSeries(s, 0, 1800);
    REQUIRE(p.size() == 4);
    CHECK(p[0].second == 2);
    CHECK(p[1].second == 1);
    CHECK(p[2].second == 0);
    CHECK(p[3].second == 2);
}

TEST_CASE("alignment by payload collapse") {
    // payload [500...500, 0, 0, ...]: collapse at scrape 10
    auto s = uniformSeries(20);
    for (int c = 0; c < 500; ++c) {
        std::vector<double> col(20, 1.0);
        for (int i = 10; i < 20; ++i) col[i] = kMissing;
        s.columns[{"m" + std::to_string(c), {}}] = col;
    }
    // one surviving column keeps the timeline observable after the drop
    s.columns[{"alive", {}}] = std::vector<double>(20, 1.0);
    auto rec = incidentOver(6000, 1.0, 1.0);
    auto r = alignScrapeCountDrop(s, rec, 600, 3000);
    REQUIRE(r.has_value());
    CHECK(r->rule == "payloadDrop");
    CHECK(r->lastGoodScrape == 9 * 600);
    CHECK(r->t0Used == 10 * 600);
}

TEST_CASE("alignment by observation gap") {
    NodeSeries s;
    s.node = "n1";
    s.nativeInterval = 600;
    s.timeline = {0, 600, 1200, 4800, 5400};
    s.columns[{"m", {}}] = {1.0, 1.0, 1.0, 1.0, 1.0};
    auto rec = incidentOver(1200, 1.0, 2.0);
    auto r = alignScrapeCountDrop(s, rec, 600, 3000);
    REQUIRE(r.has_value());
    CHECK(r->rule == "gap");
    CHECK(r->lastGoodScrape == 1200);
    CHECK(r->t0Used == 1800);  // gap 1200 -> 4800 is 3600 s > 3000 s
}

TEST_CASE("transient dips that recover do not align") {
    auto s = uniformSeries(30);
    for (int c = 0; c < 10; ++c) {
        std::vector<double> col(30, 1.0);
        if (c > 0) col[15] = kMissing;  // one-scrape dip to 10% payload
        s.columns[{"m" + std::to_string(c), {}}] = col;
    }
    auto rec = incidentOver(9000, 2.0, 2.0);
    auto r = alignScrapeCountDrop(s, rec, 600, 3000);
    CHECK(!r.has_value());
}

TEST_CASE("no collapse yields nullopt") {
    auto s = uniformSeries(10);
    s.columns[{"m", {}}] = std::vector<double>(10, 1.0);
    auto rec = incidentOver(3000, 0.5, 0.5);
    CHECK(!alignScrapeCountDrop(s, rec, 600, 3000).has_value());
}

TEST_CASE("disappearance partitions metric families") {
    auto s = uniformSeries(30);
    for (int g = 0; g < 4; ++g) {
        std::vector<double> col(30, 40.0);
        if (g == 2)
            for (int i = 15; i < 30; ++i) col[i] = kMissing;
        s.columns[{"DCGM_FI_DEV_MEMORY_TEMP",
                   labelsFromString("gpu=" + std::to_string(g))}] = col;
    }
    s.columns[{"node_load1", {}}] = std::vector<double>(30, 4.0);
    const std::int64_t t0 = 15 * 600 - 300;
    auto rep = detectDisappearance(s, t0, 3, 6000);
    CHECK(rep.metricStatus.at("DCGM_FI_DEV_MEMORY_TEMP") == "partial");
    CHECK(rep.metricStatus.at("node_load1") == "persistent");
    REQUIRE(rep.partialGpuLoss.count("DCGM_FI_DEV_MEMORY_TEMP") == 1);
    CHECK(rep.partialGpuLoss.at("DCGM_FI_DEV_MEMORY_TEMP") ==
          std::vector<std::string>{"2"});
}

TEST_CASE("full gpu loss with persistent node families") {
    auto s = uniformSeries(30);
    for (int g = 0; g < 4; ++g) {
        std::vector<double> col(30, 40.0);
        for (int i = 15; i < 30; ++i) col[i] = kMissing;
        s.columns[{"DCGM_FI_DEV_MEMORY_TEMP",
                   labelsFromString("gpu=" + std::to_string(g))}] = col;
    }
    s.columns[{"node_load1", {}}] = std::vector<double>(30, 4.0);
    auto rep = detectDisappearance(s, 15 * 600 - 300, 3, 6000);
    CHECK(rep.metricStatus.at("DCGM_FI_DEV_MEMORY_TEMP") == "disappeared");
    CHECK(rep.metricStatus.at("node_load1") == "persistent");
    CHECK(rep.partialGpuLoss.empty());
}

TEST_CASE("nothing disappears in a healthy series") {
    auto s = uniformSeries(30);
    s.columns[{"m", {}}] = std::vector<double>(30, 1.0);
    auto rep = detectDisappearance(s, 9000, 3, 6000);
    CHECK(rep.metricStatus.at("m") == "persistent");
}

TEST_CASE("rank shifts: planted step ranks first with exact delta") {
    // baseline [t0-1800, t0); adjacent (t0-300, t0]; step +7 inside the
    // adjacent interval only
    const std::int64_t t0 = 60 * 60;
    NodeSeries s;
    s.node = "n1";
    s.nativeInterval = 60;
    for (int i = 0; i < 120; ++i) s.timeline.push_back(i * 60);
    std::vector<double> stepped(120, 10.0), quiet(120, 3.0), noisy(120);
    for (int i = 0; i < 120; ++i) {
        if (i * 60 > t0 - 300 && i * 60 <= t0) stepped[i] = 17.0;
        noisy[i] = (i % 2 == 0) ? 1.0 : 1.2;
    }
    s.columns[{"stepped", {}}] = stepped;
    s.columns[{"quiet", {}}] = quiet;
    s.columns[{"noisy", {}}] = noisy;
    auto summary = rankShifts(s, t0, "test", 30, 5, true, 3);
    CHECK(summary.numSignalsLong == 3);
    REQUIRE(!summary.ranked.empty());
    CHECK(summary.ranked[0].column.metric == "stepped");

    // brute-force interval means for the oracle delta
    std::vector<double> base, adj;
    for (int i = 0; i < 120; ++i) {
        const std::int64_t t = i * 60;
        if (t >= t0 - 1800 && t < t0) base.push_back(stepped[i]);
        if (t > t0 - 300 && t <= t0) adj.push_back(stepped[i]);
    }
    CHECK(summary.ranked[0].delta ==
          doctest::Approx(mean(adj) - mean(base)).epsilon(1e-9));
    // constant column: zero delta, zero variance shift
    for (const auto& e : summary.ranked)
        if (e.column.metric == "quiet") {
            CHECK(e.delta == 0.0);
            CHECK(e.diffStd == 0.0);
        }
}

TEST_CASE("rank shifts: vanished columns are reported separately") {
    const std::int64_t t0 = 60 * 60;
    NodeSeries s;
    s.node = "n1";
    s.nativeInterval = 60;
    for (int i = 0; i < 120; ++i) s.timeline.push_back(i * 60);
    std::vector<double> vanishing(120, 5.0);
    for (int i = 0; i < 120; ++i)
        if (i * 60 > t0 - 300) vanishing[i] = kMissing;
    s.columns[{"vanishing", {}}] = vanishing;
    s.columns[{"stable", {}}] = std::vector<double>(120, 1.0);
    auto summary = rankShifts(s, t0, "test", 30, 5, true, 3);
    REQUIRE(summary.vanished.size() == 1);
    CHECK(summary.vanished[0].metric == "vanishing");
    for (const auto& e : summary.ranked) CHECK(e.column.metric != "vanishing");
}

TEST_CASE("rank shifts: after-side adjacent interval") {
    const std::int64_t t0 = 60 * 60;
    NodeSeries s;
    s.node = "n1";
    s.nativeInterval = 60;
    for (int i = 0; i < 120; ++i) s.timeline.push_back(i * 60);
    std::vector<double> jump(120, 1.0);
    for (int i = 0; i < 120; ++i)
        if (i * 60 >= t0) jump[i] = 8.0;
    s.columns[{"jump", {}}] = jump;
    auto summary = rankShifts(s, t0, "test", 30, 5, false, 3);
    REQUIRE(summary.ranked.size() == 1);
    CHECK(summary.ranked[0].delta == doctest::Approx(7.0).epsilon(1e-9));
    CHECK(!summary.adjacentBefore);
}

TEST_CASE("ties rank by column name, stably") {
    const std::int64_t t0 = 60 * 60;
    NodeSeries s;
    s.node = "n1";
    s.nativeInterval = 60;
    for (int i = 0; i < 120; ++i) s.timeline.push_back(i * 60);
    // symmetric construction so the tie is exact in floating point
    std::vector<double> up(120, 0.0), down(120, 0.0);
    for (int i = 0; i < 120; ++i)
        if (i * 60 > t0 - 300 && i * 60 <= t0) {
            up[i] = 1.0;
            down[i] = -1.0;
        }
    s.columns[{"zzz", {}}] = up;
    s.columns[{"aaa", {}}] = down;
    auto summary = rankShifts(s, t0, "test", 30, 5, true, 3);
    REQUIRE(summary.ranked.size() == 2);
    CHECK(summary.ranked[0].column.metric == "aaa");
}

}
