#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gpuwatch/catalog.hpp"
#include "gpuwatch/forensics.hpp"
#include "gpuwatch/ingest.hpp"
#include "gpuwatch/synth.hpp"

using namespace gpuwatch;

namespace {

std::string tempDir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("gpuwatch_synth_" + name);
    std::filesystem::remove_all(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("round trip: generated rows parse losslessly") {
    ScenarioSpec spec;
    spec.durationSeconds = 86400;
    spec.minLeadInWindows = 0;
    auto gen = generate(spec, tempDir("roundtrip"));
    ParseDiagnostics diag;
    auto samples = parseArchive(gen.archivePath, diag);
    CHECK(samples.size() == gen.rowsEmitted);
    CHECK(diag.malformed == 0);
    CHECK(diag.duplicates == 0);
}

TEST_CASE("determinism: identical specs give byte-identical archives") {
    ScenarioSpec spec;
    spec.regime = Regime::driftDominated;
    spec.seed = 5;
    auto a = generate(spec, tempDir("det_a"));
    auto b = generate(spec, tempDir("det_b"));
    CHECK(slurp(a.archivePath) == slurp(b.archivePath));
    CHECK(slurp(a.transitionsPath) == slurp(b.transitionsPath));
    CHECK(slurp(a.catalogPath) == slurp(b.catalogPath));
    auto spec2 = spec;
    spec2.seed = 6;
    auto c = generate(spec2, tempDir("det_c"));
    CHECK(slurp(a.archivePath) != slurp(c.archivePath));
}

TEST_CASE("lead-in violation is fatal") {
    ScenarioSpec spec;
    spec.regime = Regime::detachment;
    PlantedEvent ev;
    ev.node = "snode00";
    ev.t0 = spec.startTime + 600;  // far under the required lead-in
    ev.detachedGpus = {0, 1, 2, 3};
    spec.events = {ev};
    CHECK_THROWS(generate(spec, tempDir("leadin")));
}

TEST_CASE("detachment drops the detached gpu families after t0") {
    ScenarioSpec spec;
    spec.regime = Regime::detachment;
    auto gen = generate(spec, tempDir("detach"));
    REQUIRE(gen.events.size() == 1);
    const auto& ev = gen.events[0];
    ParseDiagnostics diag;
    auto samples = parseArchive(gen.archivePath, diag);
    SliceSpec slice;
    slice.startTime = spec.startTime;
    slice.endTime = spec.startTime + spec.durationSeconds;
    auto series = buildNodeSeries(samples, slice);
    auto& s = series.at(ev.node);
    auto rep = detectDisappearance(s, ev.t0 - 300, 3, 6000);
    CHECK(rep.metricStatus.at("DCGM_FI_DEV_MEMORY_TEMP") == "disappeared");
    CHECK(rep.metricStatus.at("node_load1") == "persistent");
    CHECK(rep.metricStatus.at("scrape_success") == "persistent");
}

TEST_CASE("detachment collapses the scrape payload below half") {
    ScenarioSpec spec;
    spec.regime = Regime::detachment;
    auto gen = generate(spec, tempDir("payload"));
    const auto& ev = gen.events[0];
    ParseDiagnostics diag;
    auto samples = parseArchive(gen.archivePath, diag);
    SliceSpec slice;
    slice.startTime = spec.startTime;
    slice.endTime = spec.startTime + spec.durationSeconds;
    auto series = buildNodeSeries(samples, slice);
    auto payload = payloadSeries(series.at(ev.node), ev.t0 - 1200, ev.t0 + 1200);
    REQUIRE(payload.size() == 5);
    const double before = static_cast<double>(payload[0].second);
    const double after = static_cast<double>(payload.back().second);
    CHECK(after < 0.5 * before);
}

TEST_CASE("transitions encode the scheduler's delayed reaction") {
    ScenarioSpec spec;
    spec.regime = Regime::detachment;
    auto gen = generate(spec, tempDir("delay"));
    ParseDiagnostics diag;
    auto trans = parseTransitions(gen.transitionsPath, diag);
    REQUIRE(trans.size() == 2);
    CHECK(trans[1].toState == "drain");
    CHECK(trans[1].timestamp == gen.events[0].t0 + spec.detectionDelay);
}

TEST_CASE("drift regime plants the ramp ahead of the drain") {
    ScenarioSpec spec;
    spec.regime = Regime::driftDominated;
    auto gen = generate(spec, tempDir("drift"));
    const auto& ev = gen.events[0];
    CHECK(ev.driftSlopePerWindow == spec.driftSlope);
    CHECK(ev.t0 - ev.driftOnset == spec.driftOnsetWindows * spec.stride);
    ParseDiagnostics diag;
    auto trans = parseTransitions(gen.transitionsPath, diag);
    REQUIRE(trans.size() == 2);
    CHECK(trans[1].timestamp == ev.t0);  // drift drains at t0, no delay
}

TEST_CASE("pipe precursor starts before the ramp") {
    ScenarioSpec spec;
    spec.regime = Regime::driftDominated;
    spec.pipePrecursorWindows = 10;
    auto gen = generate(spec, tempDir("precursor"));
    const auto& ev = gen.events[0];
    CHECK(ev.driftOnset - ev.pipePrecursorStart == 10 * spec.stride);
}

TEST_CASE("nominal regime plants nothing") {
    ScenarioSpec spec;
    auto gen = generate(spec, tempDir("nominal"));
    CHECK(gen.events.empty());
    CHECK(std::filesystem::exists(gen.groundTruthPath));
}

}
