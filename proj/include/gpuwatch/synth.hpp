#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gpuwatch {

enum class Regime { nominal, driftDominated, detachment };

const char* regimeName(Regime r);
Regime regimeFromName(const std::string& name);

struct PlantedEvent {
    std::string node;
    std::int64_t t0 = 0;
    // drift regime
    double driftSlopePerWindow = 0.0;  // degrees per window
    std::int64_t driftOnset = 0;
    std::int64_t pipePrecursorStart = 0;  // 0 = no precursor
    // detachment regime
    std::vector<int> detachedGpus;
};

struct ScenarioSpec {
    Regime regime = Regime::nominal;
    int nodeCount = 1;
    int gpusPerNode = 4;
    std::int64_t startTime = 1740787200;  // 2025-03-01 00:00 UTC
    std::int64_t durationSeconds = 7 * 86400;
    std::int64_t cadence = 600;
    std::int64_t stride = 600;  // window stride used for planting arithmetic
    std::uint64_t seed = 0;

    // per-metric noise scales (standard deviations)
    double memTempNoise = 0.0;
    double ambientNoise = 0.0;
    double pipeNoise = 0.005;
    double loadNoise = 0.2;
    double memAvailableNoise = 1e8;

    std::int64_t detectionDelay = 1800;  // scheduler notices this late
    int driftOnsetWindows = 40;
    double driftSlope = 0.2;       // degrees per window
    int pipePrecursorWindows = 0;  // >0 plants a pipeline precursor before the ramp
    int minLeadInWindows = 156;    // required clean lead-in before any planted t0

    std::vector<PlantedEvent> events;  // auto-planted per regime when empty
};

struct GeneratedScenario {
    std::string archivePath;
    std::string transitionsPath;
    std::string catalogPath;
    std::string groundTruthPath;
    std::vector<PlantedEvent> events;
    std::size_t rowsEmitted = 0;
};

// Writes tidy.csv, transitions.csv, catalog.csv and ground_truth.json into
// outDir. Pure function of the spec: identical specs produce byte-identical
// files. Throws when a planted t0 violates the lead-in requirement.
GeneratedScenario generate(const ScenarioSpec& spec, const std::string& outDir);

std::string scenarioSpecJson(const ScenarioSpec& spec);

}  // namespace gpuwatch
