#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpuwatch/features.hpp"
#include "gpuwatch/types.hpp"

namespace gpuwatch {

// Everything a run needs, serializable to JSON so a manifest can reproduce it.
struct PipelineConfig {
    std::string archive;
    std::string catalog;
    std::string transitions;  // empty: derive from the archive's state metric
    std::string outDir = "out";

    SliceSpec slice;  // startTime == endTime == 0: infer bounds from the archive
    MetricConfig metrics;

    double budget = 0.01;
    int smoothWindow = 5;
    bool perNodeBudget = false;
    std::size_t ifTrees = 100;
    std::size_t ifSubsample = 256;
    double ocsvmNu = 0.05;
    double ocsvmGamma = 0.0;  // <= 0: scale convention
    double ocsvmTol = 1e-4;
    std::size_t ocsvmMaxTrain = 2000;

    double weakQuantile = 0.99;
    int minRun = 3;
    bool pooledQuantile = false;
    bool includeMisses = true;

    std::int64_t scrapeInterval = 600;
    std::int64_t dropoutThreshold = 3000;
    int baselineMinutes = 30;
    int adjacentMinutes = 5;
    bool adjacentAfter = false;  // default compares the pre-t0 side
    std::size_t minLongSamples = 3;

    // Echoed into the manifest; reuse a previous run's value to reproduce a
    // run byte for byte. Empty: current UTC wall time.
    std::string runTimestamp;
};

PipelineConfig configFromJson(const std::string& text);
std::string configToJson(const PipelineConfig& cfg);

struct StageResult {
    std::vector<std::string> files;  // paths written, manifest last
    std::string manifestJson;
};

StageResult runIngestStats(const PipelineConfig& cfg);
StageResult runRefineCatalog(const PipelineConfig& cfg);
StageResult runFeatures(const PipelineConfig& cfg);
StageResult runDetect(const PipelineConfig& cfg);
StageResult runEvaluate(const PipelineConfig& cfg);
StageResult runForensics(const PipelineConfig& cfg);
StageResult runAll(const PipelineConfig& cfg);

}  // namespace gpuwatch
