#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpuwatch/ingest.hpp"
#include "gpuwatch/types.hpp"

namespace gpuwatch {

enum class Plane { gpu, pipe, os };
const char* planeName(Plane p);

// Maps raw metric families onto feature planes. Every metric classifies into
// exactly one plane: DCGM/ambient families feed the GPU plane, scrape-level
// indicators the pipeline plane, everything else the OS plane.
struct MetricConfig {
    std::string memTempMetric = "DCGM_FI_DEV_MEMORY_TEMP";
    std::string ambientMetric = "ambient_temperature";
    std::string gpuLabel = "gpu";
    int gpuCount = 4;
    std::vector<std::string> pipeMetrics = {"scrape_duration_seconds",
                                            "scrape_success",
                                            "scrape_samples_scraped"};
    int minSamplesPerWindow = 2;
    int warmupWindows = 12;
    int rollSlopeHorizon = 32;

    Plane classify(const std::string& metric) const;
};

struct WindowRow {
    std::string node;
    std::int64_t start = 0;   // window covers [start, start + w)
    std::size_t index = 0;    // window index within the slice, shared across nodes
};

struct FeatureColumn {
    std::string name;  // "<plane>.<metric>.<agg>"
    Plane plane;
    std::vector<double> values;  // |rows| entries, NaN = missing
};

struct WindowFeatureMatrix {
    std::vector<WindowRow> rows;  // node-lexicographic, then window index
    std::vector<FeatureColumn> cols;

    std::optional<std::size_t> columnIndex(const std::string& name) const;
};

// Number of stride-aligned windows fitting fully inside the slice.
std::size_t windowCount(const SliceSpec& spec);

// Per-window aggregates (mean, std, min, max, slope) for every source column,
// plus the derived pipeline features gapFraction and familyCardinality.
// Windows with fewer than minSamplesPerWindow present samples are masked.
WindowFeatureMatrix aggregateWindows(const std::map<std::string, NodeSeries>& series,
                                     const SliceSpec& spec, const MetricConfig& cfg);

// Restricts the matrix to the per-node capped window selection.
WindowFeatureMatrix selectRows(const WindowFeatureMatrix& m,
                               const std::map<std::string, std::vector<std::size_t>>& keep);

struct RobustScaler {
    std::vector<std::string> names;
    std::vector<double> center;  // per-feature median
    std::vector<double> scale;   // MAD * 1.4826, or std/epsilon fallback
    std::vector<std::string> dropped;  // features with no present training value

    std::optional<std::size_t> featureIndex(const std::string& name) const;
    double transform(std::size_t feature, double x) const {
        return (x - center[feature]) / scale[feature];
    }
};

// trainRows empty = fit on all rows.
RobustScaler fitRobustScaler(const WindowFeatureMatrix& m,
                             const std::vector<std::size_t>& trainRows = {});

inline constexpr int kSignatureWidth = 16;

struct SignatureMatrix {
    std::vector<WindowRow> rows;  // same order as the source matrix
    std::vector<std::string> columnNames;       // exactly 16
    std::vector<std::vector<double>> columns;   // 16 x |rows|
    std::vector<double> scalar;                 // s(t) = max |robust-z|
    bool full = true;  // false when some source families were absent
};

// Drift = window aggregate minus a causal trailing median over
// spec.baselineHorizon windows (warm-up 12 present windows), applied to the
// per-GPU memory-temperature avg/min/max and ambient avg/min/max; plus the
// 32-window rolling slope of node-mean memory temperature (units per window).
SignatureMatrix buildSignature(const WindowFeatureMatrix& m, const SliceSpec& spec,
                               const MetricConfig& cfg);

SignatureMatrix selectSignatureRows(
    const SignatureMatrix& sig,
    const std::map<std::string, std::vector<std::size_t>>& keep);

struct PlaneMatrix {
    std::string name;
    std::vector<WindowRow> rows;
    std::vector<FeatureColumn> cols;
};

struct AvailabilityEntry {
    std::string plane;
    bool available = false;
    std::size_t columnCount = 0;  // columns with at least one present value
};

struct PlaneSet {
    PlaneMatrix gpu, pipe, os, joint;
    std::vector<AvailabilityEntry> availability;
};

// gpu = 16 signature columns + node-mean memory-temperature level (17);
// pipe = pipeline-metric aggregates + gapFraction + familyCardinality;
// os = OS-metric aggregates; joint = concatenation of the available planes.
PlaneSet assemblePlanes(const WindowFeatureMatrix& m, const SignatureMatrix& sig,
                        const MetricConfig& cfg);

std::string featureMatrixCsv(const WindowFeatureMatrix& m);
std::string featureMaskCsv(const WindowFeatureMatrix& m);
std::string availabilityCsv(const std::string& sliceName,
                            const std::vector<AvailabilityEntry>& availability);

}  // namespace gpuwatch
