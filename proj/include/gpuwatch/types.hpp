#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gpuwatch {

// Ordered key=value label pairs, sorted by key.
using Labels = std::vector<std::pair<std::string, std::string>>;

std::string labelsToString(const Labels& labels);          // "k=v;k2=v2"
Labels labelsFromString(const std::string& s);             // inverse, sorts by key

struct MetricSample {
    std::int64_t timestamp = 0;  // seconds since epoch, UTC
    std::string node;
    std::string metric;
    Labels labels;
    double value = 0.0;
};

// Identifies one time-series column: metric family plus label set.
struct ColumnKey {
    std::string metric;
    Labels labels;

    auto operator<=>(const ColumnKey&) const = default;
    std::string str() const;  // "metric{k=v;...}" or bare metric name
};

// Reproducibility contract for one experiment slice.
struct SliceSpec {
    std::vector<std::string> nodes;  // empty = every node present in the archive
    std::int64_t startTime = 0;
    std::int64_t endTime = 0;
    std::int64_t windowLength = 3600;  // w, seconds
    std::int64_t stride = 600;         // s, seconds
    std::size_t perNodeCap = 500;      // windows
    std::uint64_t seed = 0;
    int baselineHorizon = 144;  // windows
    int leadLookback = 48;      // windows

    bool valid() const {
        return startTime < endTime && stride > 0 && stride <= windowLength &&
               perNodeCap >= 1;
    }
};

}  // namespace gpuwatch
