#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace gpuwatch {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool isMissing(double v) { return std::isnan(v); }

// Median of a copy; empty input returns NaN.
double median(std::vector<double> v);

// Nearest-rank quantile on present values: rank = ceil(q * n), 1-based.
// q in (0, 1]; empty input returns NaN.
double nearestRankQuantile(std::vector<double> v, double q);

double mean(std::span<const double> v);

// Population standard deviation.
double populationStd(std::span<const double> v);

// Ordinary least-squares slope of y against x. Requires >= 2 points and
// non-degenerate x; otherwise NaN (0 when x varies but y is constant, by
// the usual formula).
double olsSlope(std::span<const double> x, std::span<const double> y);

// MAD consistency constant for the Gaussian distribution.
inline constexpr double kMadConsistency = 1.4826;

// 64-bit FNV-1a, used for content digests and per-node RNG seeding.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(const std::string& s, std::uint64_t seed = 0xcbf29ce484222325ull);

// splitmix64 step, for deriving independent RNG seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace gpuwatch
