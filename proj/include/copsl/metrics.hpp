#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "copsl/sampling.hpp"

namespace copsl {

using ObjectiveVector = std::vector<double>;

struct FrontApproximation {
    std::vector<ObjectiveVector> points;
    ObjectiveVector reference_point;
};

// a dominates b: a <= b everywhere and a < b somewhere.
bool dominates(std::span<const double> a, std::span<const double> b);

// The points no other point dominates, duplicates collapsed, in
// lexicographic order.
std::vector<ObjectiveVector> nondominated_filter(const std::vector<ObjectiveVector>& points);

// Exact hypervolume. Points that are not strictly below `ref` in every
// objective contribute nothing.
double hv_2d(const std::vector<ObjectiveVector>& points, std::span<const double> ref);
double hv_3d(const std::vector<ObjectiveVector>& points, std::span<const double> ref);
// Dispatches on ref.size(); UnsupportedError for m outside {2,3}.
double hypervolume(const std::vector<ObjectiveVector>& points, std::span<const double> ref);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

// Uniform sampling in [componentwise min of the points, ref].
MonteCarloEstimate hv_monte_carlo(const std::vector<ObjectiveVector>& points, std::span<const double> ref,
                                  std::size_t samples, RngStream& rng);

inline constexpr double kLogHvFloor = 1e-12;

// log10(max(hv_true - hv_learned, 1e-12))
double log_hv_diff(double hv_true, double hv_learned);

// Front CSV: "# m=<m> ref=<r1>,<r2>[,<r3>]" then "f1,...,fm" then one row per point.
void write_front_csv(const std::filesystem::path& path, const FrontApproximation& front);
FrontApproximation read_front_csv(const std::filesystem::path& path);

} // namespace copsl
