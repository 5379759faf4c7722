#pragma once

#include <span>
#include <vector>

#include "aeromag/euler.hpp"
#include "aeromag/geodata.hpp"

// Plain serial implementations kept alongside the OpenMP kernels. They favor
// obviousness over speed and serve as oracles in the test suites and as the
// baseline in the benchmark binary.
namespace aeromag::reference {

// O(n^2) per-point nearest-neighbor distances.
std::vector<double> nn_distances_brute(std::span<const double> xs,
                                       std::span<const double> ys);

// Per-cell linear scan over all points.
Grid grid_nearest_brute(const SurveyPointSet& points, const GridGeoref& georef,
                        double max_radius);

// Row-major n x n partial-pivot Gaussian elimination. Deliberately not the
// library solver used by the main path.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b);

// Ordinary kriging with brute-force neighbor search and solve_dense.
Grid grid_kriging_serial(const SurveyPointSet& points, const GridGeoref& georef,
                         const VariogramModel& variogram, int neighborhood = 16);

// Straight-line window sweep calling solve_window per index.
SolutionSet euler_sweep_serial(const Grid& t, const Grid& tx, const Grid& ty,
                               const Grid& tz, const EulerConfig& config);

}  // namespace aeromag::reference
