#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "aeromag/geodata.hpp"

namespace aeromag {

struct EulerConfig {
  int window_size = 3;  // odd, >= 3
  std::vector<double> si_set = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  double rms_accept = 8.9e-3;
  double max_depth = 1500.0;            // meters
  double depth_uncertainty_max = 0.15;  // sigma_z / z0
  int window_step = 1;

  void validate() const;
  bool operator==(const EulerConfig&) const = default;
};

struct EulerSolution {
  double x0 = 0.0;
  double y0 = 0.0;
  double z0 = 0.0;  // depth, positive down
  double si = 0.0;
  double base = 0.0;     // Euler base level B, nT
  double rms = 0.0;      // relative misfit |r| / |rhs|
  double sigma_z = 0.0;  // depth standard error, meters
  int window_row = 0;    // window-center cell indices
  int window_col = 0;
};

struct SolutionSet {
  std::vector<EulerSolution> solutions;
  EulerConfig config;
  std::string grid_id;
  std::map<std::string, std::size_t> rejected_counts;  // rms, depth_range,
                                                       // uncertainty, degenerate
};

struct WindowSolution {
  double x0, y0, z0, base, rms, sigma_z;
};

// Least squares over one window of the Euler homogeneity relation,
//   x0*Tx + y0*Ty + z0*Tz + N*B = x*Tx + y*Ty + N*T   (observed at z = 0),
// solved in window-centered coordinates so the result is translation
// equivariant; rms is normalized by the centered right-hand side norm.
// Throws NumericalError (DegenerateWindow) when the normal-matrix condition
// number exceeds 1e12.
WindowSolution solve_window(std::span<const double> t, std::span<const double> tx,
                            std::span<const double> ty, std::span<const double> tz,
                            std::span<const double> xs, std::span<const double> ys,
                            double si);

// Moving-window sweep over the full structural-index set. Each window keeps
// its minimum-rms index (ties to the smallest); acceptance requires
// rms <= rms_accept, 0 < z0 <= max_depth and sigma_z/z0 within bound.
// A rejected window is tallied under the first failing check in the order
// degenerate, rms, depth_range, uncertainty. Window solves may run in
// parallel; output order and tallies are fixed by window index.
SolutionSet euler_sweep(const Grid& t, const Grid& tx, const Grid& ty, const Grid& tz,
                        const EulerConfig& config);

// Greedy dedup of overlapping-window solutions, in input order: a solution
// joins the first cluster whose representative lies within `radius`
// horizontally and in depth; representatives are the minimum-rms members.
// `cluster_sizes`, when given, receives the member count per representative.
SolutionSet filter_cluster(const SolutionSet& set, double radius,
                           std::vector<std::size_t>* cluster_sizes = nullptr);

// CSV: header x0,y0,z0,si,base,rms,sigma_z,window_row,window_col, one row
// per solution, 17 significant digits.
void write_solutions_csv(const SolutionSet& set, std::ostream& out);
void write_solutions_csv_file(const SolutionSet& set, const std::string& path);
SolutionSet read_solutions_csv(std::istream& in);
SolutionSet read_solutions_csv_file(const std::string& path);

// Provenance sidecar: config snapshot, grid id, tallies (JSON text).
std::string solution_provenance_json(const SolutionSet& set);

}  // namespace aeromag
