#include "aeromag/euler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

namespace aeromag {

namespace {

struct WindowCore {
  WindowSolution solution;
  bool degenerate = false;
};

// Window solve in coordinates relative to (cx, cy). The A columns carry no
// coordinates, so the least-squares residual is translation invariant and
// only x0/y0 pick up the center shift.
WindowCore solve_core(std::span<const double> t, std::span<const double> tx,
                      std::span<const double> ty, std::span<const double> tz,
                      std::span<const double> xs, std::span<const double> ys,
                      double cx, double cy, double si) {
  const int m = static_cast<int>(t.size());
  Eigen::MatrixXd a(m, 4);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    a(i, 0) = tx[i];
    a(i, 1) = ty[i];
    a(i, 2) = tz[i];
    a(i, 3) = si;
    b(i) = (xs[i] - cx) * tx[i] + (ys[i] - cy) * ty[i] + si * t[i];
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  WindowCore out;
  // Condition number of the 4x4 normal matrix is (smax/smin)^2.
  if (!(sv(3) > 0.0) || (sv(0) / sv(3)) * (sv(0) / sv(3)) > 1e12) {
    out.degenerate = true;
    return out;
  }
  const Eigen::Vector4d p = svd.solve(b);
  const Eigen::VectorXd resid = a * p - b;
  const double rnorm = resid.norm();
  const double bnorm = b.norm();

  out.solution.x0 = cx + p(0);
  out.solution.y0 = cy + p(1);
  out.solution.z0 = p(2);
  out.solution.base = p(3);
  out.solution.rms = rnorm / std::max(bnorm, 1e-12);

  const double dof = std::max(m - 4, 1);
  const double residual_variance = rnorm * rnorm / dof;
  const Eigen::MatrixXd& v = svd.matrixV();
  double inv_zz = 0.0;
  for (int k = 0; k < 4; ++k) inv_zz += v(2, k) * v(2, k) / (sv(k) * sv(k));
  out.solution.sigma_z = std::sqrt(residual_variance * inv_zz);
  return out;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void EulerConfig::validate() const {
  if (window_size < 3 || window_size % 2 == 0)
    throw ConfigError("euler: window_size must be odd and >= 3");
  if (si_set.empty()) throw ConfigError("euler: si_set must be non-empty");
  for (double si : si_set)
    if (!(si > 0.0)) throw ConfigError("euler: structural indices must be > 0");
  if (!std::is_sorted(si_set.begin(), si_set.end()))
    throw ConfigError("euler: si_set must be sorted ascending");
  if (!(rms_accept > 0.0)) throw ConfigError("euler: rms_accept must be > 0");
  if (!(max_depth > 0.0)) throw ConfigError("euler: max_depth must be > 0");
  if (!(depth_uncertainty_max > 0.0))
    throw ConfigError("euler: depth_uncertainty_max must be > 0");
  if (window_step < 1) throw ConfigError("euler: window_step must be >= 1");
}

WindowSolution solve_window(std::span<const double> t, std::span<const double> tx,
                            std::span<const double> ty, std::span<const double> tz,
                            std::span<const double> xs, std::span<const double> ys,
                            double si) {
  if (t.size() < 4) throw ConfigError("solve_window: need at least 4 cells");
  if (tx.size() != t.size() || ty.size() != t.size() || tz.size() != t.size() ||
      xs.size() != t.size() || ys.size() != t.size())
    throw ConfigError("solve_window: mismatched window array sizes");
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cx += xs[i];
    cy += ys[i];
  }
  cx /= static_cast<double>(xs.size());
  cy /= static_cast<double>(ys.size());
  const WindowCore core = solve_core(t, tx, ty, tz, xs, ys, cx, cy, si);
  if (core.degenerate)
    throw NumericalError("DegenerateWindow: normal matrix condition number > 1e12");
  return core.solution;
}

SolutionSet euler_sweep(const Grid& t, const Grid& tx, const Grid& ty, const Grid& tz,
                        const EulerConfig& config) {
  config.validate();
  if (!(tx.georef == t.georef) || !(ty.georef == t.georef) || !(tz.georef == t.georef))
    throw DataError("GeorefMismatch: T, Tx, Ty, Tz must share one georef");
  if (t.any_masked() || tx.any_masked() || ty.any_masked() || tz.any_masked())
    throw DataError("MaskedInput: euler_sweep requires fully unmasked grids");

  const GridGeoref& g = t.georef;
  const int w = config.window_size;
  const int half = w / 2;
  if (g.n_rows < w || g.n_cols < w)
    throw DataError("EmptySweep: grid smaller than the window");

  std::vector<int> rows, cols;
  for (int r = half; r + half < g.n_rows; r += config.window_step) rows.push_back(r);
  for (int c = half; c + half < g.n_cols; c += config.window_step) cols.push_back(c);
  const std::size_t n_windows = rows.size() * cols.size();

  struct Candidate {
    WindowSolution sol;
    double si = 0.0;
    bool valid = false;
  };
  std::vector<Candidate> candidates(n_windows);

  const int w2 = w * w;
#pragma omp parallel
  {
    std::vector<double> bt(w2), btx(w2), bty(w2), btz(w2), bx(w2), by(w2);
#pragma omp for schedule(static)
    for (std::int64_t wi = 0; wi < static_cast<std::int64_t>(n_windows); ++wi) {
      const int wr = rows[static_cast<std::size_t>(wi) / cols.size()];
      const int wc = cols[static_cast<std::size_t>(wi) % cols.size()];
      int k = 0;
      for (int r = wr - half; r <= wr + half; ++r) {
        for (int c = wc - half; c <= wc + half; ++c, ++k) {
          bt[k] = t.at(r, c);
          btx[k] = tx.at(r, c);
          bty[k] = ty.at(r, c);
          btz[k] = tz.at(r, c);
          bx[k] = g.cell_x(c);
          by[k] = g.cell_y(r);
        }
      }
      const double cx = g.cell_x(wc);
      const double cy = g.cell_y(wr);
      Candidate& cand = candidates[static_cast<std::size_t>(wi)];
      for (double si : config.si_set) {
        const WindowCore core = solve_core(bt, btx, bty, btz, bx, by, cx, cy, si);
        if (core.degenerate) continue;
        if (!cand.valid || core.solution.rms < cand.sol.rms) {
          cand.sol = core.solution;
          cand.si = si;
          cand.valid = true;
        }
      }
    }
  }

  // Serial acceptance pass in window order keeps output and tallies
  // schedule-independent.
  SolutionSet set;
  set.config = config;
  set.rejected_counts = {{"rms", 0}, {"depth_range", 0}, {"uncertainty", 0}, {"degenerate", 0}};
  for (std::size_t wi = 0; wi < n_windows; ++wi) {
    const Candidate& cand = candidates[wi];
    if (!cand.valid) {
      set.rejected_counts["degenerate"]++;
      continue;
    }
    if (cand.sol.rms > config.rms_accept) {
      set.rejected_counts["rms"]++;
      continue;
    }
    if (!(cand.sol.z0 > 0.0) || cand.sol.z0 > config.max_depth) {
      set.rejected_counts["depth_range"]++;
      continue;
    }
    if (cand.sol.sigma_z / cand.sol.z0 > config.depth_uncertainty_max) {
      set.rejected_counts["uncertainty"]++;
      continue;
    }
    EulerSolution s;
    s.x0 = cand.sol.x0;
    s.y0 = cand.sol.y0;
    s.z0 = cand.sol.z0;
    s.si = cand.si;
    s.base = cand.sol.base;
    s.rms = cand.sol.rms;
    s.sigma_z = cand.sol.sigma_z;
    s.window_row = rows[wi / cols.size()];
    s.window_col = cols[wi % cols.size()];
    set.solutions.push_back(s);
  }
  return set;
}

SolutionSet filter_cluster(const SolutionSet& set, double radius,
                           std::vector<std::size_t>* cluster_sizes) {
  if (!(radius > 0.0)) throw ConfigError("filter_cluster: radius must be > 0");
  SolutionSet out;
  out.config = set.config;
  out.grid_id = set.grid_id;
  out.rejected_counts = set.rejected_counts;
  std::vector<std::size_t> sizes;
  const double r2 = radius * radius;
  for (const EulerSolution& s : set.solutions) {
    bool joined = false;
    for (std::size_t ci = 0; ci < out.solutions.size(); ++ci) {
      EulerSolution& rep = out.solutions[ci];
      const double dx = s.x0 - rep.x0;
      const double dy = s.y0 - rep.y0;
      if (dx * dx + dy * dy <= r2 && std::abs(s.z0 - rep.z0) <= radius) {
        sizes[ci]++;
        if (s.rms < rep.rms) rep = s;
        joined = true;
        break;
      }
    }
    if (!joined) {
      out.solutions.push_back(s);
      sizes.push_back(1);
    }
  }
  if (cluster_sizes) *cluster_sizes = std::move(sizes);
  return out;
}

void write_solutions_csv(const SolutionSet& set, std::ostream& out) {
  out << "x0,y0,z0,si,base,rms,sigma_z,window_row,window_col\n";
  for (const EulerSolution& s : set.solutions) {
    out << fmt17(s.x0) << ',' << fmt17(s.y0) << ',' << fmt17(s.z0) << ','
        << fmt17(s.si) << ',' << fmt17(s.base) << ',' << fmt17(s.rms) << ','
        << fmt17(s.sigma_z) << ',' << s.window_row << ',' << s.window_col << '\n';
  }
}

void write_solutions_csv_file(const SolutionSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open solutions file for writing: " + path);
  write_solutions_csv(set, out);
}

SolutionSet read_solutions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("EmptyInput: no solutions header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x0,y0,z0,si,base,rms,sigma_z,window_row,window_col")
    throw DataError("HeaderMismatch: unexpected solutions CSV header");

  SolutionSet set;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, 9> f{};
    std::size_t pos = 0;
    for (int i = 0; i < 9; ++i) {
      const std::size_t comma = line.find(',', pos);
      const std::string token =
          line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const char* first = token.data();
      auto [p, ec] = std::from_chars(first, first + token.size(), f[i]);
      if (ec != std::errc() || p != first + token.size())
        throw DataError("MalformedRow: solutions CSV line " + std::to_string(line_no));
      if (comma == std::string::npos && i < 8)
        throw DataError("MalformedRow: solutions CSV line " + std::to_string(line_no));
      pos = comma + 1;
    }
    EulerSolution s;
    s.x0 = f[0];
    s.y0 = f[1];
    s.z0 = f[2];
    s.si = f[3];
    s.base = f[4];
    s.rms = f[5];
    s.sigma_z = f[6];
    s.window_row = static_cast<int>(f[7]);
    s.window_col = static_cast<int>(f[8]);
    set.solutions.push_back(s);
  }
  return set;
}

SolutionSet read_solutions_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open solutions file: " + path);
  return read_solutions_csv(in);
}

std::string solution_provenance_json(const SolutionSet& set) {
  nlohmann::json j;
  j["config"] = {{"window_size", set.config.window_size},
                 {"si_set", set.config.si_set},
                 {"rms_accept", set.config.rms_accept},
                 {"max_depth", set.config.max_depth},
                 {"depth_uncertainty_max", set.config.depth_uncertainty_max},
                 {"window_step", set.config.window_step}};
  j["grid_id"] = set.grid_id;
  j["rejected_counts"] = set.rejected_counts;
  j["n_solutions"] = set.solutions.size();
  return j.dump(2) + "\n";
}

}  // namespace aeromag
