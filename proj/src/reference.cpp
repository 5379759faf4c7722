#include "aeromag/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aeromag::reference {

std::vector<double> nn_distances_brute(std::span<const double> xs,
                                       std::span<const double> ys) {
  const std::size_t n = xs.size();
  std::vector<double> out(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = xs[j] - xs[i];
      const double dy = ys[j] - ys[i];
      best = std::min(best, dx * dx + dy * dy);
    }
    out[i] = std::sqrt(best);
  }
  return out;
}

Grid grid_nearest_brute(const SurveyPointSet& points, const GridGeoref& georef,
                        double max_radius) {
  georef.validate();
  Grid grid(georef);
  const double limit2 = max_radius * max_radius;
  for (int row = 0; row < georef.n_rows; ++row) {
    for (int col = 0; col < georef.n_cols; ++col) {
      const double cx = georef.cell_x(col);
      const double cy = georef.cell_y(row);
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_i = 0;
      bool found = false;
      for (std::size_t i = 0; i < points.points.size(); ++i) {
        const double dx = points.points[i].x - cx;
        const double dy = points.points[i].y - cy;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best || (d2 == best && found && i < best_i)) {
          best = d2;
          best_i = i;
          found = true;
        }
      }
      if (found && best <= limit2) {
        grid.at(row, col) = points.points[best_i].value;
      } else {
        grid.set_masked(row, col, true);
      }
    }
  }
  return grid;
}

std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (a[pivot * n + col] == 0.0)
      throw NumericalError("solve_dense: singular matrix");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
      std::swap(b[pivot], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
    x[r] = s / a[r * n + r];
  }
  return x;
}

Grid grid_kriging_serial(const SurveyPointSet& points, const GridGeoref& georef,
                         const VariogramModel& variogram, int neighborhood) {
  georef.validate();
  variogram.validate();

  std::vector<double> xs, ys, zs;
  for (const SurveyPoint& p : points.points) {
    bool dup = false;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (xs[i] == p.x && ys[i] == p.y) dup = true;
    if (!dup) {
      xs.push_back(p.x);
      ys.push_back(p.y);
      zs.push_back(p.value);
    }
  }
  if (xs.size() < 2) throw DataError("grid_kriging_serial: need 2 distinct points");
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(neighborhood), xs.size());

  Grid grid(georef);
  std::vector<std::pair<double, std::size_t>> order(xs.size());
  for (int row = 0; row < georef.n_rows; ++row) {
    for (int col = 0; col < georef.n_cols; ++col) {
      const double cx = georef.cell_x(col);
      const double cy = georef.cell_y(row);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - cx;
        const double dy = ys[i] - cy;
        order[i] = {dx * dx + dy * dy, i};
      }
      std::sort(order.begin(), order.end());

      std::vector<double> m((k + 1) * (k + 1), 0.0), rhs(k + 1, 0.0);
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double dx = xs[order[i].second] - xs[order[j].second];
          const double dy = ys[order[i].second] - ys[order[j].second];
          m[i * (k + 1) + j] = variogram.covariance(std::sqrt(dx * dx + dy * dy));
        }
        m[i * (k + 1) + k] = 1.0;
        m[k * (k + 1) + i] = 1.0;
        rhs[i] = variogram.covariance(std::sqrt(order[i].first));
      }
      rhs[k] = 1.0;
      try {
        const std::vector<double> w = solve_dense(m, rhs);
        double value = 0.0;
        for (std::size_t i = 0; i < k; ++i) value += w[i] * zs[order[i].second];
        grid.at(row, col) = value;
      } catch (const NumericalError&) {
        grid.set_masked(row, col, true);
      }
    }
  }
  return grid;
}

SolutionSet euler_sweep_serial(const Grid& t, const Grid& tx, const Grid& ty,
                               const Grid& tz, const EulerConfig& config) {
  config.validate();
  const GridGeoref& g = t.georef;
  const int w = config.window_size;
  const int half = w / 2;
  const int w2 = w * w;

  SolutionSet set;
  set.config = config;
  set.rejected_counts = {{"rms", 0}, {"depth_range", 0}, {"uncertainty", 0}, {"degenerate", 0}};
  std::vector<double> bt(w2), btx(w2), bty(w2), btz(w2), bx(w2), by(w2);
  for (int wr = half; wr + half < g.n_rows; wr += config.window_step) {
    for (int wc = half; wc + half < g.n_cols; wc += config.window_step) {
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
      bool have = false;
      WindowSolution best{};
      double best_si = 0.0;
      for (double si : config.si_set) {
        try {
          const WindowSolution sol = solve_window(bt, btx, bty, btz, bx, by, si);
          if (!have || sol.rms < best.rms) {
            best = sol;
            best_si = si;
            have = true;
          }
        } catch (const NumericalError&) {
        }
      }
      if (!have) {
        set.rejected_counts["degenerate"]++;
      } else if (best.rms > config.rms_accept) {
        set.rejected_counts["rms"]++;
      } else if (!(best.z0 > 0.0) || best.z0 > config.max_depth) {
        set.rejected_counts["depth_range"]++;
      } else if (best.sigma_z / best.z0 > config.depth_uncertainty_max) {
        set.rejected_counts["uncertainty"]++;
      } else {
        EulerSolution s;
        s.x0 = best.x0;
        s.y0 = best.y0;
        s.z0 = best.z0;
        s.si = best_si;
        s.base = best.base;
        s.rms = best.rms;
        s.sigma_z = best.sigma_z;
        s.window_row = wr;
        s.window_col = wc;
        set.solutions.push_back(s);
      }
    }
  }
  return set;
}

}  // namespace aeromag::reference
