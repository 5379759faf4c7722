#include "aeromag/filters.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

namespace aeromag {

namespace {

constexpr double kPi = std::numbers::pi;

// fftw planning is not thread-safe; execution of distinct plans is.
std::mutex g_fftw_mutex;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

enum class SpectralOp { continue_up, deriv_x, deriv_y, deriv_z, lowpass };

void require_unmasked(const Grid& grid, const char* op) {
  if (grid.any_masked())
    throw DataError(std::string("MaskedInput: ") + op +
                    " requires a fully unmasked grid (fill_nodata_nearest first)");
}

int mirror_mod(int t, int n) {
  const int period = 2 * n;
  int u = t % period;
  if (u < 0) u += period;
  return u < n ? u : period - 1 - u;
}

// Shared backbone: remove the best-fit plane, embed the residual centered in
// a power-of-two square with mirrored extension (the data frame itself is
// untouched), roll the extension to zero outside the frame, apply the
// wavenumber multiplier, crop. The caller adds the plane term appropriate to
// the operator back in.
Grid spectral_apply(const Grid& grid, const SpectralPlan& plan, SpectralOp op,
                    double param) {
  const GridGeoref& g = grid.georef;
  const int nr = g.n_rows, nc = g.n_cols;
  const int pad = next_pow2(static_cast<int>(
      std::ceil(plan.pad_factor * static_cast<double>(std::max(nr, nc)))));

  const DetrendResult plane = detrend_poly(grid, 1);

  const int oy = (pad - nr) / 2;
  const int ox = (pad - nc) / 2;
  const int ramp = std::min({static_cast<int>(std::floor(plan.taper * pad)),
                             oy > 0 ? oy : 0, ox > 0 ? ox : 0});
  auto skirt = [&](int outside) {
    if (outside <= 0) return 1.0;
    if (ramp < 1 || outside >= ramp) return 0.0;
    return 0.5 * (1.0 + std::cos(kPi * outside / ramp));
  };

  std::vector<double> real(static_cast<std::size_t>(pad) * pad, 0.0);
  for (int i = 0; i < pad; ++i) {
    const int out_y = (i < oy) ? oy - i : (i >= oy + nr ? i - (oy + nr - 1) : 0);
    const double wy = skirt(out_y);
    if (wy == 0.0) continue;
    const int mr = mirror_mod(i - oy, nr);
    for (int j = 0; j < pad; ++j) {
      const int out_x = (j < ox) ? ox - j : (j >= ox + nc ? j - (ox + nc - 1) : 0);
      const double w = wy * skirt(out_x);
      if (w == 0.0) continue;
      const int mc = mirror_mod(j - ox, nc);
      real[static_cast<std::size_t>(i) * pad + j] = w * plane.residual.at(mr, mc);
    }
  }

  const int nk = pad / 2 + 1;
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(pad) * nk);
  {
    std::scoped_lock lock(g_fftw_mutex);
    fftw_plan fwd = fftw_plan_dft_r2c_2d(
        pad, pad, real.data(), reinterpret_cast<fftw_complex*>(spec.data()),
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);
  }

  const double dk = 2.0 * kPi / (pad * g.cell_size);
  for (int i = 0; i < pad; ++i) {
    const double ky = dk * (i <= pad / 2 ? i : i - pad);
    for (int j = 0; j < nk; ++j) {
      const double kx = dk * j;
      std::complex<double>& v = spec[static_cast<std::size_t>(i) * nk + j];
      switch (op) {
        case SpectralOp::continue_up:
          v *= std::exp(-std::hypot(kx, ky) * param);
          break;
        case SpectralOp::deriv_z:
          v *= std::hypot(kx, ky);
          break;
        case SpectralOp::deriv_x:
          // Nyquist column has no Hermitian-consistent odd derivative.
          v = (j == pad / 2) ? std::complex<double>(0.0)
                             : v * std::complex<double>(0.0, kx);
          break;
        case SpectralOp::deriv_y:
          v = (i == pad / 2) ? std::complex<double>(0.0)
                             : v * std::complex<double>(0.0, ky);
          break;
        case SpectralOp::lowpass: {
          const double k = std::hypot(kx, ky);
          const double kc = 2.0 * kPi / param;
          const double k1 = 0.5 * kc;
          double h = 1.0;
          if (k >= kc) h = 0.0;
          else if (k > k1) h = 0.5 * (1.0 + std::cos(kPi * (k - k1) / (kc - k1)));
          v *= h;
          break;
        }
      }
    }
  }

  {
    std::scoped_lock lock(g_fftw_mutex);
    fftw_plan bwd = fftw_plan_dft_c2r_2d(
        pad, pad, reinterpret_cast<fftw_complex*>(spec.data()), real.data(),
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_execute(bwd);
    fftw_destroy_plan(bwd);
  }

  const double scale = 1.0 / (static_cast<double>(pad) * pad);
  Grid out(g);
  out.units_label = grid.units_label;
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c)
      out.at(r, c) = real[static_cast<std::size_t>(r + oy) * pad + (c + ox)] * scale;

  // Add the plane's contribution under the operator: planes pass through
  // continuation and lowpass unchanged, and have constant derivatives.
  for (int r = 0; r < nr; ++r) {
    const double y = g.cell_y(r);
    for (int c = 0; c < nc; ++c) {
      const double x = g.cell_x(c);
      switch (op) {
        case SpectralOp::continue_up:
        case SpectralOp::lowpass:
          out.at(r, c) += plane.surface.evaluate(x, y);
          break;
        case SpectralOp::deriv_x:
          out.at(r, c) += plane.surface.coeffs[1];
          break;
        case SpectralOp::deriv_y:
          out.at(r, c) += plane.surface.coeffs[2];
          break;
        case SpectralOp::deriv_z:
          break;
      }
    }
  }
  return out;
}

}  // namespace

void SpectralPlan::validate() const {
  if (!(pad_factor >= 1.0)) throw ConfigError("spectral plan: pad_factor must be >= 1");
  if (taper < 0.0 || taper > 0.5)
    throw ConfigError("spectral plan: taper must be in [0, 0.5]");
}

DetrendResult detrend_poly(const Grid& grid, int degree) {
  if (degree < 0 || degree > 2) throw ConfigError("detrend_poly: degree must be 0, 1 or 2");
  const GridGeoref& g = grid.georef;
  const int n_terms = (degree + 1) * (degree + 2) / 2;

  // Scaled local coordinates keep the normal equations well conditioned at
  // UTM magnitudes.
  const double xc = g.x_origin + 0.5 * g.width();
  const double yc = g.y_origin + 0.5 * g.height();
  const double sx = std::max(0.5 * g.width(), 1.0);
  const double sy = std::max(0.5 * g.height(), 1.0);

  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(n_terms, n_terms);
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(n_terms);
  std::size_t n_used = 0;
  double terms[6];
  for (int r = 0; r < g.n_rows; ++r) {
    const double v = (g.cell_y(r) - yc) / sy;
    for (int c = 0; c < g.n_cols; ++c) {
      if (grid.masked(r, c)) continue;
      const double u = (g.cell_x(c) - xc) / sx;
      terms[0] = 1.0;
      if (degree >= 1) {
        terms[1] = u;
        terms[2] = v;
      }
      if (degree >= 2) {
        terms[3] = u * u;
        terms[4] = u * v;
        terms[5] = v * v;
      }
      for (int a = 0; a < n_terms; ++a) {
        for (int b = a; b < n_terms; ++b) ata(a, b) += terms[a] * terms[b];
        atb(a) += terms[a] * grid.at(r, c);
      }
      ++n_used;
    }
  }
  if (n_used <= static_cast<std::size_t>(n_terms))
    throw DataError("detrend_poly: fewer unmasked cells than polynomial terms");
  for (int a = 0; a < n_terms; ++a)
    for (int b = 0; b < a; ++b) ata(a, b) = ata(b, a);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(ata);
  if (!lu.isInvertible())
    throw NumericalError("RankDeficient: unmasked cells are degenerate for degree " +
                         std::to_string(degree));
  const Eigen::VectorXd coef = lu.solve(atb);

  // Expand scaled-frame monomials into world-frame [1, x, y, x^2, xy, y^2].
  PolySurface surface;
  surface.degree = degree;
  const double c00 = coef(0);
  const double c10 = degree >= 1 ? coef(1) : 0.0;
  const double c01 = degree >= 1 ? coef(2) : 0.0;
  const double c20 = degree >= 2 ? coef(3) : 0.0;
  const double c11 = degree >= 2 ? coef(4) : 0.0;
  const double c02 = degree >= 2 ? coef(5) : 0.0;
  surface.coeffs[0] = c00 - c10 * xc / sx - c01 * yc / sy + c20 * xc * xc / (sx * sx) +
                      c11 * xc * yc / (sx * sy) + c02 * yc * yc / (sy * sy);
  surface.coeffs[1] = c10 / sx - 2.0 * c20 * xc / (sx * sx) - c11 * yc / (sx * sy);
  surface.coeffs[2] = c01 / sy - 2.0 * c02 * yc / (sy * sy) - c11 * xc / (sx * sy);
  surface.coeffs[3] = c20 / (sx * sx);
  surface.coeffs[4] = c11 / (sx * sy);
  surface.coeffs[5] = c02 / (sy * sy);

  DetrendResult result{Grid(g), surface};
  result.residual.units_label = grid.units_label;
  for (int r = 0; r < g.n_rows; ++r) {
    for (int c = 0; c < g.n_cols; ++c) {
      if (grid.masked(r, c)) {
        result.residual.set_masked(r, c, true);
      } else {
        result.residual.at(r, c) = grid.at(r, c) - surface.evaluate(g.cell_x(c), g.cell_y(r));
      }
    }
  }
  return result;
}

Grid fill_nodata_nearest(const Grid& grid) {
  if (!grid.any_masked()) return grid;
  const GridGeoref& g = grid.georef;
  if (grid.masked_count() == grid.size())
    throw DataError("fill_nodata_nearest: grid has no unmasked cells");

  Grid out = grid;
#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < g.n_rows; ++row) {
    for (int col = 0; col < g.n_cols; ++col) {
      if (!grid.masked(static_cast<int>(row), col)) continue;
      long best_d2 = -1;
      int best_r = -1, best_c = -1;
      const int rmax = std::max(g.n_rows, g.n_cols);
      for (int ring = 1; ring <= rmax; ++ring) {
        if (best_d2 >= 0 && static_cast<long>(ring) * ring > best_d2) break;
        for (int dr = -ring; dr <= ring; ++dr) {
          const int rr = static_cast<int>(row) + dr;
          if (rr < 0 || rr >= g.n_rows) continue;
          for (int dc = -ring; dc <= ring; ++dc) {
            if (std::max(std::abs(dr), std::abs(dc)) != ring) continue;
            const int cc = col + dc;
            if (cc < 0 || cc >= g.n_cols) continue;
            if (grid.masked(rr, cc)) continue;
            const long d2 = static_cast<long>(dr) * dr + static_cast<long>(dc) * dc;
            if (best_d2 < 0 || d2 < best_d2 ||
                (d2 == best_d2 && (rr < best_r || (rr == best_r && cc < best_c)))) {
              best_d2 = d2;
              best_r = rr;
              best_c = cc;
            }
          }
        }
      }
      out.at(static_cast<int>(row), col) = grid.at(best_r, best_c);
      out.set_masked(static_cast<int>(row), col, false);
    }
  }
  return out;
}

Grid upward_continue(const Grid& grid, double height, const SpectralPlan& plan) {
  plan.validate();
  require_unmasked(grid, "upward_continue");
  if (!(height > 0.0)) throw ConfigError("upward_continue: height must be > 0");
  return spectral_apply(grid, plan, SpectralOp::continue_up, height);
}

Grid derivative(const Grid& grid, Axis axis, const SpectralPlan& plan) {
  plan.validate();
  require_unmasked(grid, "derivative");
  SpectralOp op = SpectralOp::deriv_x;
  if (axis == Axis::y) op = SpectralOp::deriv_y;
  if (axis == Axis::z) op = SpectralOp::deriv_z;
  Grid out = spectral_apply(grid, plan, op, 0.0);
  out.units_label = "nT/m";
  return out;
}

Grid lowpass(const Grid& grid, double cutoff_wavelength, const SpectralPlan& plan) {
  plan.validate();
  require_unmasked(grid, "lowpass");
  if (cutoff_wavelength < 2.0 * grid.georef.cell_size)
    throw ConfigError("CutoffBelowNyquist: cutoff_wavelength must be >= 2 * cell_size");
  return spectral_apply(grid, plan, SpectralOp::lowpass, cutoff_wavelength);
}

}  // namespace aeromag
