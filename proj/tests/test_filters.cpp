#include <doctest.h>

#include <cmath>
#include <numbers>

#include "aeromag/filters.hpp"
#include "aeromag/synthetics.hpp"
#include "testutil.hpp"

using namespace aeromag;

namespace {

// Relative L2 difference over the interior fraction of rows and columns.
double rel_l2_interior(const Grid& got, const Grid& expected, double interior = 0.8) {
  const GridGeoref& g = got.georef;
  const int r0 = static_cast<int>(g.n_rows * (1.0 - interior) / 2.0);
  const int c0 = static_cast<int>(g.n_cols * (1.0 - interior) / 2.0);
  double num = 0.0, den = 0.0;
  for (int r = r0; r < g.n_rows - r0; ++r) {
    for (int c = c0; c < g.n_cols - c0; ++c) {
      const double d = got.at(r, c) - expected.at(r, c);
      num += d * d;
      den += expected.at(r, c) * expected.at(r, c);
    }
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

Grid random_grid(const GridGeoref& g, std::uint64_t seed) {
  Grid grid(g);
  SeededRng rng(seed);
  for (double& v : grid.values) v = rng.next_uniform(-10.0, 10.0);
  return grid;
}

}  // namespace

TEST_SUITE("filters") {

TEST_CASE("detrend recovers an exact plane") {
  GridGeoref g{100000.0, 7000000.0, 100.0, 40, 30};
  Grid grid(g);
  const double a = 150.0, b = 0.02, c = -0.013;
  double lo = 1e300, hi = -1e300;
  for (int r = 0; r < g.n_rows; ++r)
    for (int col = 0; col < g.n_cols; ++col) {
      grid.at(r, col) = a + b * g.cell_x(col) + c * g.cell_y(r);
      lo = std::min(lo, grid.at(r, col));
      hi = std::max(hi, grid.at(r, col));
    }
  const DetrendResult result = detrend_poly(grid, 1);
  CHECK(result.surface.coeffs[0] == doctest::Approx(a).epsilon(1e-9));
  CHECK(result.surface.coeffs[1] == doctest::Approx(b).epsilon(1e-9));
  CHECK(result.surface.coeffs[2] == doctest::Approx(c).epsilon(1e-9));
  for (double v : result.residual.values) CHECK(std::abs(v) <= 1e-9 * (hi - lo));
}

TEST_CASE("detrend degree 0 of a constant grid is zero") {
  GridGeoref g{0.0, 0.0, 100.0, 8, 8};
  Grid grid(g, 5.0);
  const DetrendResult result = detrend_poly(grid, 0);
  for (double v : result.residual.values) CHECK(v == 0.0);
  CHECK(result.surface.coeffs[0] == 5.0);
}

TEST_CASE("detrend recovers a quadratic surface") {
  GridGeoref g{-500.0, 800.0, 25.0, 30, 30};
  Grid grid(g);
  const double w[6] = {3.0, 0.01, -0.02, 1e-4, -2e-4, 3e-4};
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c) {
      const double x = g.cell_x(c), y = g.cell_y(r);
      grid.at(r, c) = w[0] + w[1] * x + w[2] * y + w[3] * x * x + w[4] * x * y + w[5] * y * y;
    }
  const DetrendResult result = detrend_poly(grid, 2);
  for (int i = 0; i < 6; ++i)
    CHECK(result.surface.coeffs[i] == doctest::Approx(w[i]).epsilon(1e-7));
}

TEST_CASE("detrend recovers the plane under a centered dipole anomaly") {
  GridGeoref g{0.0, 0.0, 100.0, 128, 128};
  const double a = 1000.0, b = 0.05, c = -0.03;
  DipoleSource src{g.cell_x(64), g.cell_y(64), 500.0, 1e6, 90.0, 0.0};
  Grid grid = synth_dipole(src, g, 90.0, 0.0);
  for (int r = 0; r < g.n_rows; ++r)
    for (int col = 0; col < g.n_cols; ++col)
      grid.at(r, col) += a + b * g.cell_x(col) + c * g.cell_y(r);
  const DetrendResult result = detrend_poly(grid, 1);
  CHECK(result.surface.coeffs[0] == doctest::Approx(a).epsilon(1e-3));
  CHECK(result.surface.coeffs[1] == doctest::Approx(b).epsilon(1e-3));
  CHECK(result.surface.coeffs[2] == doctest::Approx(c).epsilon(1e-3));
}

TEST_CASE("detrend rank deficiency and precondition errors") {
  GridGeoref g{0.0, 0.0, 100.0, 6, 6};
  Grid grid(g, 1.0);
  for (int r = 1; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c) grid.set_masked(r, c, true);
  // Only one row unmasked: y is constant, degree 1 cannot be fit.
  CHECK_THROWS_AS(detrend_poly(grid, 1), NumericalError);

  Grid tiny(g, 1.0);
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c)
      if (r + c > 0) tiny.set_masked(r, c, true);
  CHECK_THROWS_AS(detrend_poly(tiny, 0), DataError);
}

TEST_CASE("fill_nodata_nearest uses the nearest unmasked value") {
  GridGeoref g{0.0, 0.0, 100.0, 5, 5};
  Grid grid(g);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) grid.at(r, c) = r * 10.0 + c;
  grid.set_masked(2, 2, true);
  grid.set_masked(0, 4, true);
  const Grid filled = fill_nodata_nearest(grid);
  CHECK_FALSE(filled.any_masked());
  // (2,2) ties among the four direct neighbors; smallest row then column.
  CHECK(filled.at(2, 2) == grid.at(1, 2));
  CHECK(filled.at(0, 4) == grid.at(0, 3));
  Grid all_masked(g);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) all_masked.set_masked(r, c, true);
  CHECK_THROWS_AS(fill_nodata_nearest(all_masked), DataError);
}

TEST_CASE("upward continuation leaves a constant grid unchanged") {
  GridGeoref g{0.0, 0.0, 100.0, 32, 32};
  Grid grid(g, 77.5);
  const Grid out = upward_continue(grid, 250.0);
  for (double v : out.values) CHECK(v == doctest::Approx(77.5).epsilon(1e-12));
}

TEST_CASE("upward continuation satisfies the semigroup property") {
  // Diagonal configuration (power-of-two frame, no padding) where the
  // operator identity e^(-kh) * e^(-kh) = e^(-2kh) is exact; windowed
  // re-embedding between applications would otherwise perturb the edges.
  GridGeoref g{0.0, 0.0, 100.0, 128, 128};
  const SpectralPlan plain{1.0, 0.0};
  HomogeneousSource src{6400.0, 6400.0, 300.0, 1e8, 2.0, 0.0};
  const Grid field = synth_homogeneous(src, g);
  const Grid twice = upward_continue(upward_continue(field, 100.0, plain), 100.0, plain);
  const Grid once = upward_continue(field, 200.0, plain);
  CHECK(rel_l2_interior(twice, once) <= 1e-6);
}

// The N=1 member of the homogeneous family is the monopole potential field,
// so continuation is exactly a depth shift for it.
TEST_CASE("upward continuation matches the analytic field above the source") {
  GridGeoref g{0.0, 0.0, 100.0, 128, 128};
  HomogeneousSource src{6400.0, 6400.0, 300.0, 1e6, 1.0, 0.0};
  const Grid field = synth_homogeneous(src, g);
  const Grid continued = upward_continue(field, 100.0);
  HomogeneousSource deeper = src;
  deeper.z0 = 400.0;
  const Grid expected = synth_homogeneous(deeper, g);
  CHECK(rel_l2_interior(continued, expected) <= 1e-2);
}

TEST_CASE("upward continuation does not amplify deviations from the mean") {
  GridGeoref g{0.0, 0.0, 100.0, 128, 128};
  HomogeneousSource src{6400.0, 6400.0, 400.0, 1e8, 2.0, 10.0};
  const Grid field = synth_homogeneous(src, g);
  const Grid out = upward_continue(field, 150.0);
  auto max_dev = [](const Grid& grid) {
    double mean = 0.0;
    for (double v : grid.values) mean += v;
    mean /= static_cast<double>(grid.values.size());
    double dev = 0.0;
    for (double v : grid.values) dev = std::max(dev, std::abs(v - mean));
    return dev;
  };
  CHECK(max_dev(out) <= max_dev(field) * (1.0 + 1e-6));
}

TEST_CASE("x-derivative of a linear ramp is the slope") {
  GridGeoref g{0.0, 0.0, 100.0, 64, 64};
  Grid grid(g);
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c) grid.at(r, c) = 3.0 * g.cell_x(c);
  const Grid dx = derivative(grid, Axis::x);
  const Grid dy = derivative(grid, Axis::y);
  for (int r = 8; r < g.n_rows - 8; ++r)
    for (int c = 8; c < g.n_cols - 8; ++c) {
      CHECK(dx.at(r, c) == doctest::Approx(3.0).epsilon(1e-3));
      CHECK(std::abs(dy.at(r, c)) <= 1e-6 * 3.0 * g.width());
    }
}

// Horizontal spectral derivatives are valid for any boundary field; the |k|
// vertical derivative assumes a potential field, so its oracle is the point
// dipole anomaly (harmonic, fast-decaying, gradients in closed form).
TEST_CASE("spectral derivatives match analytic gradients") {
  const double z0 = 300.0;
  GridGeoref g{0.0, 0.0, z0 / 4.0, 128, 128};
  HomogeneousSource src{g.cell_x(64), g.cell_y(64), z0, 1e8, 2.0, 0.0};
  const FieldWithGradients f = synth_homogeneous_with_gradients(src, g);
  CHECK(rel_l2_interior(derivative(f.t, Axis::x), f.tx) <= 1e-3);
  CHECK(rel_l2_interior(derivative(f.t, Axis::y), f.ty) <= 1e-3);

  DipoleSource dip{g.cell_x(64), g.cell_y(64), z0, 1e6, 90.0, 0.0};
  const Grid t = synth_dipole(dip, g, 90.0, 0.0);
  Grid tz_true(g);
  const double cm = 100.0 * dip.moment;
  for (int r = 0; r < g.n_rows; ++r) {
    for (int c = 0; c < g.n_cols; ++c) {
      const double dx = g.cell_x(c) - dip.x0;
      const double dy = g.cell_y(r) - dip.y0;
      const double rho2 = dx * dx + dy * dy;
      const double w = -dip.z0;
      tz_true.at(r, c) =
          3.0 * cm * w * (3.0 * rho2 - 2.0 * w * w) / std::pow(rho2 + w * w, 3.5);
    }
  }
  CHECK(rel_l2_interior(derivative(t, Axis::z), tz_true) <= 1e-3);
}

TEST_CASE("x and y derivatives commute") {
  // pad_factor 1 on a power-of-two grid makes the operators purely diagonal
  // in the spectral domain, where commutation is exact.
  GridGeoref g{0.0, 0.0, 100.0, 64, 64};
  const SpectralPlan plain{1.0, 0.0};
  Grid field(g);
  SeededRng rng(505);
  for (double& v : field.values) v = rng.next_uniform(-5.0, 5.0);
  const Grid xy = derivative(derivative(field, Axis::x, plain), Axis::y, plain);
  const Grid yx = derivative(derivative(field, Axis::y, plain), Axis::x, plain);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xy.values.size(); ++i) {
    num += (xy.values[i] - yx.values[i]) * (xy.values[i] - yx.values[i]);
    den += yx.values[i] * yx.values[i];
  }
  CHECK(std::sqrt(num / den) <= 1e-9);
}

TEST_CASE("lowpass leaves a constant grid unchanged") {
  GridGeoref g{0.0, 0.0, 100.0, 32, 32};
  Grid grid(g, -12.25);
  const Grid out = lowpass(grid, 1000.0);
  for (double v : out.values) CHECK(v == doctest::Approx(-12.25).epsilon(1e-12));
}

// Band definitions are checked in the periodic configuration, where a
// whole-cycle sinusoid occupies a single spectral bin.
TEST_CASE("lowpass removes stop-band sinusoids") {
  GridGeoref g{0.0, 0.0, 100.0, 128, 128};
  const SpectralPlan plain{1.0, 0.0};
  Grid grid(g);
  const double wavelength = 800.0;  // 16 whole cycles, well below the cutoff
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c)
      grid.at(r, c) = std::sin(2.0 * std::numbers::pi * g.cell_x(c) / wavelength);
  const Grid out = lowpass(grid, 3200.0, plain);
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c) CHECK(std::abs(out.at(r, c)) <= 1e-3);
}

TEST_CASE("lowpass preserves pass-band sinusoids within 2 percent") {
  GridGeoref g{0.0, 0.0, 100.0, 128, 128};
  const SpectralPlan plain{1.0, 0.0};
  Grid grid(g);
  const double cutoff = 800.0;
  const double wavelength = 4.0 * cutoff;  // 4 whole cycles
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c)
      grid.at(r, c) = std::sin(2.0 * std::numbers::pi * g.cell_x(c) / wavelength);
  const Grid out = lowpass(grid, cutoff, plain);
  double max_err = 0.0;
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c)
      max_err = std::max(max_err, std::abs(out.at(r, c) - grid.at(r, c)));
  CHECK(max_err <= 0.02);
}

TEST_CASE("spectral operators are linear") {
  GridGeoref g{0.0, 0.0, 100.0, 32, 32};
  const Grid g1 = random_grid(g, 101);
  const Grid g2 = random_grid(g, 102);
  const double a = 2.75, b = -1.25;
  Grid combo(g);
  for (std::size_t i = 0; i < combo.values.size(); ++i)
    combo.values[i] = a * g1.values[i] + b * g2.values[i];

  auto check_linear = [&](auto op) {
    const Grid lhs = op(combo);
    const Grid r1 = op(g1);
    const Grid r2 = op(g2);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lhs.values.size(); ++i) {
      const double expect = a * r1.values[i] + b * r2.values[i];
      num += (lhs.values[i] - expect) * (lhs.values[i] - expect);
      den += expect * expect;
    }
    CHECK(std::sqrt(num / std::max(den, 1e-300)) <= 1e-9);
  };
  check_linear([](const Grid& x) { return upward_continue(x, 150.0); });
  check_linear([](const Grid& x) { return derivative(x, Axis::x); });
  check_linear([](const Grid& x) { return derivative(x, Axis::z); });
  check_linear([](const Grid& x) { return lowpass(x, 500.0); });
  check_linear([](const Grid& x) { return detrend_poly(x, 1).residual; });
}

TEST_CASE("filters keep the georef and reject bad inputs") {
  GridGeoref g{5.0, -5.0, 25.0, 16, 16};
  Grid grid = random_grid(g, 103);
  CHECK(upward_continue(grid, 10.0).georef == g);
  CHECK(derivative(grid, Axis::y).georef == g);
  CHECK(lowpass(grid, 100.0).georef == g);

  Grid masked = grid;
  masked.set_masked(3, 3, true);
  CHECK_THROWS_AS(upward_continue(masked, 10.0), DataError);
  CHECK_THROWS_AS(derivative(masked, Axis::x), DataError);
  CHECK_THROWS_AS(lowpass(masked, 100.0), DataError);
  CHECK_THROWS_AS(lowpass(grid, 49.0), ConfigError);      // below Nyquist
  CHECK_THROWS_AS(upward_continue(grid, -5.0), ConfigError);
  SpectralPlan bad_plan;
  bad_plan.taper = 0.7;
  CHECK_THROWS_AS(upward_continue(grid, 10.0, bad_plan), ConfigError);
}

}  // TEST_SUITE
