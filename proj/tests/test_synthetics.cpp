#include <doctest.h>

#include <cmath>

#include "aeromag/synthetics.hpp"
#include "testutil.hpp"

using namespace aeromag;

TEST_SUITE("synthetics") {

TEST_CASE("homogeneous field value at the apex") {
  GridGeoref g{0.0, 0.0, 100.0, 9, 9};
  HomogeneousSource src{g.cell_x(4), g.cell_y(4), 250.0, 5e6, 1.5, 12.0};
  const Grid grid = synth_homogeneous(src, g);
  const double expected = src.base + src.amplitude * std::pow(src.z0, -src.si);
  CHECK(grid.at(4, 4) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("peak value arithmetic for the N=2 source") {
  GridGeoref g{0.0, 0.0, 100.0, 9, 9};
  HomogeneousSource src{g.cell_x(4), g.cell_y(4), 200.0, 1e8, 2.0, 0.0};
  const Grid grid = synth_homogeneous(src, g);
  CHECK(grid.at(4, 4) == doctest::Approx(2500.0).epsilon(1e-12));
}

TEST_CASE("peak lies at the cell nearest the source") {
  GridGeoref g{0.0, 0.0, 100.0, 32, 32};
  HomogeneousSource src{1234.0, 2111.0, 300.0, 1e8, 2.0, 0.0};
  const Grid grid = synth_homogeneous(src, g);
  int best_r = 0, best_c = 0;
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c)
      if (grid.at(r, c) > grid.at(best_r, best_c)) {
        best_r = r;
        best_c = c;
      }
  CHECK(g.cell_x(best_c) == doctest::Approx(1250.0));
  CHECK(g.cell_y(best_r) == doctest::Approx(2150.0));
}

TEST_CASE("analytic gradients agree with central finite differences") {
  GridGeoref g{0.0, 0.0, 100.0, 10, 10};
  HomogeneousSource src{480.0, 510.0, 220.0, 3e7, 2.5, 5.0};
  const FieldWithGradients f = synth_homogeneous_with_gradients(src, g);
  const double h = 1e-3;
  auto field_at = [&](double x, double y, double z) {
    const double r2 = (x - src.x0) * (x - src.x0) + (y - src.y0) * (y - src.y0) +
                      (z - src.z0) * (z - src.z0);
    return src.base + src.amplitude * std::pow(r2, -0.5 * src.si);
  };
  for (int r = 0; r < g.n_rows; ++r) {
    for (int c = 0; c < g.n_cols; ++c) {
      const double x = g.cell_x(c), y = g.cell_y(r);
      const double fd_x = (field_at(x + h, y, 0) - field_at(x - h, y, 0)) / (2 * h);
      const double fd_y = (field_at(x, y + h, 0) - field_at(x, y - h, 0)) / (2 * h);
      const double fd_z = (field_at(x, y, h) - field_at(x, y, -h)) / (2 * h);
      CHECK(f.tx.at(r, c) == doctest::Approx(fd_x).epsilon(1e-6));
      CHECK(f.ty.at(r, c) == doctest::Approx(fd_y).epsilon(1e-6));
      CHECK(f.tz.at(r, c) == doctest::Approx(fd_z).epsilon(1e-6));
    }
  }
}

TEST_CASE("homogeneous field satisfies the Euler relation exactly") {
  GridGeoref g{0.0, 0.0, 100.0, 24, 24};
  for (double si : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    HomogeneousSource src{1150.0, 1250.0, 300.0, 1e7, si, 40.0};
    const FieldWithGradients f = synth_homogeneous_with_gradients(src, g);
    for (int r = 0; r < g.n_rows; ++r) {
      for (int c = 0; c < g.n_cols; ++c) {
        const double x = g.cell_x(c), y = g.cell_y(r);
        const double lhs = (x - src.x0) * f.tx.at(r, c) + (y - src.y0) * f.ty.at(r, c) +
                           (0.0 - src.z0) * f.tz.at(r, c);
        const double rhs = si * (src.base - f.t.at(r, c));
        CHECK(std::abs(lhs - rhs) <= 1e-9 * std::abs(rhs) + 1e-12);
      }
    }
  }
}

TEST_CASE("vertical dipole in a vertical field is rotationally symmetric") {
  GridGeoref g{0.0, 0.0, 100.0, 21, 21};
  DipoleSource src{g.cell_x(10), g.cell_y(10), 400.0, 5e4, 90.0, 0.0};
  const Grid grid = synth_dipole(src, g, 90.0, 0.0);
  for (int d = 1; d <= 9; ++d) {
    const double a = grid.at(10, 10 + d);
    CHECK(grid.at(10, 10 - d) == doctest::Approx(a).epsilon(1e-12));
    CHECK(grid.at(10 + d, 10) == doctest::Approx(a).epsilon(1e-12));
    CHECK(grid.at(10 - d, 10) == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("dipole anomaly is linear in the moment") {
  GridGeoref g{0.0, 0.0, 50.0, 16, 16};
  DipoleSource one{400.0, 400.0, 200.0, 1e3, 60.0, 30.0};
  DipoleSource two = one;
  two.moment = 2e3;
  const Grid g1 = synth_dipole(one, g, 45.0, 10.0);
  const Grid g2 = synth_dipole(two, g, 45.0, 10.0);
  for (std::size_t i = 0; i < g1.values.size(); ++i)
    CHECK(g2.values[i] == doctest::Approx(2.0 * g1.values[i]).epsilon(1e-12));
}

TEST_CASE("dipole far-field falloff exponent is near 3") {
  const double z0 = 50.0;
  GridGeoref g{0.0, 0.0, 20.0, 128, 128};
  DipoleSource src{g.cell_x(64), g.cell_y(64), z0, 1e6, 90.0, 0.0};
  const Grid grid = synth_dipole(src, g, 90.0, 0.0);

  // Log-log regression of |anomaly| against distance over [10 z0, 20 z0].
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (int r = 0; r < g.n_rows; ++r) {
    for (int c = 0; c < g.n_cols; ++c) {
      const double rho = std::hypot(g.cell_x(c) - src.x0, g.cell_y(r) - src.y0);
      if (rho < 10 * z0 || rho > 20 * z0) continue;
      const double v = std::abs(grid.at(r, c));
      if (v <= 0.0) continue;
      const double lx = std::log(rho), ly = std::log(v);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++n;
    }
  }
  REQUIRE(n > 100);
  const double slope = (static_cast<double>(n) * sxy - sx * sy) /
                       (static_cast<double>(n) * sxx - sx * sx);
  CHECK(-slope > 2.9);
  CHECK(-slope < 3.1);
}

TEST_CASE("dipole validation") {
  DipoleSource bad{0, 0, -1.0, 1.0, 0.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {0, 0, 10.0, 1.0, 120.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {0, 0, 10.0, 1.0, 0.0, 360.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero-sigma noise is the identity") {
  GridGeoref g{0.0, 0.0, 100.0, 8, 8};
  Grid grid(g, 3.25);
  const Grid out = add_noise(grid, 0.0, 99);
  CHECK(out.values == grid.values);
}

TEST_CASE("noise is deterministic per seed and matches the counter stream") {
  GridGeoref g{0.0, 0.0, 100.0, 16, 16};
  Grid grid(g, 100.0);
  const Grid a = add_noise(grid, 2.0, 1234);
  const Grid b = add_noise(grid, 2.0, 1234);
  CHECK(a.values == b.values);
  const Grid c = add_noise(grid, 2.0, 1235);
  CHECK(a.values != c.values);

  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const double expected = 100.0 + 2.0 * counter_gaussian(1234, i);
    CHECK(a.values[i] == expected);
  }
}

TEST_CASE("noise preserves the nodata mask") {
  GridGeoref g{0.0, 0.0, 100.0, 4, 4};
  Grid grid(g, 10.0);
  grid.set_masked(1, 1, true);
  const Grid out = add_noise(grid, 5.0, 7);
  CHECK(out.masked(1, 1));
  CHECK(out.at(1, 1) == 10.0);
  CHECK(out.at(0, 0) != 10.0);
}

TEST_CASE("unit-sigma noise has unit sample deviation at scale") {
  GridGeoref g{0.0, 0.0, 100.0, 256, 256};
  Grid grid(g, 0.0);
  const Grid noisy = add_noise(grid, 1.0, 2024);
  double mean = 0.0;
  for (double v : noisy.values) mean += v;
  mean /= static_cast<double>(noisy.values.size());
  double var = 0.0;
  for (double v : noisy.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(noisy.values.size() - 1);
  const double sd = std::sqrt(var);
  CHECK(sd > 0.97);
  CHECK(sd < 1.03);
}

}  // TEST_SUITE
