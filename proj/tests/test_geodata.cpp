#include <doctest.h>

#include <cmath>
#include <sstream>

#include "aeromag/geodata.hpp"
#include "aeromag/reference.hpp"
#include "testutil.hpp"

using namespace aeromag;

TEST_SUITE("geodata") {

TEST_CASE("load_points parses rows in order") {
  std::istringstream in("x,y,tmi\n0,0,100\n100,0,101\n");
  const SurveyPointSet set = load_points(in);
  REQUIRE(set.points.size() == 2);
  CHECK(set.duplicate_count == 0);
  CHECK(set.points[0].x == 0.0);
  CHECK(set.points[0].value == 100.0);
  CHECK(set.points[1].x == 100.0);
  CHECK(set.points[1].value == 101.0);
}

TEST_CASE("load_points flags duplicate coordinates") {
  std::istringstream in("x,y,tmi\n0,0,1\n0,0,2\n");
  const SurveyPointSet set = load_points(in);
  CHECK(set.points.size() == 2);
  CHECK(set.duplicate_count == 1);
}

TEST_CASE("load_points accepts reordered and extra columns, CRLF") {
  std::istringstream in("id,tmi,y,x\r\n7,5.5,20,10\r\n");
  const SurveyPointSet set = load_points(in);
  REQUIRE(set.points.size() == 1);
  CHECK(set.points[0].x == 10.0);
  CHECK(set.points[0].y == 20.0);
  CHECK(set.points[0].value == 5.5);
}

TEST_CASE("load_points error paths") {
  std::istringstream malformed("x,y,tmi\n1,abc,3\n");
  CHECK_THROWS_AS(load_points(malformed), DataError);
  std::istringstream empty("x,y,tmi\n");
  CHECK_THROWS_AS(load_points(empty), DataError);
  std::istringstream nonfinite("x,y,tmi\n1,2,nan\n");
  CHECK_THROWS_AS(load_points(nonfinite), DataError);
  std::istringstream badheader("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(load_points(badheader), DataError);
}

TEST_CASE("points CSV round trip is value-exact") {
  const SurveyPointSet original = testutil::random_points(1000, 10000.0, 11);
  std::ostringstream out;
  write_points(original, out);
  std::istringstream in(out.str());
  const SurveyPointSet loaded = load_points(in);
  REQUIRE(loaded.points.size() == original.points.size());
  for (std::size_t i = 0; i < loaded.points.size(); ++i) {
    CHECK(loaded.points[i].x == original.points[i].x);
    CHECK(loaded.points[i].y == original.points[i].y);
    CHECK(loaded.points[i].value == original.points[i].value);
  }
}

TEST_CASE("spacing report on a regular lattice") {
  SurveyPointSet set;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      set.points.push_back({100.0 * j, 100.0 * i, 0.0});
  const SpacingReport report = sample_spacing_report(set);
  CHECK(report.median_spacing == doctest::Approx(100.0));
  CHECK(report.recommended_cell_size == doctest::Approx(100.0));
  CHECK_FALSE(report.aliasing_warning);

  const SpacingReport coarse = sample_spacing_report(set, 500.0);
  CHECK(coarse.aliasing_warning);
  const SpacingReport fine = sample_spacing_report(set, 30.0);
  CHECK(fine.aliasing_warning);
}

TEST_CASE("spacing median matches the brute-force scan") {
  const SurveyPointSet set = testutil::random_points(1000, 1000.0, 22);
  std::vector<double> xs(set.points.size()), ys(set.points.size());
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    xs[i] = set.points[i].x;
    ys[i] = set.points[i].y;
  }
  const std::vector<double> brute = reference::nn_distances_brute(xs, ys);
  const SpacingReport report = sample_spacing_report(set);
  CHECK(report.median_spacing == testutil::classic_median(brute));
  CHECK(report.min_spacing == *std::min_element(brute.begin(), brute.end()));
  CHECK(report.max_spacing == *std::max_element(brute.begin(), brute.end()));
}

TEST_CASE("spacing report needs two points") {
  SurveyPointSet set;
  set.points.push_back({0, 0, 0});
  CHECK_THROWS_AS(sample_spacing_report(set), DataError);
}

TEST_CASE("grid_nearest reproduces values at cell centers") {
  GridGeoref g{0.0, 0.0, 100.0, 4, 3};
  SurveyPointSet set;
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c)
      set.points.push_back({g.cell_x(c), g.cell_y(r), double(r * 10 + c)});
  const Grid grid = grid_nearest(set, g, 1.0);
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c) {
      CHECK_FALSE(grid.masked(r, c));
      CHECK(grid.at(r, c) == double(r * 10 + c));
    }
}

TEST_CASE("grid_nearest radius cut leaves one unmasked cell") {
  GridGeoref g{0.0, 0.0, 100.0, 5, 5};
  SurveyPointSet set;
  set.points.push_back({g.cell_x(2), g.cell_y(2), 7.0});
  const Grid grid = grid_nearest(set, g, 50.0);
  std::size_t unmasked = 0;
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c)
      if (!grid.masked(r, c)) {
        ++unmasked;
        CHECK(grid.at(r, c) == 7.0);
      }
  CHECK(unmasked == 1);
}

TEST_CASE("grid_nearest ties break to the smaller point index") {
  GridGeoref g{0.0, -100.0, 200.0, 2, 2};
  SurveyPointSet set;
  set.points.push_back({0.0, 0.0, 1.0});
  set.points.push_back({200.0, 0.0, 2.0});
  const Grid grid = grid_nearest(set, g, 500.0);
  CHECK(grid.at(0, 0) == 1.0);  // center (100, 0) is equidistant
}

TEST_CASE("grid_nearest equals the brute-force oracle") {
  const SurveyPointSet set = testutil::random_points(500, 5000.0, 33);
  GridGeoref g{0.0, 0.0, 100.0, 50, 50};
  const Grid fast = grid_nearest(set, g, 400.0);
  const Grid brute = reference::grid_nearest_brute(set, g, 400.0);
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c) {
      REQUIRE(fast.masked(r, c) == brute.masked(r, c));
      if (!fast.masked(r, c)) CHECK(fast.at(r, c) == brute.at(r, c));
    }
}

TEST_CASE("kriging interpolates exactly at data locations with zero nugget") {
  SurveyPointSet set;
  set.points.push_back({100.0, 100.0, 10.0});
  set.points.push_back({300.0, 100.0, 20.0});
  set.points.push_back({100.0, 300.0, 30.0});
  set.points.push_back({300.0, 300.0, 40.0});
  set.points.push_back({500.0, 500.0, 25.0});
  VariogramModel vg{VariogramKind::spherical, 0.0, 100.0, 1000.0};
  GridGeoref g{50.0, 50.0, 100.0, 5, 5};  // cell centers hit the data points
  const KrigingResult result = grid_kriging(set, g, vg, 5);
  CHECK(result.singular_cells == 0);
  CHECK(result.grid.at(0, 0) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(result.grid.at(0, 2) == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(result.grid.at(2, 0) == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(result.grid.at(4, 4) == doctest::Approx(25.0).epsilon(1e-9));
}

TEST_CASE("kriging weights match an independent dense solve") {
  const SurveyPointSet set = testutil::random_points(5, 1000.0, 44);
  VariogramModel vg{VariogramKind::exponential, 5.0, 80.0, 700.0};
  const double qx = 430.0, qy = 310.0;
  const KrigingWeights kw = kriging_weights(set, qx, qy, vg, 5);
  REQUIRE(kw.weights.size() == 5);

  // Assemble the same ordinary-kriging system and solve it with plain
  // Gaussian elimination.
  const std::size_t k = kw.neighbor_indices.size();
  std::vector<double> m((k + 1) * (k + 1), 0.0), rhs(k + 1, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const SurveyPoint& pi = set.points[kw.neighbor_indices[i]];
    for (std::size_t j = 0; j < k; ++j) {
      const SurveyPoint& pj = set.points[kw.neighbor_indices[j]];
      m[i * (k + 1) + j] = vg.covariance(std::hypot(pi.x - pj.x, pi.y - pj.y));
    }
    m[i * (k + 1) + k] = 1.0;
    m[k * (k + 1) + i] = 1.0;
    rhs[i] = vg.covariance(std::hypot(pi.x - qx, pi.y - qy));
  }
  rhs[k] = 1.0;
  const std::vector<double> expected = reference::solve_dense(m, rhs);
  for (std::size_t i = 0; i < k; ++i)
    CHECK(kw.weights[i] == doctest::Approx(expected[i]).epsilon(1e-9));
  CHECK(kw.lagrange == doctest::Approx(expected[k]).epsilon(1e-9));

  double wsum = 0.0;
  for (double w : kw.weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("kriging of constant values gives a constant grid") {
  SurveyPointSet set = testutil::random_points(40, 2000.0, 55);
  for (SurveyPoint& p : set.points) p.value = 42.0;
  VariogramModel vg{VariogramKind::spherical, 0.0, 10.0, 800.0};
  GridGeoref g{0.0, 0.0, 100.0, 20, 20};
  const KrigingResult result = grid_kriging(set, g, vg, 8);
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c) {
      REQUIRE_FALSE(result.grid.masked(r, c));
      CHECK(result.grid.at(r, c) == doctest::Approx(42.0).epsilon(1e-9));
    }
}

TEST_CASE("kriging excludes duplicate coordinates instead of failing") {
  SurveyPointSet set;
  set.points.push_back({0.0, 0.0, 1.0});
  set.points.push_back({0.0, 0.0, 9.0});  // excluded, first wins
  set.points.push_back({100.0, 0.0, 2.0});
  set.points.push_back({0.0, 100.0, 3.0});
  VariogramModel vg{VariogramKind::spherical, 0.0, 10.0, 500.0};
  GridGeoref g{-50.0, -50.0, 100.0, 2, 2};
  const KrigingResult result = grid_kriging(set, g, vg, 3);
  CHECK(result.excluded_duplicates == 1);
  CHECK(result.singular_cells == 0);
  CHECK(result.grid.at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("kriging output is finite and bounded unless weights go negative") {
  const SurveyPointSet set = testutil::random_points(200, 5000.0, 66);
  double lo = set.points[0].value, hi = lo;
  for (const SurveyPoint& p : set.points) {
    lo = std::min(lo, p.value);
    hi = std::max(hi, p.value);
  }
  VariogramModel vg{VariogramKind::spherical, 0.0, 50.0, 2000.0};
  GridGeoref g{0.0, 0.0, 250.0, 20, 20};
  const KrigingResult result = grid_kriging(set, g, vg, 12);
  bool all_bounded = true;
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c) {
      if (result.grid.masked(r, c)) continue;
      const double v = result.grid.at(r, c);
      REQUIRE(std::isfinite(v));
      if (v < lo - 1e-9 || v > hi + 1e-9) all_bounded = false;
    }
  if (!all_bounded) CHECK(result.negative_weight_cells > 0);
}

TEST_CASE("kriging matches the serial dense reference") {
  const SurveyPointSet set = testutil::random_points(80, 3000.0, 77);
  VariogramModel vg{VariogramKind::gaussian, 1.0, 60.0, 900.0};
  GridGeoref g{0.0, 0.0, 300.0, 10, 10};
  const KrigingResult fast = grid_kriging(set, g, vg, 10);
  const Grid slow = reference::grid_kriging_serial(set, g, vg, 10);
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c) {
      REQUIRE(fast.grid.masked(r, c) == slow.masked(r, c));
      if (!fast.grid.masked(r, c))
        CHECK(fast.grid.at(r, c) == doctest::Approx(slow.at(r, c)).epsilon(1e-9));
    }
}

TEST_CASE("grid io round trip: zeros") {
  GridGeoref g{0.0, 0.0, 100.0, 2, 2};
  Grid grid(g);
  std::ostringstream out;
  write_grid(grid, out);
  std::istringstream in(out.str());
  const Grid back = read_grid(in);
  CHECK(back.georef == g);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(back.at(r, c) == 0.0);
}

TEST_CASE("grid io preserves the nodata mask") {
  GridGeoref g{10.0, 20.0, 50.0, 3, 2};
  Grid grid(g, 1.5);
  grid.set_masked(1, 2, true);
  grid.set_masked(0, 0, true);
  std::ostringstream out;
  write_grid(grid, out);
  CHECK(out.str().find("NODATA_value -99999") != std::string::npos);
  std::istringstream in(out.str());
  const Grid back = read_grid(in);
  CHECK(back.masked(1, 2));
  CHECK(back.masked(0, 0));
  CHECK_FALSE(back.masked(0, 1));
  CHECK(back.at(0, 1) == 1.5);
}

TEST_CASE("grid io round trip is bit-exact on random grids") {
  GridGeoref g{12345.6789, -98765.4321, 12.5, 64, 64};
  Grid grid(g);
  SeededRng rng(88);
  for (double& v : grid.values) v = rng.next_uniform(-1e4, 1e4);
  std::ostringstream out;
  write_grid(grid, out);
  std::istringstream in(out.str());
  const Grid back = read_grid(in);
  REQUIRE(back.georef == g);
  for (std::size_t i = 0; i < grid.values.size(); ++i) CHECK(back.values[i] == grid.values[i]);
}

TEST_CASE("grid io read errors") {
  std::istringstream bad_key(
      "cols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -99999\n0 0\n0 0\n");
  CHECK_THROWS_AS(read_grid(bad_key), DataError);
  std::istringstream short_data(
      "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -99999\n0 0 0\n");
  CHECK_THROWS_AS(read_grid(short_data), DataError);
  std::istringstream extra_data(
      "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -99999\n0 0\n0 0\n0\n");
  CHECK_THROWS_AS(read_grid(extra_data), DataError);
  std::istringstream nonfinite(
      "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -99999\n0 nan\n0 0\n");
  CHECK_THROWS_AS(read_grid(nonfinite), DataError);
}

TEST_CASE("georef cell-center mapping and validation") {
  GridGeoref g{100.0, 200.0, 50.0, 4, 6};
  CHECK(g.cell_x(0) == 125.0);
  CHECK(g.cell_y(0) == 225.0);
  CHECK(g.cell_x(3) == 275.0);
  CHECK(g.width() == 200.0);
  CHECK(g.height() == 300.0);
  GridGeoref bad = g;
  bad.cell_size = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = g;
  bad.n_cols = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

}  // TEST_SUITE
