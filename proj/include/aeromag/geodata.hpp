#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aeromag/common.hpp"

namespace aeromag {

struct SurveyPoint {
  double x = 0.0;      // UTM easting, meters
  double y = 0.0;      // UTM northing, meters
  double value = 0.0;  // TMI, nanotesla
};

struct SurveyPointSet {
  std::vector<SurveyPoint> points;
  std::string crs_label;
  std::size_t duplicate_count = 0;  // later rows repeating an earlier (x, y)
};

// Cell-center registration. Cell (row, col) has center
//   x = x_origin + (col + 0.5) * cell_size
//   y = y_origin + (row + 0.5) * cell_size
// with row 0 the southernmost row. Every module derives coordinates from
// this mapping; the ESRI ASCII reader/writer flips row order at that
// boundary only.
struct GridGeoref {
  double x_origin = 0.0;  // lower-left cell corner
  double y_origin = 0.0;
  double cell_size = 100.0;
  int n_cols = 2;
  int n_rows = 2;

  double cell_x(int col) const { return x_origin + (col + 0.5) * cell_size; }
  double cell_y(int row) const { return y_origin + (row + 0.5) * cell_size; }
  double width() const { return n_cols * cell_size; }
  double height() const { return n_rows * cell_size; }
  double area() const { return width() * height(); }

  bool operator==(const GridGeoref&) const = default;
  void validate() const;
};

struct Grid {
  GridGeoref georef;
  std::vector<double> values;        // row-major, row 0 = south
  std::vector<std::uint8_t> nodata;  // 1 = masked
  std::string units_label = "nT";

  Grid() = default;
  explicit Grid(const GridGeoref& g, double fill = 0.0)
      : georef(g),
        values(static_cast<std::size_t>(g.n_rows) * g.n_cols, fill),
        nodata(static_cast<std::size_t>(g.n_rows) * g.n_cols, 0) {}

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * georef.n_cols + col;
  }
  double& at(int row, int col) { return values[index(row, col)]; }
  double at(int row, int col) const { return values[index(row, col)]; }
  bool masked(int row, int col) const { return nodata[index(row, col)] != 0; }
  void set_masked(int row, int col, bool m) { nodata[index(row, col)] = m ? 1 : 0; }
  std::size_t size() const { return values.size(); }
  bool any_masked() const;
  std::size_t masked_count() const;
};

enum class VariogramKind { spherical, exponential, gaussian };

struct VariogramModel {
  VariogramKind kind = VariogramKind::spherical;
  double nugget = 0.0;
  double sill = 1.0;
  double range_m = 1000.0;

  // Semivariance at lag h; gamma(0) = 0, the nugget is the h -> 0+ jump.
  // Exponential and gaussian kinds use the practical-range convention
  // (95% of the sill reached at range_m).
  double gamma(double h) const;
  double covariance(double h) const { return sill - gamma(h); }
  void validate() const;
};

// Spherical, nugget 0, sill = sample variance of the values, range = 10 x
// median point spacing: the documented reproducible default.
VariogramModel default_variogram(const SurveyPointSet& points);

// CSV with header columns x, y, tmi (case-insensitive, extra columns
// ignored). Throws DataError: MalformedRow, NonFinite (with line numbers),
// EmptyInput.
SurveyPointSet load_points(std::istream& in);
SurveyPointSet load_points_file(const std::string& path);

// 17-significant-digit export; load_points(write_points(s)) is value-exact.
void write_points(const SurveyPointSet& points, std::ostream& out);
void write_points_file(const SurveyPointSet& points, const std::string& path);

struct SpacingReport {
  double min_spacing = 0.0;
  double median_spacing = 0.0;
  double max_spacing = 0.0;
  double recommended_cell_size = 0.0;  // median nearest-neighbor spacing
  double evaluated_cell_size = 0.0;
  bool aliasing_warning = false;
};

// Nearest-neighbor spacing summary. Warns when the evaluated cell size is
// below half the median spacing (oversampled) or above it (undersampled);
// `cell_size` defaults to the recommendation.
SpacingReport sample_spacing_report(const SurveyPointSet& points,
                                    std::optional<double> cell_size = std::nullopt);

// Each cell center takes the value of the nearest point within max_radius,
// else nodata. Ties break to the smallest point index.
Grid grid_nearest(const SurveyPointSet& points, const GridGeoref& georef,
                  double max_radius);

struct KrigingResult {
  Grid grid;
  std::size_t singular_cells = 0;
  std::size_t negative_weight_cells = 0;
  std::size_t excluded_duplicates = 0;
};

// Ordinary kriging per cell over the `neighborhood` nearest points.
// Duplicate coordinates keep their first occurrence only (the rest are
// excluded from neighborhoods and counted). Singular cells are masked and
// counted, not fatal.
KrigingResult grid_kriging(const SurveyPointSet& points, const GridGeoref& georef,
                           const VariogramModel& variogram, int neighborhood = 16);

struct KrigingWeights {
  std::vector<std::size_t> neighbor_indices;  // into the original point list
  std::vector<double> weights;
  double lagrange = 0.0;
};

// Single-location solve on the same path grid_kriging takes per cell,
// exposed for diagnostics and oracle comparisons. Throws NumericalError
// (SingularSystem) when the system cannot be solved.
KrigingWeights kriging_weights(const SurveyPointSet& points, double x, double y,
                               const VariogramModel& variogram, int neighborhood = 16);

// ESRI ASCII grid, corner-registered header, north row first,
// NODATA_value -99999, 17 significant digits (round trip is bit-exact for
// unmasked values). Read throws DataError: HeaderMismatch,
// DimensionMismatch, NonFinite.
void write_grid(const Grid& grid, std::ostream& out);
void write_grid_file(const Grid& grid, const std::string& path);
Grid read_grid(std::istream& in);
Grid read_grid_file(const std::string& path);

}  // namespace aeromag
