#include "aeromag/geodata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "aeromag/spatial_index.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aeromag {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  for (std::string& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

double classic_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Per-point nearest-neighbor distances, parallel over points. Exact; each
// slot is written once so the result is schedule-independent.
std::vector<double> nn_spacings(const SurveyPointSet& points) {
  const std::size_t n = points.points.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = points.points[i].x;
    ys[i] = points.points[i].y;
  }
  PointBucketIndex index(xs, ys);
  std::vector<double> d(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    auto hit = index.nearest(xs[i], ys[i], std::numeric_limits<double>::infinity(),
                             static_cast<std::size_t>(i));
    d[i] = hit ? std::sqrt(hit->dist2) : 0.0;
  }
  return d;
}

}  // namespace

void GridGeoref::validate() const {
  if (!(cell_size > 0.0)) throw ConfigError("georef: cell_size must be > 0");
  if (n_cols < 2 || n_rows < 2) throw ConfigError("georef: n_cols and n_rows must be >= 2");
  if (!std::isfinite(x_origin) || !std::isfinite(y_origin) || !std::isfinite(cell_size))
    throw ConfigError("georef: origin and cell_size must be finite");
}

bool Grid::any_masked() const {
  return std::find(nodata.begin(), nodata.end(), std::uint8_t{1}) != nodata.end();
}

std::size_t Grid::masked_count() const {
  return static_cast<std::size_t>(std::count(nodata.begin(), nodata.end(), std::uint8_t{1}));
}

double VariogramModel::gamma(double h) const {
  if (h <= 0.0) return 0.0;
  const double partial = sill - nugget;
  switch (kind) {
    case VariogramKind::spherical: {
      if (h >= range_m) return sill;
      const double u = h / range_m;
      return nugget + partial * (1.5 * u - 0.5 * u * u * u);
    }
    case VariogramKind::exponential:
      return nugget + partial * (1.0 - std::exp(-3.0 * h / range_m));
    case VariogramKind::gaussian:
      return nugget + partial * (1.0 - std::exp(-3.0 * h * h / (range_m * range_m)));
  }
  return sill;
}

void VariogramModel::validate() const {
  if (nugget < 0.0) throw ConfigError("variogram: nugget must be >= 0");
  if (!(sill > 0.0)) throw ConfigError("variogram: sill must be > 0");
  if (nugget > sill) throw ConfigError("variogram: nugget must not exceed sill");
  if (!(range_m > 0.0)) throw ConfigError("variogram: range_m must be > 0");
}

VariogramModel default_variogram(const SurveyPointSet& points) {
  VariogramModel model;
  const std::size_t n = points.points.size();
  if (n >= 2) {
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = points.points[i].value;
    const double m = mean(vals);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (vals[i] - m) * (vals[i] - m);
    const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    model.sill = var > 0.0 ? var : 1.0;
    model.range_m = 10.0 * sample_spacing_report(points).median_spacing;
    if (!(model.range_m > 0.0)) model.range_m = 1000.0;
  }
  return model;
}

SurveyPointSet load_points(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("EmptyInput: no header line");
  const auto header = split_csv(line);
  int cx = -1, cy = -1, cv = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = lower(header[i]);
    if (h == "x") cx = static_cast<int>(i);
    else if (h == "y") cy = static_cast<int>(i);
    else if (h == "tmi") cv = static_cast<int>(i);
  }
  if (cx < 0 || cy < 0 || cv < 0)
    throw DataError("HeaderMismatch: CSV header must contain columns x, y, tmi");

  SurveyPointSet set;
  std::map<std::pair<double, double>, std::size_t> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    const std::size_t need = static_cast<std::size_t>(std::max({cx, cy, cv})) + 1;
    if (fields.size() < need)
      throw DataError("MalformedRow: line " + std::to_string(line_no) + " has too few fields");
    SurveyPoint p;
    if (!parse_double(fields[cx], p.x) || !parse_double(fields[cy], p.y) ||
        !parse_double(fields[cv], p.value))
      throw DataError("MalformedRow: non-numeric field at line " + std::to_string(line_no));
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.value))
      throw DataError("NonFinite: value at line " + std::to_string(line_no));
    if (!seen.emplace(std::make_pair(p.x, p.y), set.points.size()).second)
      set.duplicate_count++;
    set.points.push_back(p);
  }
  if (set.points.empty()) throw DataError("EmptyInput: no data rows");
  return set;
}

SurveyPointSet load_points_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open points file: " + path);
  return load_points(in);
}

void write_points(const SurveyPointSet& points, std::ostream& out) {
  out << "x,y,tmi\n";
  for (const SurveyPoint& p : points.points)
    out << fmt17(p.x) << ',' << fmt17(p.y) << ',' << fmt17(p.value) << '\n';
}

void write_points_file(const SurveyPointSet& points, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open points file for writing: " + path);
  write_points(points, out);
}

SpacingReport sample_spacing_report(const SurveyPointSet& points,
                                    std::optional<double> cell_size) {
  if (points.points.size() < 2)
    throw DataError("TooFewPoints: spacing report needs at least 2 points");
  const std::vector<double> d = nn_spacings(points);
  SpacingReport report;
  report.min_spacing = *std::min_element(d.begin(), d.end());
  report.max_spacing = *std::max_element(d.begin(), d.end());
  report.median_spacing = classic_median(d);
  report.recommended_cell_size = report.median_spacing;
  report.evaluated_cell_size = cell_size.value_or(report.recommended_cell_size);
  report.aliasing_warning = report.evaluated_cell_size < 0.5 * report.median_spacing ||
                            report.evaluated_cell_size > report.median_spacing;
  return report;
}

Grid grid_nearest(const SurveyPointSet& points, const GridGeoref& georef,
                  double max_radius) {
  georef.validate();
  if (points.points.empty()) throw DataError("grid_nearest: empty point set");
  if (!(max_radius > 0.0)) throw ConfigError("grid_nearest: max_radius must be > 0");

  const std::size_t n = points.points.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = points.points[i].x;
    ys[i] = points.points[i].y;
  }
  PointBucketIndex index(xs, ys);

  Grid grid(georef);
  grid.units_label = "nT";
#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < georef.n_rows; ++row) {
    for (int col = 0; col < georef.n_cols; ++col) {
      const auto hit = index.nearest(georef.cell_x(col), georef.cell_y(static_cast<int>(row)),
                                     max_radius);
      if (hit) {
        grid.at(static_cast<int>(row), col) = points.points[hit->index].value;
      } else {
        grid.set_masked(static_cast<int>(row), col, true);
      }
    }
  }
  return grid;
}

namespace {

struct DedupedPoints {
  std::vector<double> xs, ys, zs;
  std::vector<std::size_t> original;  // index into the input point list
  std::size_t excluded = 0;
};

// First occurrence wins for duplicate coordinates; the rest would make the
// kriging matrix singular.
DedupedPoints dedupe_points(const SurveyPointSet& points) {
  DedupedPoints d;
  std::map<std::pair<double, double>, std::size_t> seen;
  for (std::size_t i = 0; i < points.points.size(); ++i) {
    const SurveyPoint& p = points.points[i];
    if (seen.emplace(std::make_pair(p.x, p.y), d.xs.size()).second) {
      d.xs.push_back(p.x);
      d.ys.push_back(p.y);
      d.zs.push_back(p.value);
      d.original.push_back(i);
    } else {
      ++d.excluded;
    }
  }
  return d;
}

// Ordinary-kriging system over the given neighbors; returns false when
// singular.
bool solve_kriging_at(const DedupedPoints& pts, const VariogramModel& variogram,
                      const std::vector<PointBucketIndex::Hit>& hits,
                      Eigen::MatrixXd& m, Eigen::VectorXd& rhs, Eigen::VectorXd& w) {
  const std::size_t k = hits.size();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double dx = pts.xs[hits[i].index] - pts.xs[hits[j].index];
      const double dy = pts.ys[hits[i].index] - pts.ys[hits[j].index];
      m(i, j) = variogram.covariance(std::sqrt(dx * dx + dy * dy));
    }
    m(i, k) = 1.0;
    m(k, i) = 1.0;
    rhs(i) = variogram.covariance(std::sqrt(hits[i].dist2));
  }
  m(k, k) = 0.0;
  rhs(k) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) return false;
  w = lu.solve(rhs);
  return w.allFinite();
}

}  // namespace

KrigingResult grid_kriging(const SurveyPointSet& points, const GridGeoref& georef,
                           const VariogramModel& variogram, int neighborhood) {
  georef.validate();
  variogram.validate();
  if (neighborhood < 2) throw ConfigError("grid_kriging: neighborhood must be >= 2");

  const DedupedPoints pts = dedupe_points(points);
  if (pts.xs.size() < 2) throw DataError("grid_kriging: need at least 2 distinct points");

  PointBucketIndex index(pts.xs, pts.ys);
  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(neighborhood), pts.xs.size());

  Grid grid(georef);
  std::size_t singular = 0, negative = 0;

#pragma omp parallel for schedule(static) reduction(+ : singular, negative)
  for (std::int64_t row = 0; row < georef.n_rows; ++row) {
    Eigen::MatrixXd m(k + 1, k + 1);
    Eigen::VectorXd rhs(k + 1);
    Eigen::VectorXd w(k + 1);
    for (int col = 0; col < georef.n_cols; ++col) {
      const double cx = georef.cell_x(col);
      const double cy = georef.cell_y(static_cast<int>(row));
      const auto hits = index.k_nearest(cx, cy, k);
      if (!solve_kriging_at(pts, variogram, hits, m, rhs, w)) {
        grid.set_masked(static_cast<int>(row), col, true);
        ++singular;
        continue;
      }
      double value = 0.0;
      bool neg = false;
      for (std::size_t i = 0; i < k; ++i) {
        value += w(i) * pts.zs[hits[i].index];
        if (w(i) < 0.0) neg = true;
      }
      if (neg) ++negative;
      grid.at(static_cast<int>(row), col) = value;
    }
  }

  return KrigingResult{std::move(grid), singular, negative, pts.excluded};
}

KrigingWeights kriging_weights(const SurveyPointSet& points, double x, double y,
                               const VariogramModel& variogram, int neighborhood) {
  variogram.validate();
  if (neighborhood < 2) throw ConfigError("kriging_weights: neighborhood must be >= 2");
  const DedupedPoints pts = dedupe_points(points);
  if (pts.xs.size() < 2) throw DataError("kriging_weights: need at least 2 distinct points");

  PointBucketIndex index(pts.xs, pts.ys);
  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(neighborhood), pts.xs.size());
  const auto hits = index.k_nearest(x, y, k);

  Eigen::MatrixXd m(k + 1, k + 1);
  Eigen::VectorXd rhs(k + 1);
  Eigen::VectorXd w(k + 1);
  if (!solve_kriging_at(pts, variogram, hits, m, rhs, w))
    throw NumericalError("SingularSystem: kriging system is singular at the query location");

  KrigingWeights result;
  result.lagrange = w(k);
  for (std::size_t i = 0; i < k; ++i) {
    result.neighbor_indices.push_back(pts.original[hits[i].index]);
    result.weights.push_back(w(i));
  }
  return result;
}

void write_grid(const Grid& grid, std::ostream& out) {
  const GridGeoref& g = grid.georef;
  out << "ncols " << g.n_cols << '\n';
  out << "nrows " << g.n_rows << '\n';
  out << "xllcorner " << fmt17(g.x_origin) << '\n';
  out << "yllcorner " << fmt17(g.y_origin) << '\n';
  out << "cellsize " << fmt17(g.cell_size) << '\n';
  out << "NODATA_value -99999\n";
  for (int row = g.n_rows - 1; row >= 0; --row) {
    for (int col = 0; col < g.n_cols; ++col) {
      if (col > 0) out << ' ';
      if (grid.masked(row, col)) {
        out << "-99999";
      } else {
        out << fmt17(grid.at(row, col));
      }
    }
    out << '\n';
  }
}

void write_grid_file(const Grid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open grid file for writing: " + path);
  write_grid(grid, out);
}

Grid read_grid(std::istream& in) {
  static const char* keys[6] = {"ncols", "nrows", "xllcorner",
                                "yllcorner", "cellsize", "nodata_value"};
  double header[6];
  for (int i = 0; i < 6; ++i) {
    std::string key, value;
    if (!(in >> key >> value))
      throw DataError(std::string("HeaderMismatch: missing header line '") + keys[i] + "'");
    if (lower(key) != keys[i])
      throw DataError("HeaderMismatch: expected '" + std::string(keys[i]) + "', got '" + key + "'");
    if (!parse_double(value, header[i]))
      throw DataError("HeaderMismatch: non-numeric value for '" + std::string(keys[i]) + "'");
  }

  GridGeoref georef;
  georef.n_cols = static_cast<int>(header[0]);
  georef.n_rows = static_cast<int>(header[1]);
  georef.x_origin = header[2];
  georef.y_origin = header[3];
  georef.cell_size = header[4];
  const double sentinel = header[5];
  georef.validate();

  Grid grid(georef);
  const std::size_t expected = grid.size();
  std::string token;
  std::size_t count = 0;
  while (count < expected && (in >> token)) {
    double v;
    if (!parse_double(token, v))
      throw DataError("DimensionMismatch: non-numeric grid sample '" + token + "'");
    const std::size_t row = georef.n_rows - 1 - count / georef.n_cols;  // north first
    const std::size_t col = count % georef.n_cols;
    if (v == sentinel) {
      grid.set_masked(static_cast<int>(row), static_cast<int>(col), true);
      grid.at(static_cast<int>(row), static_cast<int>(col)) = 0.0;
    } else {
      if (!std::isfinite(v))
        throw DataError("NonFinite: grid sample " + std::to_string(count));
      grid.at(static_cast<int>(row), static_cast<int>(col)) = v;
    }
    ++count;
  }
  if (count < expected)
    throw DataError("DimensionMismatch: expected " + std::to_string(expected) +
                    " samples, got " + std::to_string(count));
  if (in >> token)
    throw DataError("DimensionMismatch: trailing data after " + std::to_string(expected) +
                    " samples");
  return grid;
}

Grid read_grid_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open grid file: " + path);
  return read_grid(in);
}

}  // namespace aeromag
