#include "aeromag/spatialstats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>
#include <json.hpp>

#include "aeromag/spatial_index.hpp"

namespace aeromag {

namespace {

double percentile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = (static_cast<double>(n) - 1.0) * p / 100.0;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

}  // namespace

DescriptiveStats descriptive_stats(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) throw DataError("EmptyInput: descriptive_stats needs at least one value");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  DescriptiveStats s;
  s.n = n;
  s.p01 = percentile_sorted(sorted, 1);
  s.p05 = percentile_sorted(sorted, 5);
  s.p10 = percentile_sorted(sorted, 10);
  s.p25 = percentile_sorted(sorted, 25);
  s.p50 = percentile_sorted(sorted, 50);
  s.p75 = percentile_sorted(sorted, 75);
  s.p90 = percentile_sorted(sorted, 90);
  s.p95 = percentile_sorted(sorted, 95);
  s.p99 = percentile_sorted(sorted, 99);
  s.minimum = sorted.front();
  s.maximum = sorted.back();
  const double q1 = *s.p25, med = *s.p50, q3 = *s.p75;
  s.median = med;
  s.midrange = 0.5 * (sorted.front() + sorted.back());
  s.trimean = 0.25 * (q1 + 2.0 * med + q3);
  s.interquartile_range = q3 - q1;
  s.range = sorted.back() - sorted.front();
  s.quartile_dispersion =
      (q3 + q1) != 0.0 ? std::optional<double>((q3 - q1) / (q3 + q1)) : std::nullopt;

  const double mean_v = pairwise_sum(values) / static_cast<double>(n);
  s.mean = mean_v;
  s.sum = pairwise_sum(values);

  std::vector<double> work(n);
  for (std::size_t i = 0; i < n; ++i) work[i] = std::abs(values[i]);
  s.sum_absolute = pairwise_sum(work);
  for (std::size_t i = 0; i < n; ++i) work[i] = values[i] * values[i];
  s.sum_squares = pairwise_sum(work);
  s.mean_square = *s.sum_squares / static_cast<double>(n);
  s.root_mean_square = std::sqrt(*s.mean_square);

  const bool all_positive = sorted.front() > 0.0;
  if (all_positive) {
    for (std::size_t i = 0; i < n; ++i) work[i] = std::log(values[i]);
    s.geometric_mean = std::exp(pairwise_sum(work) / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) work[i] = 1.0 / values[i];
    s.harmonic_mean = static_cast<double>(n) / pairwise_sum(work);
  }

  const std::size_t tail = static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(n)));
  {
    std::span<const double> kept(sorted.data() + tail, n - 2 * tail);
    s.trim_mean_10 = pairwise_sum(kept) / static_cast<double>(kept.size());
    for (std::size_t i = 0; i < n; ++i)
      work[i] = std::clamp(sorted[i], sorted[tail], sorted[n - 1 - tail]);
    s.winsorized_mean = pairwise_sum(work) / static_cast<double>(n);
  }
  {
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (sorted[i] >= q1 && sorted[i] <= q3) work[m++] = sorted[i];
    if (m > 0)
      s.interquartile_mean = pairwise_sum(std::span<const double>(work.data(), m)) /
                             static_cast<double>(m);
  }

  for (std::size_t i = 0; i < n; ++i) work[i] = std::abs(values[i] - med);
  std::sort(work.begin(), work.end());
  s.median_abs_deviation = percentile_sorted(work, 50);
  for (std::size_t i = 0; i < n; ++i) work[i] = std::abs(values[i] - mean_v);
  s.average_abs_deviation = pairwise_sum(work) / static_cast<double>(n);

  if (n >= 2) {
    for (std::size_t i = 0; i < n; ++i) work[i] = (values[i] - mean_v) * (values[i] - mean_v);
    const double ss = pairwise_sum(work);
    const double var = ss / static_cast<double>(n - 1);
    s.variance = var;
    s.std_deviation = std::sqrt(var);
    s.standard_error = std::sqrt(var / static_cast<double>(n));
    if (mean_v != 0.0) s.coef_of_variation = *s.std_deviation / mean_v;

    const double m2 = ss / static_cast<double>(n);
    if (m2 > 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double d = values[i] - mean_v;
        work[i] = d * d * d;
      }
      const double m3 = pairwise_sum(work) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = (values[i] - mean_v) * (values[i] - mean_v);
        work[i] = d * d;
      }
      const double m4 = pairwise_sum(work) / static_cast<double>(n);
      s.skewness = m3 / std::pow(m2, 1.5);
      s.kurtosis = m4 / (m2 * m2);
    }

    if (n <= 10000) {
      // Gini mean difference from the sorted order statistics.
      for (std::size_t i = 0; i < n; ++i)
        work[i] = (2.0 * static_cast<double>(i) - static_cast<double>(n) + 1.0) * sorted[i];
      const double gmd = pairwise_sum(work) * 2.0 /
                         (static_cast<double>(n) * static_cast<double>(n - 1));
      s.mean_difference = gmd;
      if (mean_v != 0.0) s.relative_mean_diff = gmd / mean_v;
    }
  }

  return s;
}

std::vector<std::pair<std::string, std::optional<double>>> DescriptiveStats::rows() const {
  return {{"1%-tile", p01},
          {"5%-tile", p05},
          {"10%-tile", p10},
          {"25%-tile", p25},
          {"50%-tile", p50},
          {"75%-tile", p75},
          {"90%-tile", p90},
          {"95%-tile", p95},
          {"99%-tile", p99},
          {"Minimum", minimum},
          {"Maximum", maximum},
          {"Mean", mean},
          {"Median", median},
          {"Geometric Mean", geometric_mean},
          {"Harmonic Mean", harmonic_mean},
          {"Root Mean Square", root_mean_square},
          {"Trim Mean (10%)", trim_mean_10},
          {"Interquartile Mean", interquartile_mean},
          {"Midrange", midrange},
          {"Winsorized Mean", winsorized_mean},
          {"TriMean", trimean},
          {"Variance", variance},
          {"Standard Deviation", std_deviation},
          {"Interquartile Range", interquartile_range},
          {"Range", range},
          {"Mean Difference", mean_difference},
          {"Median Abs. Deviation", median_abs_deviation},
          {"Average Abs. Deviation", average_abs_deviation},
          {"Quartile Dispersion", quartile_dispersion},
          {"Relative Mean Diff.", relative_mean_diff},
          {"Standard Error", standard_error},
          {"Coef. of Variation", coef_of_variation},
          {"Skewness", skewness},
          {"Kurtosis", kurtosis},
          {"Sum", sum},
          {"Sum Absolute", sum_absolute},
          {"Sum Squares", sum_squares},
          {"Mean Square", mean_square}};
}

NnsReport nearest_neighbor_stats(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n != ys.size()) throw ConfigError("nearest_neighbor_stats: mismatched spans");
  if (n < 2) throw DataError("TooFewPoints: nearest-neighbor stats need >= 2 points");

  PointBucketIndex index(xs, ys);
  NnsReport report;
  report.nn_distances.resize(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const auto hit = index.nearest(xs[static_cast<std::size_t>(i)],
                                   ys[static_cast<std::size_t>(i)],
                                   std::numeric_limits<double>::infinity(),
                                   static_cast<std::size_t>(i));
    report.nn_distances[static_cast<std::size_t>(i)] = std::sqrt(hit->dist2);
  }
  report.stats = descriptive_stats(report.nn_distances);
  return report;
}

CsrReport csr_tests(std::span<const double> xs, std::span<const double> ys,
                    double area_m2) {
  if (xs.size() < 2) throw DataError("TooFewPoints: CSR tests need >= 2 points");
  if (!(area_m2 > 0.0)) throw DataError("NonpositiveArea: CSR tests need area > 0");

  const NnsReport nns = nearest_neighbor_stats(xs, ys);
  const std::size_t n = xs.size();

  CsrReport report;
  report.n_points = n;
  report.area_m2 = area_m2;
  report.lambda_intensity = static_cast<double>(n) / area_m2;
  const double mean_r = pairwise_sum(nns.nn_distances) / static_cast<double>(n);
  const double expected_r = 0.5 / std::sqrt(report.lambda_intensity);
  report.clark_evans = mean_r / expected_r;

  std::vector<double> r2(n);
  for (std::size_t i = 0; i < n; ++i) r2[i] = nns.nn_distances[i] * nns.nn_distances[i];
  report.skellam = 2.0 * std::numbers::pi * report.lambda_intensity * pairwise_sum(r2);
  report.skellam_dof = 2 * n;
  return report;
}

PcaResult pca(const Eigen::MatrixXd& data) {
  const auto n = data.rows();
  const auto d = data.cols();
  if (n < 2 || d < 1) throw DataError("pca: need at least 2 samples and 1 dimension");
  if (!data.allFinite()) throw DataError("pca: data must be finite");

  PcaResult result;
  result.n_samples = static_cast<std::size_t>(n);
  result.means = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - result.means.transpose();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericalError("pca: eigendecomposition failed");

  // Eigen returns ascending order; reverse to descending.
  result.eigenvalues = solver.eigenvalues().reverse();
  result.loadings = solver.eigenvectors().rowwise().reverse();

  const double scale = std::max(1.0, result.eigenvalues.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < d; ++k) {
    if (result.eigenvalues(k) < 0.0 && result.eigenvalues(k) >= -1e-12 * scale)
      result.eigenvalues(k) = 0.0;
    // Deterministic sign: largest-magnitude entry positive, first on ties.
    Eigen::Index imax = 0;
    double amax = -1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double a = std::abs(result.loadings(i, k));
      if (a > amax) {
        amax = a;
        imax = i;
      }
    }
    if (result.loadings(imax, k) < 0.0) result.loadings.col(k) = -result.loadings.col(k);
  }
  result.degenerate = result.eigenvalues.maxCoeff() <= 0.0;
  return result;
}

namespace {

nlohmann::ordered_json stat_value(const std::optional<double>& v) {
  if (!v.has_value()) return "N/A";
  return *v;
}

}  // namespace

std::string descriptive_stats_json(const DescriptiveStats& stats) {
  nlohmann::ordered_json j;
  j["n"] = stats.n;
  for (const auto& [name, value] : stats.rows()) j[name] = stat_value(value);
  return j.dump(2) + "\n";
}

std::string nns_report_json(const NnsReport& report) {
  nlohmann::ordered_json j;
  j["n_points"] = report.nn_distances.size();
  nlohmann::ordered_json stats;
  stats["n"] = report.stats.n;
  for (const auto& [name, value] : report.stats.rows()) stats[name] = stat_value(value);
  j["nn_distance_stats"] = stats;
  return j.dump(2) + "\n";
}

std::string csr_report_json(const CsrReport& report) {
  nlohmann::ordered_json j;
  j["Lambda"] = report.lambda_intensity;
  j["Clark and Evans"] = report.clark_evans;
  j["Skellam"] = report.skellam;
  j["skellam_dof"] = report.skellam_dof;
  j["n_points"] = report.n_points;
  j["area_m2"] = report.area_m2;
  return j.dump(2) + "\n";
}

std::string pca_result_json(const PcaResult& result) {
  nlohmann::ordered_json j;
  const Eigen::Index d = result.eigenvalues.size();
  std::vector<double> lambda(result.eigenvalues.data(), result.eigenvalues.data() + d);
  j["Lambda"] = lambda;
  nlohmann::ordered_json loadings = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < d; ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < d; ++c) row.push_back(result.loadings(r, c));
    loadings.push_back(row);
  }
  j["loadings"] = loadings;
  std::vector<double> means(result.means.data(), result.means.data() + result.means.size());
  j["means"] = means;
  j["n_samples"] = result.n_samples;
  j["degenerate"] = result.degenerate;
  return j.dump(2) + "\n";
}

void write_nn_distances_csv(const NnsReport& report, std::ostream& out) {
  out << "nn_distance\n";
  char buf[32];
  for (double d : report.nn_distances) {
    std::snprintf(buf, sizeof(buf), "%.17g", d);
    out << buf << '\n';
  }
}

}  // namespace aeromag
