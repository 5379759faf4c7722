#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "aeromag/common.hpp"

namespace aeromag {

// Descriptive-statistics battery. Quantities undefined for the input (for
// example the geometric mean with nonpositive values) are nullopt and
// serialize as "N/A". Conventions:
//   - percentiles: linear interpolation between closest ranks (inclusive)
//   - trim mean (10%): drop floor(0.05 n) values from each tail;
//     winsorized mean clamps the same tails
//   - trimean = (Q1 + 2*median + Q3) / 4
//   - interquartile mean: mean of values x with Q1 <= x <= Q3
//   - variance, standard deviation, standard error: divisor n-1
//   - skewness and kurtosis: moment based with divisor n; kurtosis is
//     non-excess (normal -> 3)
//   - mean difference: Gini mean difference, computed for n <= 10^4
//   - median/average absolute deviation: about the median / the mean
struct DescriptiveStats {
  std::size_t n = 0;
  std::optional<double> p01, p05, p10, p25, p50, p75, p90, p95, p99;
  std::optional<double> minimum, maximum, mean, median;
  std::optional<double> geometric_mean, harmonic_mean, root_mean_square;
  std::optional<double> trim_mean_10, interquartile_mean, midrange;
  std::optional<double> winsorized_mean, trimean;
  std::optional<double> variance, std_deviation, interquartile_range, range;
  std::optional<double> mean_difference, median_abs_deviation, average_abs_deviation;
  std::optional<double> quartile_dispersion, relative_mean_diff;
  std::optional<double> standard_error, coef_of_variation, skewness, kurtosis;
  std::optional<double> sum, sum_absolute, sum_squares, mean_square;

  // All rows in fixed report order with their exact report labels.
  std::vector<std::pair<std::string, std::optional<double>>> rows() const;
};

DescriptiveStats descriptive_stats(std::span<const double> values);

struct NnsReport {
  std::vector<double> nn_distances;  // per point, meters
  DescriptiveStats stats;
};

// Exact per-point Euclidean nearest-neighbor distances; matches a
// brute-force scan bit for bit.
NnsReport nearest_neighbor_stats(std::span<const double> xs, std::span<const double> ys);

struct CsrReport {
  double lambda_intensity = 0.0;  // points per m^2
  double clark_evans = 0.0;       // R = mean NN distance / (0.5 / sqrt(lambda))
  double skellam = 0.0;           // 2 pi lambda sum(r_i^2), ~ chi^2(2n) under CSR
  std::size_t skellam_dof = 0;    // 2n
  std::size_t n_points = 0;
  double area_m2 = 0.0;
};

// Complete-spatial-randomness statistics in their classical uncorrected
// forms (no edge correction).
CsrReport csr_tests(std::span<const double> xs, std::span<const double> ys,
                    double area_m2);

struct PcaResult {
  Eigen::MatrixXd loadings;     // columns = components, descending eigenvalue
  Eigen::VectorXd eigenvalues;  // descending, clamped at 0
  Eigen::VectorXd means;
  std::size_t n_samples = 0;
  bool degenerate = false;  // all eigenvalues zero
};

// Mean-centered covariance eigendecomposition (divisor n-1). Each loading
// column's largest-magnitude entry is forced positive.
PcaResult pca(const Eigen::MatrixXd& data);

// JSON report texts. Descriptive rows keep their fixed order and labels;
// undefined entries serialize as the string "N/A".
std::string descriptive_stats_json(const DescriptiveStats& stats);
std::string nns_report_json(const NnsReport& report);
std::string csr_report_json(const CsrReport& report);
std::string pca_result_json(const PcaResult& result);

void write_nn_distances_csv(const NnsReport& report, std::ostream& out);

}  // namespace aeromag
