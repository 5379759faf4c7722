#pragma once

// Oracle helpers for the test suites. Deliberately independent of the
// library's solver paths: hand-rolled Jacobi rotations, plain medians,
// brute-force scans.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "aeromag/common.hpp"
#include "aeromag/geodata.hpp"

namespace testutil {

struct JacobiEigen {
  std::vector<double> values;   // descending
  std::vector<double> vectors;  // row-major, column k = eigenvector k
  std::size_t n = 0;
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major n x n).
inline JacobiEigen jacobi_eigen(std::vector<double> a, std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-300) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = 0.5 * (a[q * n + q] - a[p * n + p]) / apq;
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });

  JacobiEigen out;
  out.n = n;
  out.values.resize(n);
  out.vectors.assign(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a[order[k] * n + order[k]];
    for (std::size_t i = 0; i < n; ++i) out.vectors[i * n + k] = v[i * n + order[k]];
  }
  return out;
}

inline double classic_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline aeromag::SurveyPointSet random_points(std::size_t n, double extent,
                                             std::uint64_t seed) {
  aeromag::SeededRng rng(seed);
  aeromag::SurveyPointSet set;
  set.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    set.points.push_back({rng.next_uniform(0.0, extent), rng.next_uniform(0.0, extent),
                          rng.next_uniform(-100.0, 100.0)});
  return set;
}

}  // namespace testutil
