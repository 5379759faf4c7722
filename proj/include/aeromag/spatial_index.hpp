#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace aeromag {

// Uniform bucket grid over 2-D points for exact nearest-neighbor queries.
// Candidate distances use the same arithmetic as a brute-force scan
// (dx*dx + dy*dy), taking the minimum is order-free, and ties resolve to the
// smallest point index, so results match the brute-force reference bit for
// bit.
class PointBucketIndex {
 public:
  struct Hit {
    std::size_t index;
    double dist2;
  };

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  PointBucketIndex(std::span<const double> xs, std::span<const double> ys)
      : xs_(xs.begin(), xs.end()), ys_(ys.begin(), ys.end()) {
    const std::size_t n = xs_.size();
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    if (n > 0) {
      xmin = *std::min_element(xs_.begin(), xs_.end());
      xmax = *std::max_element(xs_.begin(), xs_.end());
      ymin = *std::min_element(ys_.begin(), ys_.end());
      ymax = *std::max_element(ys_.begin(), ys_.end());
    }
    x0_ = xmin;
    y0_ = ymin;
    const std::size_t nb = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n) / 2.0)));
    nbx_ = nby_ = static_cast<int>(nb);
    cw_ = (xmax > xmin) ? (xmax - xmin) / nbx_ : 1.0;
    ch_ = (ymax > ymin) ? (ymax - ymin) / nby_ : 1.0;

    std::vector<std::size_t> counts(static_cast<std::size_t>(nbx_) * nby_ + 1, 0);
    for (std::size_t i = 0; i < n; ++i) counts[bucket_of(xs_[i], ys_[i]) + 1]++;
    for (std::size_t b = 1; b < counts.size(); ++b) counts[b] += counts[b - 1];
    offsets_ = counts;
    ids_.resize(n);
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) ids_[cursor[bucket_of(xs_[i], ys_[i])]++] = i;
  }

  std::size_t size() const { return xs_.size(); }

  std::optional<Hit> nearest(
      double qx, double qy,
      double max_radius = std::numeric_limits<double>::infinity(),
      std::size_t skip = npos) const {
    Hit best{npos, std::numeric_limits<double>::infinity()};
    const double limit2 = max_radius * max_radius;
    scan_rings(qx, qy, [&](std::size_t i, double d2) {
      if (i == skip) return;
      if (d2 < best.dist2 || (d2 == best.dist2 && i < best.index)) best = {i, d2};
    }, [&](double bound) {
      return best.dist2 <= bound * bound || bound > max_radius;
    });
    if (best.index == npos || best.dist2 > limit2) return std::nullopt;
    return best;
  }

  // k nearest by (dist2, index); fewer than k returned when the point set is
  // smaller. Output sorted ascending.
  std::vector<Hit> k_nearest(double qx, double qy, std::size_t k,
                             std::size_t skip = npos) const {
    std::vector<Hit> heap;  // max-heap on (dist2, index)
    if (k == 0) return heap;
    auto heap_less = [](const Hit& a, const Hit& b) {
      return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
    };
    scan_rings(qx, qy, [&](std::size_t i, double d2) {
      if (i == skip) return;
      Hit h{i, d2};
      if (heap.size() < k) {
        heap.push_back(h);
        std::push_heap(heap.begin(), heap.end(), heap_less);
      } else if (heap_less(h, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), heap_less);
        heap.back() = h;
        std::push_heap(heap.begin(), heap.end(), heap_less);
      }
    }, [&](double bound) {
      return heap.size() == k && heap.front().dist2 <= bound * bound;
    });
    std::sort(heap.begin(), heap.end(), heap_less);
    return heap;
  }

 private:
  std::size_t bucket_of(double x, double y) const {
    int bx = static_cast<int>(std::floor((x - x0_) / cw_));
    int by = static_cast<int>(std::floor((y - y0_) / ch_));
    bx = std::clamp(bx, 0, nbx_ - 1);
    by = std::clamp(by, 0, nby_ - 1);
    return static_cast<std::size_t>(by) * nbx_ + bx;
  }

  // Expanding Chebyshev rings around the query bucket. `done(bound)` is
  // consulted between rings with a lower bound on any unscanned distance.
  template <typename Visit, typename Done>
  void scan_rings(double qx, double qy, Visit visit, Done done) const {
    if (xs_.empty()) return;
    int bx = std::clamp(static_cast<int>(std::floor((qx - x0_) / cw_)), 0, nbx_ - 1);
    int by = std::clamp(static_cast<int>(std::floor((qy - y0_) / ch_)), 0, nby_ - 1);
    const int rmax = std::max(nbx_, nby_);
    for (int r = 0; r <= rmax; ++r) {
      if (r > 0) {
        // Scanned region so far: buckets within Chebyshev distance r-1.
        const double rx0 = x0_ + (bx - (r - 1)) * cw_;
        const double rx1 = x0_ + (bx + r) * cw_;
        const double ry0 = y0_ + (by - (r - 1)) * ch_;
        const double ry1 = y0_ + (by + r) * ch_;
        const double bound = std::max(
            0.0, std::min(std::min(qx - rx0, rx1 - qx), std::min(qy - ry0, ry1 - qy)));
        if (done(bound)) return;
        const bool covered = bx - (r - 1) <= 0 && bx + (r - 1) >= nbx_ - 1 &&
                             by - (r - 1) <= 0 && by + (r - 1) >= nby_ - 1;
        if (covered) return;
      }
      for (int j = by - r; j <= by + r; ++j) {
        if (j < 0 || j >= nby_) continue;
        for (int i = bx - r; i <= bx + r; ++i) {
          if (i < 0 || i >= nbx_) continue;
          if (std::max(std::abs(i - bx), std::abs(j - by)) != r) continue;
          const std::size_t b = static_cast<std::size_t>(j) * nbx_ + i;
          for (std::size_t s = offsets_[b]; s < offsets_[b + 1]; ++s) {
            const std::size_t id = ids_[s];
            const double dx = xs_[id] - qx;
            const double dy = ys_[id] - qy;
            visit(id, dx * dx + dy * dy);
          }
        }
      }
    }
  }

  std::vector<double> xs_, ys_;
  double x0_ = 0.0, y0_ = 0.0, cw_ = 1.0, ch_ = 1.0;
  int nbx_ = 1, nby_ = 1;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> ids_;
};

}  // namespace aeromag
