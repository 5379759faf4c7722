#include "aeromag/products.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <json.hpp>

namespace aeromag {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Reciprocal compass pairs at 22.5 degree steps of azimuth from north.
const char* kSectors[8] = {"N-S",  "NNE-SSW", "NE-SW", "ENE-WSW",
                           "E-W",  "ESE-WNW", "NW-SE", "NNW-SSE"};

}  // namespace

void ProfileSpec::validate() const {
  if (!(half_width > 0.0)) throw ConfigError("profile: half_width must be > 0");
}

ProfileSection extract_profile(const SolutionSet& set, const ProfileSpec& spec) {
  spec.validate();
  ProfileSection section;
  section.spec = spec;
  for (const EulerSolution& s : set.solutions) {
    const double cross = (spec.axis == ProfileAxis::east_west) ? s.y0 : s.x0;
    if (std::abs(cross - spec.center) > spec.half_width) continue;
    ProfileRecord rec;
    rec.along = (spec.axis == ProfileAxis::east_west) ? s.x0 : s.y0;
    rec.z0 = s.z0;
    rec.si = s.si;
    rec.rms = s.rms;
    rec.x0 = s.x0;
    rec.y0 = s.y0;
    section.records.push_back(rec);
  }
  std::sort(section.records.begin(), section.records.end(),
            [](const ProfileRecord& a, const ProfileRecord& b) {
              return a.along < b.along || (a.along == b.along && a.z0 < b.z0);
            });
  return section;
}

double DepthHistogram::cumulative_fraction(double depth) const {
  if (sorted_depths_.empty()) return 0.0;
  const auto it = std::upper_bound(sorted_depths_.begin(), sorted_depths_.end(), depth);
  return static_cast<double>(it - sorted_depths_.begin()) /
         static_cast<double>(sorted_depths_.size());
}

DepthHistogram depth_histogram(const SolutionSet& set, double bin_width) {
  if (!(bin_width > 0.0)) throw ConfigError("depth_histogram: bin_width must be > 0");
  if (set.solutions.empty())
    throw DataError("EmptySolutionSet: depth histogram needs solutions");

  DepthHistogram h;
  h.bin_width = bin_width;
  h.sorted_depths_.reserve(set.solutions.size());
  for (const EulerSolution& s : set.solutions) h.sorted_depths_.push_back(s.z0);
  std::sort(h.sorted_depths_.begin(), h.sorted_depths_.end());

  const double max_depth = h.sorted_depths_.back();
  const std::size_t n_bins =
      static_cast<std::size_t>(std::floor(std::max(max_depth, 0.0) / bin_width)) + 1;
  h.counts.assign(n_bins, 0);
  for (double z : h.sorted_depths_) {
    std::size_t bin = static_cast<std::size_t>(std::floor(z / bin_width));
    if (bin >= n_bins) bin = n_bins - 1;
    h.counts[bin]++;
  }
  h.bin_edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) h.bin_edges[i] = static_cast<double>(i) * bin_width;
  h.total = h.sorted_depths_.size();
  return h;
}

TrendReport trend_analysis(const SolutionSet& set, double anisotropy_threshold) {
  const std::size_t n = set.solutions.size();
  if (n < 3) throw DataError("TooFewPoints: trend analysis needs >= 3 solutions");

  double mx = 0.0, my = 0.0;
  for (const EulerSolution& s : set.solutions) {
    mx += s.x0;
    my += s.y0;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const EulerSolution& s : set.solutions) {
    const double dx = s.x0 - mx;
    const double dy = s.y0 - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  sxx /= static_cast<double>(n - 1);
  sxy /= static_cast<double>(n - 1);
  syy /= static_cast<double>(n - 1);

  // Closed-form 2x2 symmetric eigendecomposition.
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
  const double l1 = 0.5 * tr + disc;
  const double l2 = std::max(0.5 * tr - disc, 0.0);
  if (!(l1 > 0.0)) throw NumericalError("DegenerateScatter: positional covariance is zero");

  // Leading eigenvector; azimuth measured clockwise from north.
  double vx, vy;
  if (std::abs(sxy) > 1e-300) {
    vx = l1 - syy;
    vy = sxy;
  } else if (sxx >= syy) {
    vx = 1.0;
    vy = 0.0;
  } else {
    vx = 0.0;
    vy = 1.0;
  }
  double azimuth = std::atan2(vx, vy) * kRadToDeg;
  if (azimuth < 0.0) azimuth += 180.0;
  if (azimuth >= 180.0) azimuth -= 180.0;

  TrendReport report;
  report.principal_azimuth = azimuth;
  report.anisotropy_ratio = l1 / std::max(l2, l1 * 1e-15);
  if (report.anisotropy_ratio < anisotropy_threshold) {
    report.sector_label = "NONE";
  } else {
    const int sector = static_cast<int>(std::floor(azimuth / 22.5 + 0.5)) % 8;
    report.sector_label = kSectors[sector];
  }
  return report;
}

void write_profile_csv(const ProfileSection& section, std::ostream& out) {
  out << "along,z0,si,rms,x0,y0\n";
  for (const ProfileRecord& r : section.records)
    out << fmt17(r.along) << ',' << fmt17(r.z0) << ',' << fmt17(r.si) << ','
        << fmt17(r.rms) << ',' << fmt17(r.x0) << ',' << fmt17(r.y0) << '\n';
}

void write_histogram_csv(const DepthHistogram& histogram, std::ostream& out) {
  out << "bin_low,bin_high,count\n";
  for (std::size_t i = 0; i < histogram.counts.size(); ++i)
    out << fmt17(histogram.bin_edges[i]) << ',' << fmt17(histogram.bin_edges[i + 1]) << ','
        << histogram.counts[i] << '\n';
}

std::string trend_report_json(const TrendReport& report) {
  nlohmann::ordered_json j;
  j["principal_azimuth_deg"] = report.principal_azimuth;
  j["anisotropy_ratio"] = report.anisotropy_ratio;
  j["sector"] = report.sector_label;
  return j.dump(2) + "\n";
}

}  // namespace aeromag
