#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "aeromag/euler.hpp"

namespace aeromag {

enum class ProfileAxis { east_west, north_south };

struct ProfileSpec {
  ProfileAxis axis = ProfileAxis::east_west;
  double center = 0.0;      // northing for E-W, easting for N-S
  double half_width = 0.0;  // corridor half width, meters
  std::string label;

  void validate() const;
};

struct ProfileRecord {
  double along = 0.0;  // easting for E-W, northing for N-S
  double z0 = 0.0;
  double si = 0.0;
  double rms = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;
};

struct ProfileSection {
  ProfileSpec spec;
  std::vector<ProfileRecord> records;  // sorted by along, ties by z0

  std::array<std::size_t, 2> record_matrix_shape() const { return {records.size(), 6}; }
};

// Solutions whose cross-track coordinate lies within half_width of the
// center line, inclusive.
ProfileSection extract_profile(const SolutionSet& set, const ProfileSpec& spec);

struct DepthHistogram {
  double bin_width = 50.0;
  std::vector<double> bin_edges;  // counts.size() + 1, from 0
  std::vector<std::size_t> counts;
  std::size_t total = 0;

  // Fraction of solutions with z0 <= depth.
  double cumulative_fraction(double depth) const;

 private:
  friend DepthHistogram depth_histogram(const SolutionSet&, double);
  std::vector<double> sorted_depths_;
};

// Half-open bins [k*bw, (k+1)*bw) covering 0 to the deepest solution.
DepthHistogram depth_histogram(const SolutionSet& set, double bin_width);

struct TrendReport {
  double principal_azimuth = 0.0;  // degrees clockwise from north, [0, 180)
  double anisotropy_ratio = 1.0;   // lambda1 / lambda2, >= 1
  std::string sector_label;        // 16-point rose folded to reciprocal pairs, or NONE
};

// Principal axis of the (x0, y0) scatter. The sector label is NONE when the
// anisotropy ratio is below the threshold.
TrendReport trend_analysis(const SolutionSet& set, double anisotropy_threshold = 1.5);

// CSV: along,z0,si,rms,x0,y0
void write_profile_csv(const ProfileSection& section, std::ostream& out);
// CSV: bin_low,bin_high,count
void write_histogram_csv(const DepthHistogram& histogram, std::ostream& out);
std::string trend_report_json(const TrendReport& report);

}  // namespace aeromag
