#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aeromag/classifier.hpp"
#include "aeromag/euler.hpp"
#include "aeromag/filters.hpp"
#include "aeromag/geodata.hpp"
#include "aeromag/products.hpp"
#include "aeromag/synthetics.hpp"

namespace aeromag {

struct SyntheticSourceSpec {
  enum class Kind { homogeneous, dipole };
  Kind kind = Kind::homogeneous;
  HomogeneousSource homogeneous;
  DipoleSource dipole;
};

struct SyntheticInput {
  std::vector<SyntheticSourceSpec> sources;
  GridGeoref georef;
  double noise_sigma = 0.0;
  double field_inclination = 90.0;  // placeholder ambient field, documented
  double field_declination = 0.0;
};

struct GriddingConfig {
  std::string method = "none";  // none | nearest | kriging
  std::optional<GridGeoref> georef;
  double max_radius = 200.0;
  int neighborhood = 16;
  std::optional<VariogramModel> variogram;  // default derived when absent
};

struct FilterStep {
  std::string op;  // detrend | fill_nodata | upward_continue | lowpass
  int degree = 1;
  double height = 0.0;
  double cutoff_wavelength = 0.0;
};

struct StatsToggles {
  bool pca = true;
  bool csr = true;
  bool nns = true;
  bool descriptive = true;
};

struct ClassifierStage {
  bool enable = false;
  TrainingConfig training;
};

struct ProductsConfig {
  std::vector<ProfileSpec> profiles;  // defaults to center E-W + N-S lines
  double histogram_bin_width = 50.0;
  double anisotropy_threshold = 1.5;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string points_csv;  // either a points file or a synthetic input
  std::optional<SyntheticInput> synthetic;
  GriddingConfig gridding;
  std::vector<FilterStep> filters;
  SpectralPlan spectral_plan;
  EulerConfig euler;
  double cluster_radius = 0.0;  // <= 0 selects 3 * cell_size
  StatsToggles stats;
  ClassifierStage classifier;
  ProductsConfig products;

  void validate() const;
  std::string to_json_text() const;
  static PipelineConfig from_json_text(const std::string& text);
  static PipelineConfig from_json_file(const std::string& path);
};

struct ManifestEntry {
  std::string name;
  std::string fnv1a64;
};

struct Manifest {
  std::vector<ManifestEntry> files;
  std::string config_snapshot;  // JSON text
  bool complete = false;

  std::string to_json_text() const;
};

// Runs load/synthesize -> grid -> filters -> derivatives -> sweep ->
// cluster -> stats -> optional classifier -> products, writing every
// artifact under out_dir plus manifest.json. Identical config and seed give
// identical artifact bytes regardless of thread count.
//
// Solutions are reported as depths below the original observation surface:
// upward continuation steps shift the datum and the sweep output is
// corrected by the accumulated height.
Manifest run_pipeline(const PipelineConfig& config, const std::string& out_dir);

enum class DemoPreset { one_source, two_source, noisy_survey };

DemoPreset demo_preset_from_name(const std::string& name);

// Writes a ready-to-run demo.json (and input data for presets that grid
// from points) under out_dir; returns the config path.
std::string synth_demo(DemoPreset preset, const std::string& out_dir);

}  // namespace aeromag
