#include "aeromag/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aeromag/spatialstats.hpp"

namespace aeromag {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError("ConfigInvalid at " + path + ": " + what);
}

const json& require_key(const json& j, const std::string& path, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) config_fail(path + "." + key, "missing");
  return *it;
}

template <typename T>
T value_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    config_fail(path, e.what());
  }
}

template <typename T>
T opt_value(const json& j, const std::string& path, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  return value_as<T>(*it, path + "." + key);
}

GridGeoref georef_from_json(const json& j, const std::string& path) {
  GridGeoref g;
  g.x_origin = value_as<double>(require_key(j, path, "x_origin"), path + ".x_origin");
  g.y_origin = value_as<double>(require_key(j, path, "y_origin"), path + ".y_origin");
  g.cell_size = value_as<double>(require_key(j, path, "cell_size"), path + ".cell_size");
  g.n_cols = value_as<int>(require_key(j, path, "n_cols"), path + ".n_cols");
  g.n_rows = value_as<int>(require_key(j, path, "n_rows"), path + ".n_rows");
  return g;
}

ordered_json georef_to_json(const GridGeoref& g) {
  return {{"x_origin", g.x_origin},
          {"y_origin", g.y_origin},
          {"cell_size", g.cell_size},
          {"n_cols", g.n_cols},
          {"n_rows", g.n_rows}};
}

VariogramModel variogram_from_json(const json& j, const std::string& path) {
  VariogramModel v;
  const std::string kind = opt_value<std::string>(j, path, "kind", "spherical");
  if (kind == "spherical") v.kind = VariogramKind::spherical;
  else if (kind == "exponential") v.kind = VariogramKind::exponential;
  else if (kind == "gaussian") v.kind = VariogramKind::gaussian;
  else config_fail(path + ".kind", "unknown variogram kind '" + kind + "'");
  v.nugget = opt_value<double>(j, path, "nugget", 0.0);
  v.sill = opt_value<double>(j, path, "sill", 1.0);
  v.range_m = opt_value<double>(j, path, "range_m", 1000.0);
  return v;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string grid_text(const Grid& grid) {
  std::ostringstream out;
  write_grid(grid, out);
  return out.str();
}

std::string solutions_text(const SolutionSet& set) {
  std::ostringstream out;
  write_solutions_csv(set, out);
  return out.str();
}

struct ArtifactWriter {
  std::string dir;
  std::vector<ManifestEntry> entries;

  void write(const std::string& name, const std::string& content) {
    const std::filesystem::path path = std::filesystem::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write artifact: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    entries.push_back({name, hash_hex(fnv1a64(content))});
  }
};

Grid synthesize(const SyntheticInput& input, std::uint64_t seed) {
  input.georef.validate();
  if (input.sources.empty())
    throw ConfigError("ConfigInvalid at input.synthetic.sources: empty");
  Grid field(input.georef);
  for (const SyntheticSourceSpec& spec : input.sources) {
    const Grid part =
        spec.kind == SyntheticSourceSpec::Kind::homogeneous
            ? synth_homogeneous(spec.homogeneous, input.georef)
            : synth_dipole(spec.dipole, input.georef, input.field_inclination,
                           input.field_declination);
    for (std::size_t i = 0; i < field.values.size(); ++i) field.values[i] += part.values[i];
  }
  if (input.noise_sigma > 0.0)
    field = add_noise(field, input.noise_sigma, subseed(seed, "noise"));
  return field;
}

std::string spacing_report_json(const SpacingReport& report) {
  ordered_json j;
  j["min_spacing"] = report.min_spacing;
  j["median_spacing"] = report.median_spacing;
  j["max_spacing"] = report.max_spacing;
  j["recommended_cell_size"] = report.recommended_cell_size;
  j["evaluated_cell_size"] = report.evaluated_cell_size;
  j["aliasing_warning"] = report.aliasing_warning;
  return j.dump(2) + "\n";
}

GridGeoref derive_georef(const SurveyPointSet& points, double cell_size) {
  double xmin = points.points[0].x, xmax = xmin;
  double ymin = points.points[0].y, ymax = ymin;
  for (const SurveyPoint& p : points.points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  GridGeoref g;
  g.cell_size = cell_size;
  g.x_origin = xmin - 0.5 * cell_size;
  g.y_origin = ymin - 0.5 * cell_size;
  g.n_cols = std::max(2, static_cast<int>(std::floor((xmax - xmin) / cell_size)) + 1);
  g.n_rows = std::max(2, static_cast<int>(std::floor((ymax - ymin) / cell_size)) + 1);
  return g;
}

}  // namespace

void PipelineConfig::validate() const {
  const bool has_points = !points_csv.empty();
  const bool has_synth = synthetic.has_value();
  if (has_points == has_synth)
    throw ConfigError(
        "ConfigInvalid at input: exactly one of points_csv or synthetic is required");
  if (has_points && gridding.method != "nearest" && gridding.method != "kriging")
    throw ConfigError("ConfigInvalid at gridding.method: points input needs nearest or kriging");
  if (gridding.method != "none" && gridding.method != "nearest" &&
      gridding.method != "kriging")
    throw ConfigError("ConfigInvalid at gridding.method: unknown method '" + gridding.method +
                      "'");
  for (std::size_t i = 0; i < filters.size(); ++i) {
    const std::string& op = filters[i].op;
    if (op != "detrend" && op != "fill_nodata" && op != "upward_continue" && op != "lowpass")
      throw ConfigError("ConfigInvalid at filters[" + std::to_string(i) +
                        "].op: unknown filter '" + op + "'");
  }
  spectral_plan.validate();
  euler.validate();
  classifier.training.validate();
  for (const ProfileSpec& p : products.profiles) p.validate();
  if (!(products.histogram_bin_width > 0.0))
    throw ConfigError("ConfigInvalid at products.histogram_bin_width: must be > 0");
}

std::string PipelineConfig::to_json_text() const {
  ordered_json j;
  j["seed"] = seed;
  ordered_json input;
  if (!points_csv.empty()) {
    input["points_csv"] = points_csv;
  } else if (synthetic) {
    ordered_json s;
    s["georef"] = georef_to_json(synthetic->georef);
    ordered_json sources = ordered_json::array();
    for (const SyntheticSourceSpec& spec : synthetic->sources) {
      ordered_json src;
      if (spec.kind == SyntheticSourceSpec::Kind::homogeneous) {
        src["kind"] = "homogeneous";
        src["x0"] = spec.homogeneous.x0;
        src["y0"] = spec.homogeneous.y0;
        src["z0"] = spec.homogeneous.z0;
        src["amplitude"] = spec.homogeneous.amplitude;
        src["si"] = spec.homogeneous.si;
        src["base"] = spec.homogeneous.base;
      } else {
        src["kind"] = "dipole";
        src["x0"] = spec.dipole.x0;
        src["y0"] = spec.dipole.y0;
        src["z0"] = spec.dipole.z0;
        src["moment"] = spec.dipole.moment;
        src["inclination"] = spec.dipole.inclination;
        src["declination"] = spec.dipole.declination;
      }
      sources.push_back(src);
    }
    s["sources"] = sources;
    s["noise_sigma"] = synthetic->noise_sigma;
    s["field_inclination"] = synthetic->field_inclination;
    s["field_declination"] = synthetic->field_declination;
    input["synthetic"] = s;
  }
  j["input"] = input;

  ordered_json g;
  g["method"] = gridding.method;
  if (gridding.georef) g["georef"] = georef_to_json(*gridding.georef);
  g["max_radius"] = gridding.max_radius;
  g["neighborhood"] = gridding.neighborhood;
  if (gridding.variogram) {
    const char* kinds[] = {"spherical", "exponential", "gaussian"};
    g["variogram"] = {{"kind", kinds[static_cast<int>(gridding.variogram->kind)]},
                      {"nugget", gridding.variogram->nugget},
                      {"sill", gridding.variogram->sill},
                      {"range_m", gridding.variogram->range_m}};
  }
  j["gridding"] = g;

  ordered_json fs = ordered_json::array();
  for (const FilterStep& step : filters) {
    ordered_json f;
    f["op"] = step.op;
    if (step.op == "detrend") f["degree"] = step.degree;
    if (step.op == "upward_continue") f["height"] = step.height;
    if (step.op == "lowpass") f["cutoff_wavelength"] = step.cutoff_wavelength;
    fs.push_back(f);
  }
  j["filters"] = fs;

  j["spectral_plan"] = {{"pad_factor", spectral_plan.pad_factor},
                        {"taper", spectral_plan.taper}};
  j["euler"] = {{"window_size", euler.window_size},
                {"si_set", euler.si_set},
                {"rms_accept", euler.rms_accept},
                {"max_depth", euler.max_depth},
                {"depth_uncertainty_max", euler.depth_uncertainty_max},
                {"window_step", euler.window_step}};
  j["cluster_radius"] = cluster_radius;
  j["stats"] = {{"pca", stats.pca},
                {"csr", stats.csr},
                {"nns", stats.nns},
                {"descriptive", stats.descriptive}};
  j["classifier"] = {
      {"enable", classifier.enable},
      {"optimizer", classifier.training.optimizer == Optimizer::scaled_conjugate_gradient
                        ? "scaled_conjugate_gradient"
                        : "gradient_descent_momentum"},
      {"max_epochs", classifier.training.max_epochs},
      {"tolerance", classifier.training.tolerance},
      {"split", classifier.training.split},
      {"hidden", classifier.training.hidden}};

  ordered_json prods;
  ordered_json profs = ordered_json::array();
  for (const ProfileSpec& p : products.profiles) {
    profs.push_back({{"axis", p.axis == ProfileAxis::east_west ? "east_west" : "north_south"},
                     {"center", p.center},
                     {"half_width", p.half_width},
                     {"label", p.label}});
  }
  prods["profiles"] = profs;
  prods["histogram_bin_width"] = products.histogram_bin_width;
  prods["anisotropy_threshold"] = products.anisotropy_threshold;
  j["products"] = prods;
  return j.dump(2) + "\n";
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("ConfigInvalid: JSON parse failure: ") + e.what());
  }

  PipelineConfig c;
  c.seed = opt_value<std::uint64_t>(j, "", "seed", 0);

  const json& input = require_key(j, "", "input");
  if (input.contains("points_csv")) {
    c.points_csv = value_as<std::string>(input["points_csv"], "input.points_csv");
    if (c.points_csv.empty()) config_fail("input.points_csv", "empty path");
  }
  if (input.contains("synthetic")) {
    const json& s = input["synthetic"];
    SyntheticInput synth;
    synth.georef = georef_from_json(require_key(s, "input.synthetic", "georef"),
                                    "input.synthetic.georef");
    const json& sources = require_key(s, "input.synthetic", "sources");
    if (!sources.is_array()) config_fail("input.synthetic.sources", "must be an array");
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const std::string path = "input.synthetic.sources[" + std::to_string(i) + "]";
      const json& src = sources[i];
      SyntheticSourceSpec spec;
      const std::string kind = opt_value<std::string>(src, path, "kind", "homogeneous");
      if (kind == "homogeneous") {
        spec.kind = SyntheticSourceSpec::Kind::homogeneous;
        spec.homogeneous.x0 = value_as<double>(require_key(src, path, "x0"), path + ".x0");
        spec.homogeneous.y0 = value_as<double>(require_key(src, path, "y0"), path + ".y0");
        spec.homogeneous.z0 = value_as<double>(require_key(src, path, "z0"), path + ".z0");
        spec.homogeneous.amplitude =
            value_as<double>(require_key(src, path, "amplitude"), path + ".amplitude");
        spec.homogeneous.si = value_as<double>(require_key(src, path, "si"), path + ".si");
        spec.homogeneous.base = opt_value<double>(src, path, "base", 0.0);
      } else if (kind == "dipole") {
        spec.kind = SyntheticSourceSpec::Kind::dipole;
        spec.dipole.x0 = value_as<double>(require_key(src, path, "x0"), path + ".x0");
        spec.dipole.y0 = value_as<double>(require_key(src, path, "y0"), path + ".y0");
        spec.dipole.z0 = value_as<double>(require_key(src, path, "z0"), path + ".z0");
        spec.dipole.moment =
            value_as<double>(require_key(src, path, "moment"), path + ".moment");
        spec.dipole.inclination = opt_value<double>(src, path, "inclination", 90.0);
        spec.dipole.declination = opt_value<double>(src, path, "declination", 0.0);
      } else {
        config_fail(path + ".kind", "unknown source kind '" + kind + "'");
      }
      synth.sources.push_back(spec);
    }
    synth.noise_sigma = opt_value<double>(s, "input.synthetic", "noise_sigma", 0.0);
    synth.field_inclination = opt_value<double>(s, "input.synthetic", "field_inclination", 90.0);
    synth.field_declination = opt_value<double>(s, "input.synthetic", "field_declination", 0.0);
    c.synthetic = synth;
  }

  if (j.contains("gridding")) {
    const json& g = j["gridding"];
    c.gridding.method = opt_value<std::string>(g, "gridding", "method",
                                               c.points_csv.empty() ? "none" : "nearest");
    if (g.contains("georef")) c.gridding.georef = georef_from_json(g["georef"], "gridding.georef");
    c.gridding.max_radius = opt_value<double>(g, "gridding", "max_radius", 200.0);
    c.gridding.neighborhood = opt_value<int>(g, "gridding", "neighborhood", 16);
    if (g.contains("variogram"))
      c.gridding.variogram = variogram_from_json(g["variogram"], "gridding.variogram");
  } else if (!c.points_csv.empty()) {
    c.gridding.method = "nearest";
  }

  if (j.contains("filters")) {
    const json& fs = j["filters"];
    if (!fs.is_array()) config_fail("filters", "must be an array");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const std::string path = "filters[" + std::to_string(i) + "]";
      FilterStep step;
      step.op = value_as<std::string>(require_key(fs[i], path, "op"), path + ".op");
      step.degree = opt_value<int>(fs[i], path, "degree", 1);
      step.height = opt_value<double>(fs[i], path, "height", 0.0);
      step.cutoff_wavelength = opt_value<double>(fs[i], path, "cutoff_wavelength", 0.0);
      c.filters.push_back(step);
    }
  }

  if (j.contains("spectral_plan")) {
    const json& p = j["spectral_plan"];
    c.spectral_plan.pad_factor = opt_value<double>(p, "spectral_plan", "pad_factor", 2.0);
    c.spectral_plan.taper = opt_value<double>(p, "spectral_plan", "taper", 0.1);
  }

  if (j.contains("euler")) {
    const json& e = j["euler"];
    c.euler.window_size = opt_value<int>(e, "euler", "window_size", 3);
    c.euler.si_set = opt_value<std::vector<double>>(e, "euler", "si_set", c.euler.si_set);
    c.euler.rms_accept = opt_value<double>(e, "euler", "rms_accept", 8.9e-3);
    c.euler.max_depth = opt_value<double>(e, "euler", "max_depth", 1500.0);
    c.euler.depth_uncertainty_max =
        opt_value<double>(e, "euler", "depth_uncertainty_max", 0.15);
    c.euler.window_step = opt_value<int>(e, "euler", "window_step", 1);
  }

  c.cluster_radius = opt_value<double>(j, "", "cluster_radius", 0.0);

  if (j.contains("stats")) {
    const json& s = j["stats"];
    c.stats.pca = opt_value<bool>(s, "stats", "pca", true);
    c.stats.csr = opt_value<bool>(s, "stats", "csr", true);
    c.stats.nns = opt_value<bool>(s, "stats", "nns", true);
    c.stats.descriptive = opt_value<bool>(s, "stats", "descriptive", true);
  }

  if (j.contains("classifier")) {
    const json& cl = j["classifier"];
    c.classifier.enable = opt_value<bool>(cl, "classifier", "enable", false);
    const std::string opt = opt_value<std::string>(cl, "classifier", "optimizer",
                                                   "scaled_conjugate_gradient");
    if (opt == "scaled_conjugate_gradient")
      c.classifier.training.optimizer = Optimizer::scaled_conjugate_gradient;
    else if (opt == "gradient_descent_momentum")
      c.classifier.training.optimizer = Optimizer::gradient_descent_momentum;
    else
      config_fail("classifier.optimizer", "unknown optimizer '" + opt + "'");
    c.classifier.training.max_epochs = opt_value<int>(cl, "classifier", "max_epochs", 200);
    c.classifier.training.tolerance = opt_value<double>(cl, "classifier", "tolerance", 0.0);
    c.classifier.training.split = opt_value<double>(cl, "classifier", "split", 0.8);
    c.classifier.training.hidden = opt_value<int>(cl, "classifier", "hidden", 100);
  }

  if (j.contains("products")) {
    const json& p = j["products"];
    if (p.contains("profiles")) {
      const json& profs = p["profiles"];
      if (!profs.is_array()) config_fail("products.profiles", "must be an array");
      for (std::size_t i = 0; i < profs.size(); ++i) {
        const std::string path = "products.profiles[" + std::to_string(i) + "]";
        ProfileSpec spec;
        const std::string axis =
            opt_value<std::string>(profs[i], path, "axis", "east_west");
        if (axis == "east_west") spec.axis = ProfileAxis::east_west;
        else if (axis == "north_south") spec.axis = ProfileAxis::north_south;
        else config_fail(path + ".axis", "unknown axis '" + axis + "'");
        spec.center = value_as<double>(require_key(profs[i], path, "center"), path + ".center");
        spec.half_width =
            value_as<double>(require_key(profs[i], path, "half_width"), path + ".half_width");
        spec.label = opt_value<std::string>(profs[i], path, "label",
                                            "profile" + std::to_string(i));
        c.products.profiles.push_back(spec);
      }
    }
    c.products.histogram_bin_width =
        opt_value<double>(p, "products", "histogram_bin_width", 50.0);
    c.products.anisotropy_threshold =
        opt_value<double>(p, "products", "anisotropy_threshold", 1.5);
  }

  c.validate();
  return c;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string Manifest::to_json_text() const {
  ordered_json j;
  ordered_json files_j = ordered_json::array();
  for (const ManifestEntry& e : files)
    files_j.push_back({{"name", e.name}, {"fnv1a64", e.fnv1a64}});
  j["files"] = files_j;
  j["complete"] = complete;
  j["config"] = json::parse(config_snapshot);
  return j.dump(2) + "\n";
}

Manifest run_pipeline(const PipelineConfig& config, const std::string& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  ArtifactWriter artifacts{out_dir, {}};

  // Input stage: load-and-grid or synthesize.
  Grid working;
  if (config.synthetic) {
    working = synthesize(*config.synthetic, config.seed);
  } else {
    const SurveyPointSet points = load_points_file(config.points_csv);
    std::optional<double> requested_cell;
    if (config.gridding.georef) requested_cell = config.gridding.georef->cell_size;
    const SpacingReport spacing = sample_spacing_report(points, requested_cell);
    artifacts.write("spacing_report.json", spacing_report_json(spacing));
    const GridGeoref georef = config.gridding.georef
                                  ? *config.gridding.georef
                                  : derive_georef(points, spacing.recommended_cell_size);
    if (config.gridding.method == "nearest") {
      working = grid_nearest(points, georef, config.gridding.max_radius);
    } else {
      const VariogramModel variogram =
          config.gridding.variogram ? *config.gridding.variogram : default_variogram(points);
      KrigingResult result =
          grid_kriging(points, georef, variogram, config.gridding.neighborhood);
      working = std::move(result.grid);
    }
  }
  artifacts.write("grid.asc", grid_text(working));

  // Filter chain. Upward continuation moves the datum; depths are corrected
  // back to the original surface after the sweep.
  if (working.any_masked()) working = fill_nodata_nearest(working);
  double datum_offset = 0.0;
  for (const FilterStep& step : config.filters) {
    if (step.op == "detrend") {
      working = detrend_poly(working, step.degree).residual;
    } else if (step.op == "fill_nodata") {
      working = fill_nodata_nearest(working);
    } else if (step.op == "upward_continue") {
      working = upward_continue(working, step.height, config.spectral_plan);
      datum_offset += step.height;
    } else if (step.op == "lowpass") {
      working = lowpass(working, step.cutoff_wavelength, config.spectral_plan);
    }
  }
  const std::string filtered_text = grid_text(working);
  artifacts.write("filtered.asc", filtered_text);

  const Grid tx = derivative(working, Axis::x, config.spectral_plan);
  const Grid ty = derivative(working, Axis::y, config.spectral_plan);
  const Grid tz = derivative(working, Axis::z, config.spectral_plan);
  artifacts.write("tx.asc", grid_text(tx));
  artifacts.write("ty.asc", grid_text(ty));
  artifacts.write("tz.asc", grid_text(tz));

  SolutionSet swept = euler_sweep(working, tx, ty, tz, config.euler);
  swept.grid_id = "fnv1a64:" + hash_hex(fnv1a64(filtered_text));
  if (datum_offset > 0.0) {
    std::vector<EulerSolution> kept;
    kept.reserve(swept.solutions.size());
    for (EulerSolution s : swept.solutions) {
      s.z0 -= datum_offset;
      if (s.z0 > 0.0) {
        kept.push_back(s);
      } else {
        swept.rejected_counts["depth_range"]++;
      }
    }
    swept.solutions = std::move(kept);
  }
  artifacts.write("solutions.csv", solutions_text(swept));
  artifacts.write("solutions.json", solution_provenance_json(swept));

  const double radius =
      config.cluster_radius > 0.0 ? config.cluster_radius : 3.0 * working.georef.cell_size;
  std::vector<std::size_t> cluster_sizes;
  const SolutionSet clustered = filter_cluster(swept, radius, &cluster_sizes);
  artifacts.write("clustered.csv", solutions_text(clustered));
  {
    ordered_json j;
    j["cluster_radius"] = radius;
    j["cluster_sizes"] = cluster_sizes;
    j["n_clusters"] = clustered.solutions.size();
    j["n_input_solutions"] = swept.solutions.size();
    artifacts.write("clustered.json", j.dump(2) + "\n");
  }

  // Statistics over the deduplicated source estimates.
  const std::size_t nc = clustered.solutions.size();
  if (nc >= 2) {
    std::vector<double> xs(nc), ys(nc), zs(nc);
    for (std::size_t i = 0; i < nc; ++i) {
      xs[i] = clustered.solutions[i].x0;
      ys[i] = clustered.solutions[i].y0;
      zs[i] = clustered.solutions[i].z0;
    }
    if (config.stats.pca) {
      Eigen::MatrixXd data(static_cast<Eigen::Index>(nc), 3);
      for (std::size_t i = 0; i < nc; ++i) {
        data(static_cast<Eigen::Index>(i), 0) = xs[i];
        data(static_cast<Eigen::Index>(i), 1) = ys[i];
        data(static_cast<Eigen::Index>(i), 2) = zs[i];
      }
      artifacts.write("pca.json", pca_result_json(pca(data)));
    }
    if (config.stats.csr)
      artifacts.write("csr.json",
                      csr_report_json(csr_tests(xs, ys, working.georef.area())));
    if (config.stats.nns) {
      const NnsReport nns = nearest_neighbor_stats(xs, ys);
      artifacts.write("nns.json", nns_report_json(nns));
      std::ostringstream out;
      write_nn_distances_csv(nns, out);
      artifacts.write("nn_distances.csv", out.str());
    }
    if (config.stats.descriptive)
      artifacts.write("depth_stats.json", descriptive_stats_json(descriptive_stats(zs)));
  }

  // Classifier trains on the accepted (pre-cluster) cloud.
  if (config.classifier.enable && swept.solutions.size() >= 12) {
    const auto [features, labels] = build_features(swept, tx, ty);
    TrainingConfig training = config.classifier.training;
    training.seed = subseed(config.seed, "training");
    const TrainResult trained =
        train_mlp(features, labels, training, static_cast<int>(config.euler.si_set.size()));
    MlpModel model = trained.model;
    model.si_classes = config.euler.si_set;
    artifacts.write("model.json", mlp_model_json(model));

    const Eigen::MatrixXd probs = predict(model, features);
    std::vector<int> predicted(labels.size());
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      Eigen::Index arg = 0;
      probs.row(r).maxCoeff(&arg);
      predicted[static_cast<std::size_t>(r)] = static_cast<int>(arg);
    }
    {
      std::ostringstream out;
      write_confusion_csv(labels, predicted, static_cast<int>(config.euler.si_set.size()), out);
      artifacts.write("confusion.csv", out.str());
    }
    {
      std::ostringstream out;
      out << "x0,y0,z0,si,predicted_si,max_probability\n";
      for (std::size_t i = 0; i < swept.solutions.size(); ++i) {
        const EulerSolution& s = swept.solutions[i];
        out << fmt17(s.x0) << ',' << fmt17(s.y0) << ',' << fmt17(s.z0) << ',' << fmt17(s.si)
            << ',' << fmt17(config.euler.si_set[static_cast<std::size_t>(predicted[i])]) << ','
            << fmt17(probs(static_cast<Eigen::Index>(i), predicted[i])) << '\n';
      }
      artifacts.write("predictions.csv", out.str());
    }
    {
      ordered_json j;
      j["train_loss"] = trained.history.train_loss;
      j["validation_loss"] = trained.history.validation_loss;
      artifacts.write("training_history.json", j.dump(2) + "\n");
    }
  }

  // Presentation products from the dense accepted cloud.
  std::vector<ProfileSpec> profiles = config.products.profiles;
  if (profiles.empty()) {
    const GridGeoref& g = working.georef;
    ProfileSpec ew;
    ew.axis = ProfileAxis::east_west;
    ew.center = g.y_origin + 0.5 * g.height();
    ew.half_width = 5.0 * g.cell_size;
    ew.label = "ew_center";
    ProfileSpec ns;
    ns.axis = ProfileAxis::north_south;
    ns.center = g.x_origin + 0.5 * g.width();
    ns.half_width = 5.0 * g.cell_size;
    ns.label = "ns_center";
    profiles = {ew, ns};
  }
  for (const ProfileSpec& spec : profiles) {
    const ProfileSection section = extract_profile(swept, spec);
    std::ostringstream out;
    write_profile_csv(section, out);
    artifacts.write("profile_" + spec.label + ".csv", out.str());
  }
  if (!swept.solutions.empty()) {
    const DepthHistogram histogram =
        depth_histogram(swept, config.products.histogram_bin_width);
    std::ostringstream out;
    write_histogram_csv(histogram, out);
    artifacts.write("histogram.csv", out.str());
  }
  if (swept.solutions.size() >= 3)
    artifacts.write("trend.json", trend_report_json(trend_analysis(
                                      swept, config.products.anisotropy_threshold)));

  Manifest manifest;
  manifest.files = artifacts.entries;
  manifest.config_snapshot = config.to_json_text();
  manifest.complete = true;
  {
    const std::filesystem::path path = std::filesystem::path(out_dir) / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    const std::string text = manifest.to_json_text();
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
  }
  return manifest;
}

DemoPreset demo_preset_from_name(const std::string& name) {
  if (name == "one_source") return DemoPreset::one_source;
  if (name == "two_source") return DemoPreset::two_source;
  if (name == "noisy_survey") return DemoPreset::noisy_survey;
  throw ConfigError("ConfigInvalid at preset: unknown preset '" + name + "'");
}

std::string synth_demo(DemoPreset preset, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  PipelineConfig config;
  config.seed = 42;

  if (preset == DemoPreset::one_source) {
    SyntheticInput synth;
    synth.georef = GridGeoref{0.0, 0.0, 100.0, 128, 128};
    SyntheticSourceSpec spec;
    spec.kind = SyntheticSourceSpec::Kind::homogeneous;
    spec.homogeneous = {6400.0, 6400.0, 200.0, 1e8, 2.0, 0.0};
    synth.sources.push_back(spec);
    config.synthetic = synth;
    config.filters.push_back({"detrend", 1, 0.0, 0.0});
    ProfileSpec ew{ProfileAxis::east_west, 6400.0, 500.0, "ew_source"};
    ProfileSpec ns{ProfileAxis::north_south, 6400.0, 500.0, "ns_source"};
    config.products.profiles = {ew, ns};
  } else if (preset == DemoPreset::two_source) {
    SyntheticInput synth;
    synth.georef = GridGeoref{0.0, 0.0, 100.0, 160, 128};
    SyntheticSourceSpec a;
    a.kind = SyntheticSourceSpec::Kind::homogeneous;
    a.homogeneous = {6000.0, 6400.0, 300.0, 3e5, 1.0, 0.0};
    SyntheticSourceSpec b;
    b.kind = SyntheticSourceSpec::Kind::homogeneous;
    b.homogeneous = {10000.0, 6400.0, 800.0, 5.12e11, 3.0, 0.0};
    synth.sources = {a, b};
    config.synthetic = synth;
    config.filters.push_back({"detrend", 1, 0.0, 0.0});
    ProfileSpec ew{ProfileAxis::east_west, 6400.0, 500.0, "ew_sources"};
    config.products.profiles = {ew};
  } else {
    // Noisy kilometre-depth survey exercising the full points -> grid ->
    // filter -> sweep path. Points carry noise already; gridding at the
    // generating georef reconstructs the noisy field exactly.
    const GridGeoref georef{0.0, 0.0, 100.0, 256, 256};
    SyntheticInput synth;
    synth.georef = georef;
    SyntheticSourceSpec spec;
    spec.kind = SyntheticSourceSpec::Kind::homogeneous;
    spec.homogeneous = {12800.0, 12800.0, 1000.0, 2.5e9, 2.0, 50.0};
    synth.sources.push_back(spec);
    synth.noise_sigma = 25.0;  // 1% of the 2500 nT anomaly peak

    const Grid noisy = synthesize(synth, config.seed);
    SurveyPointSet points;
    points.crs_label = "local grid meters";
    points.points.reserve(noisy.size());
    for (int row = 0; row < georef.n_rows; ++row)
      for (int col = 0; col < georef.n_cols; ++col)
        points.points.push_back({georef.cell_x(col), georef.cell_y(row), noisy.at(row, col)});
    const std::filesystem::path points_path = std::filesystem::path(out_dir) / "points.csv";
    write_points_file(points, points_path.string());

    config.points_csv = points_path.string();
    config.gridding.method = "nearest";
    config.gridding.georef = georef;
    config.gridding.max_radius = 60.0;
    config.filters.push_back({"detrend", 1, 0.0, 0.0});
    config.filters.push_back({"lowpass", 1, 0.0, 600.0});
    config.cluster_radius = 400.0;
    config.classifier.enable = true;
    config.classifier.training.max_epochs = 120;
    ProfileSpec ew{ProfileAxis::east_west, 12800.0, 500.0, "ew_source"};
    config.products.profiles = {ew};
  }

  const std::filesystem::path config_path = std::filesystem::path(out_dir) / "demo.json";
  std::ofstream out(config_path, std::ios::binary);
  if (!out) throw DataError("cannot write demo config: " + config_path.string());
  const std::string text = config.to_json_text();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  return config_path.string();
}

}  // namespace aeromag
