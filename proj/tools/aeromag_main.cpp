#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "aeromag/classifier.hpp"
#include "aeromag/euler.hpp"
#include "aeromag/filters.hpp"
#include "aeromag/geodata.hpp"
#include "aeromag/pipeline.hpp"
#include "aeromag/products.hpp"
#include "aeromag/reference.hpp"
#include "aeromag/spatialstats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace aeromag;

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::int64_t seed = -1;  // -1 = keep config seed
  int threads = 0;
  bool verbose = false;
};

void log_stage(const GlobalOptions& opts, const std::string& message) {
  if (opts.verbose) std::cerr << "[aeromag] " << message << "\n";
}

PipelineConfig load_config(const GlobalOptions& opts) {
  if (opts.config_path.empty())
    throw ConfigError("ConfigInvalid: --config is required for this subcommand");
  PipelineConfig config = PipelineConfig::from_json_file(opts.config_path);
  if (opts.seed >= 0) config.seed = static_cast<std::uint64_t>(opts.seed);
  return config;
}

void write_text(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

Grid apply_filter_chain(Grid working, const PipelineConfig& config, double* datum_offset) {
  if (working.any_masked()) working = fill_nodata_nearest(working);
  for (const FilterStep& step : config.filters) {
    if (step.op == "detrend") {
      working = detrend_poly(working, step.degree).residual;
    } else if (step.op == "fill_nodata") {
      working = fill_nodata_nearest(working);
    } else if (step.op == "upward_continue") {
      working = upward_continue(working, step.height, config.spectral_plan);
      if (datum_offset) *datum_offset += step.height;
    } else if (step.op == "lowpass") {
      working = lowpass(working, step.cutoff_wavelength, config.spectral_plan);
    }
  }
  return working;
}

int run_grid(const GlobalOptions& opts) {
  const PipelineConfig config = load_config(opts);
  if (config.points_csv.empty())
    throw ConfigError("ConfigInvalid at input.points_csv: grid subcommand needs a points file");
  const SurveyPointSet points = load_points_file(config.points_csv);
  std::optional<double> requested;
  if (config.gridding.georef) requested = config.gridding.georef->cell_size;
  const SpacingReport spacing = sample_spacing_report(points, requested);
  {
    std::ostringstream j;
    j << "{\n  \"median_spacing\": " << spacing.median_spacing
      << ",\n  \"recommended_cell_size\": " << spacing.recommended_cell_size
      << ",\n  \"aliasing_warning\": " << (spacing.aliasing_warning ? "true" : "false")
      << "\n}\n";
    write_text(opts.out_dir, "spacing_report.json", j.str());
  }
  GridGeoref georef;
  if (config.gridding.georef) {
    georef = *config.gridding.georef;
  } else {
    double xmin = points.points[0].x, xmax = xmin, ymin = points.points[0].y, ymax = ymin;
    for (const SurveyPoint& p : points.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    georef.cell_size = spacing.recommended_cell_size;
    georef.x_origin = xmin - 0.5 * georef.cell_size;
    georef.y_origin = ymin - 0.5 * georef.cell_size;
    georef.n_cols = std::max(2, static_cast<int>((xmax - xmin) / georef.cell_size) + 1);
    georef.n_rows = std::max(2, static_cast<int>((ymax - ymin) / georef.cell_size) + 1);
  }
  Grid grid;
  if (config.gridding.method == "kriging") {
    const VariogramModel variogram =
        config.gridding.variogram ? *config.gridding.variogram : default_variogram(points);
    grid = grid_kriging(points, georef, variogram, config.gridding.neighborhood).grid;
  } else {
    grid = grid_nearest(points, georef, config.gridding.max_radius);
  }
  std::ostringstream text;
  write_grid(grid, text);
  write_text(opts.out_dir, "grid.asc", text.str());
  log_stage(opts, "grid written to " + opts.out_dir + "/grid.asc");
  return 0;
}

int run_filter(const GlobalOptions& opts, const std::string& in_path,
               const std::string& out_name) {
  const PipelineConfig config = load_config(opts);
  Grid grid = read_grid_file(in_path);
  double datum = 0.0;
  grid = apply_filter_chain(std::move(grid), config, &datum);
  std::ostringstream text;
  write_grid(grid, text);
  write_text(opts.out_dir, out_name, text.str());
  if (datum > 0.0) log_stage(opts, "datum moved up by " + std::to_string(datum) + " m");
  return 0;
}

int run_euler(const GlobalOptions& opts, const std::string& in_path) {
  const PipelineConfig config = load_config(opts);
  const Grid working = read_grid_file(in_path);
  const Grid tx = derivative(working, Axis::x, config.spectral_plan);
  const Grid ty = derivative(working, Axis::y, config.spectral_plan);
  const Grid tz = derivative(working, Axis::z, config.spectral_plan);
  for (const auto& [name, grid] : {std::pair<const char*, const Grid*>{"tx.asc", &tx},
                                   {"ty.asc", &ty},
                                   {"tz.asc", &tz}}) {
    std::ostringstream text;
    write_grid(*grid, text);
    write_text(opts.out_dir, name, text.str());
  }
  SolutionSet swept = euler_sweep(working, tx, ty, tz, config.euler);
  {
    std::ostringstream text;
    write_solutions_csv(swept, text);
    write_text(opts.out_dir, "solutions.csv", text.str());
    write_text(opts.out_dir, "solutions.json", solution_provenance_json(swept));
  }
  const double radius =
      config.cluster_radius > 0.0 ? config.cluster_radius : 3.0 * working.georef.cell_size;
  const SolutionSet clustered = filter_cluster(swept, radius);
  std::ostringstream text;
  write_solutions_csv(clustered, text);
  write_text(opts.out_dir, "clustered.csv", text.str());
  log_stage(opts, std::to_string(swept.solutions.size()) + " accepted solutions, " +
                      std::to_string(clustered.solutions.size()) + " clusters");
  return 0;
}

int run_stats(const GlobalOptions& opts, const std::string& solutions_path, double area) {
  const SolutionSet set = read_solutions_csv_file(solutions_path);
  if (set.solutions.size() < 2) throw DataError("TooFewPoints: stats need >= 2 solutions");
  const std::size_t n = set.solutions.size();
  std::vector<double> xs(n), ys(n), zs(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = set.solutions[i].x0;
    ys[i] = set.solutions[i].y0;
    zs[i] = set.solutions[i].z0;
  }
  if (area <= 0.0) {
    // Bounding-box fallback, documented convention.
    const auto [xlo, xhi] = std::minmax_element(xs.begin(), xs.end());
    const auto [ylo, yhi] = std::minmax_element(ys.begin(), ys.end());
    area = (*xhi - *xlo) * (*yhi - *ylo);
    if (!(area > 0.0)) throw DataError("NonpositiveArea: degenerate bounding box");
  }
  Eigen::MatrixXd data(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) {
    data(static_cast<Eigen::Index>(i), 0) = xs[i];
    data(static_cast<Eigen::Index>(i), 1) = ys[i];
    data(static_cast<Eigen::Index>(i), 2) = zs[i];
  }
  write_text(opts.out_dir, "pca.json", pca_result_json(pca(data)));
  write_text(opts.out_dir, "csr.json", csr_report_json(csr_tests(xs, ys, area)));
  const NnsReport nns = nearest_neighbor_stats(xs, ys);
  write_text(opts.out_dir, "nns.json", nns_report_json(nns));
  {
    std::ostringstream out;
    write_nn_distances_csv(nns, out);
    write_text(opts.out_dir, "nn_distances.csv", out.str());
  }
  write_text(opts.out_dir, "depth_stats.json", descriptive_stats_json(descriptive_stats(zs)));
  return 0;
}

int run_classify(const GlobalOptions& opts, const std::string& solutions_path,
                 const std::string& tx_path, const std::string& ty_path,
                 const std::string& model_path, bool predict_only) {
  const PipelineConfig config = load_config(opts);
  SolutionSet set = read_solutions_csv_file(solutions_path);
  set.config = config.euler;
  const Grid tx = read_grid_file(tx_path);
  const Grid ty = read_grid_file(ty_path);
  const auto [features, labels] = build_features(set, tx, ty);

  MlpModel model;
  if (predict_only) {
    std::ifstream in(model_path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + model_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    model = mlp_model_from_json(buf.str());
  } else {
    TrainingConfig training = config.classifier.training;
    training.seed = subseed(config.seed, "training");
    const TrainResult trained =
        train_mlp(features, labels, training, static_cast<int>(config.euler.si_set.size()));
    model = trained.model;
    model.si_classes = config.euler.si_set;
    write_text(opts.out_dir, "model.json", mlp_model_json(model));
  }

  const Eigen::MatrixXd probs = predict(model, features);
  std::vector<int> predicted(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index arg = 0;
    probs.row(r).maxCoeff(&arg);
    predicted[static_cast<std::size_t>(r)] = static_cast<int>(arg);
  }
  {
    std::ostringstream out;
    write_confusion_csv(labels, predicted, model.n_out(), out);
    write_text(opts.out_dir, "confusion.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "index,si,predicted_class,max_probability\n";
    for (std::size_t i = 0; i < predicted.size(); ++i)
      out << i << ',' << set.solutions[i].si << ',' << predicted[i] << ','
          << probs(static_cast<Eigen::Index>(i), predicted[i]) << '\n';
    write_text(opts.out_dir, "predictions.csv", out.str());
  }
  return 0;
}

int run_profile(const GlobalOptions& opts, const std::string& solutions_path) {
  const PipelineConfig config = load_config(opts);
  const SolutionSet set = read_solutions_csv_file(solutions_path);
  for (const ProfileSpec& spec : config.products.profiles) {
    const ProfileSection section = extract_profile(set, spec);
    std::ostringstream out;
    write_profile_csv(section, out);
    write_text(opts.out_dir, "profile_" + spec.label + ".csv", out.str());
  }
  if (!set.solutions.empty()) {
    std::ostringstream out;
    write_histogram_csv(depth_histogram(set, config.products.histogram_bin_width), out);
    write_text(opts.out_dir, "histogram.csv", out.str());
  }
  if (set.solutions.size() >= 3)
    write_text(opts.out_dir, "trend.json",
               trend_report_json(trend_analysis(set, config.products.anisotropy_threshold)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aeromagnetic source-structure mining toolkit"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "Pipeline config JSON");
  app.add_option("--out", opts.out_dir, "Output directory");
  app.add_option("--seed", opts.seed, "Override config seed");
  app.add_option("--threads", opts.threads, "Worker thread count (never affects results)");
  app.add_flag("--verbose", opts.verbose, "Progress logging to stderr");

  auto* cmd_grid = app.add_subcommand("grid", "Interpolate survey points onto a grid");

  std::string in_path, out_name = "filtered.asc";
  auto* cmd_filter = app.add_subcommand("filter", "Apply the configured filter chain");
  cmd_filter->add_option("--in", in_path, "Input grid (.asc)")->required();
  cmd_filter->add_option("--out-name", out_name, "Output file name");

  std::string euler_in;
  auto* cmd_euler = app.add_subcommand("euler", "Derivatives + moving-window sweep");
  cmd_euler->add_option("--in", euler_in, "Working grid (.asc)")->required();

  std::string solutions_path;
  double stats_area = 0.0;
  auto* cmd_stats = app.add_subcommand("stats", "Statistical reports for a solution set");
  cmd_stats->add_option("--solutions", solutions_path, "Solutions CSV")->required();
  cmd_stats->add_option("--area", stats_area, "Survey area in m^2 (bounding box if absent)");

  std::string tx_path, ty_path, model_path;
  bool predict_only = false;
  auto* cmd_classify = app.add_subcommand("classify", "Train or apply the SI classifier");
  cmd_classify->add_option("--solutions", solutions_path, "Solutions CSV")->required();
  cmd_classify->add_option("--tx", tx_path, "x-gradient grid")->required();
  cmd_classify->add_option("--ty", ty_path, "y-gradient grid")->required();
  cmd_classify->add_option("--model", model_path, "Model JSON (with --predict)");
  cmd_classify->add_flag("--predict", predict_only, "Predict with an existing model");

  auto* cmd_profile = app.add_subcommand("profile", "Profile sections, histogram, trend");
  cmd_profile->add_option("--solutions", solutions_path, "Solutions CSV")->required();

  auto* cmd_pipeline = app.add_subcommand("pipeline", "Run the full workflow");

  std::string preset_name;
  auto* cmd_demo = app.add_subcommand("synth-demo", "Write a ready-to-run synthetic demo");
  cmd_demo->add_option("--preset", preset_name, "one_source | two_source | noisy_survey")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
#ifdef _OPENMP
    if (opts.threads > 0) omp_set_num_threads(opts.threads);
#endif
    if (cmd_grid->parsed()) return run_grid(opts);
    if (cmd_filter->parsed()) return run_filter(opts, in_path, out_name);
    if (cmd_euler->parsed()) return run_euler(opts, euler_in);
    if (cmd_stats->parsed()) return run_stats(opts, solutions_path, stats_area);
    if (cmd_classify->parsed())
      return run_classify(opts, solutions_path, tx_path, ty_path, model_path, predict_only);
    if (cmd_profile->parsed()) return run_profile(opts, solutions_path);
    if (cmd_pipeline->parsed()) {
      const PipelineConfig config = load_config(opts);
      log_stage(opts, "running pipeline into " + opts.out_dir);
      const Manifest manifest = run_pipeline(config, opts.out_dir);
      log_stage(opts, std::to_string(manifest.files.size()) + " artifacts written");
      return 0;
    }
    if (cmd_demo->parsed()) {
      const std::string path = synth_demo(demo_preset_from_name(preset_name), opts.out_dir);
      std::cout << path << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
