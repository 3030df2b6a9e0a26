#include "cptd/runner.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "cptd/error.hpp"
#include "cptd/rng.hpp"
#include "cptd/text.hpp"

namespace cptd {

namespace {

namespace fs = std::filesystem;

bool log_enabled() {
  const char* level = std::getenv("CPTD_LOG");
  if (level == nullptr) return false;
  std::string v(level);
  return v == "info" || v == "debug";
}

void log_info(const std::string& message) {
  if (log_enabled()) std::cerr << "[cptd] " << message << "\n";
}

double parse_double_or(const std::map<std::string, std::string>& kv, const std::string& key,
                       double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  double value = 0.0;
  if (!text::try_parse_double(it->second, value)) {
    raise(ErrorCode::ConfigError, "key '" + key + "' must be a number, got '" + it->second + "'");
  }
  return value;
}

std::uint64_t parse_u64_or(const std::map<std::string, std::string>& kv, const std::string& key,
                           std::uint64_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::uint64_t value = 0;
  if (!text::try_parse_u64(it->second, value)) {
    raise(ErrorCode::ConfigError,
          "key '" + key + "' must be a non-negative integer, got '" + it->second + "'");
  }
  return value;
}

bool parse_bool_or(const std::map<std::string, std::string>& kv, const std::string& key,
                   bool fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  if (it->second == "1" || it->second == "true") return true;
  if (it->second == "0" || it->second == "false") return false;
  raise(ErrorCode::ConfigError, "key '" + key + "' must be a boolean, got '" + it->second + "'");
}

std::vector<Method> parse_methods(const std::string& value) {
  std::vector<Method> methods;
  std::string token;
  std::istringstream in(value);
  while (std::getline(in, token, ',')) {
    token = text::trim(token);
    if (token.empty()) continue;
    methods.push_back(method_from_name(token));
  }
  if (methods.empty()) raise(ErrorCode::ConfigError, "methods list is empty");
  return methods;
}

std::size_t parse_window(const std::string& value) {
  if (value == "full") return 0;
  std::uint64_t k = 0;
  if (!text::try_parse_u64(value, k) || k == 0) {
    raise(ErrorCode::ConfigError, "eval_window must be 'full' or a positive step count");
  }
  return static_cast<std::size_t>(k);
}

const char* const kKnownKeys[] = {
    "panel",      "synth",       "predictions", "methods",      "alpha",       "eval_window",
    "split_mode", "n_train",     "n_cal",       "n_test",       "horizon",     "noise",
    "ar_coef",    "scale_dist",  "sigma_scale", "drift",        "lambda_ridge", "standardize",
    "use_lagged_responses",      "use_covariates",              "prior_weight", "mad_decay",
    "experiment", "replicates",  "seed",        "output",       "threads",
};

}  // namespace

const char* to_string(Subcommand sub) {
  switch (sub) {
    case Subcommand::calibrate: return "calibrate";
    case Subcommand::evaluate: return "evaluate";
    case Subcommand::simulate: return "simulate";
  }
  return "calibrate";
}

const char* to_string(ExperimentKind kind) {
  return kind == ExperimentKind::validity ? "validity" : "tail";
}

RunConfig config_from_kv(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (std::find_if(std::begin(kKnownKeys), std::end(kKnownKeys),
                     [&](const char* k) { return key == k; }) == std::end(kKnownKeys)) {
      raise(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    }
  }

  RunConfig config;
  if (auto it = kv.find("panel"); it != kv.end()) config.panel_path = it->second;
  config.use_synth = parse_bool_or(kv, "synth", false);
  if (auto it = kv.find("predictions"); it != kv.end()) config.predictions_path = it->second;
  if (auto it = kv.find("methods"); it != kv.end()) config.methods = parse_methods(it->second);
  config.alpha = parse_double_or(kv, "alpha", config.alpha);
  if (auto it = kv.find("eval_window"); it != kv.end()) config.window_k = parse_window(it->second);
  if (auto it = kv.find("split_mode"); it != kv.end()) {
    config.split_mode = split_mode_from_name(it->second);
  }
  config.n_train = static_cast<std::size_t>(parse_u64_or(kv, "n_train", 0));
  config.n_cal = static_cast<std::size_t>(parse_u64_or(kv, "n_cal", 0));
  config.n_test = static_cast<std::size_t>(parse_u64_or(kv, "n_test", 0));

  config.synth.horizon = static_cast<std::size_t>(parse_u64_or(kv, "horizon", 20));
  if (auto it = kv.find("noise"); it != kv.end()) config.synth.noise = noise_from_name(it->second);
  config.synth.ar_coef = parse_double_or(kv, "ar_coef", 0.0);
  if (auto it = kv.find("scale_dist"); it != kv.end()) {
    config.synth.scale_dist = scale_dist_from_name(it->second);
  }
  config.synth.sigma_scale = parse_double_or(kv, "sigma_scale", 0.0);
  config.synth.drift = parse_double_or(kv, "drift", 0.0);

  config.fit.lambda_ridge = parse_double_or(kv, "lambda_ridge", config.fit.lambda_ridge);
  config.fit.standardize = parse_bool_or(kv, "standardize", config.fit.standardize);
  config.fit.use_lagged_responses =
      parse_bool_or(kv, "use_lagged_responses", config.fit.use_lagged_responses);
  config.fit.use_covariates = parse_bool_or(kv, "use_covariates", config.fit.use_covariates);
  config.prior_weight = parse_double_or(kv, "prior_weight", config.prior_weight);
  config.mad_decay = parse_double_or(kv, "mad_decay", config.mad_decay);

  if (auto it = kv.find("experiment"); it != kv.end()) {
    if (it->second == "validity") {
      config.experiment = ExperimentKind::validity;
    } else if (it->second == "tail") {
      config.experiment = ExperimentKind::tail;
    } else {
      raise(ErrorCode::ConfigError, "experiment must be 'validity' or 'tail'");
    }
  }
  config.replicates = static_cast<std::size_t>(parse_u64_or(kv, "replicates", 0));
  config.seed = parse_u64_or(kv, "seed", 0);
  if (auto it = kv.find("output"); it != kv.end()) config.output_dir = it->second;
  config.threads = static_cast<int>(parse_u64_or(kv, "threads", 0));
  return config;
}

std::string config_to_kv(const RunConfig& config) {
  std::map<std::string, std::string> kv;
  kv["subcommand"] = to_string(config.subcommand);
  if (!config.panel_path.empty()) kv["panel"] = config.panel_path;
  kv["synth"] = config.use_synth ? "1" : "0";
  if (!config.predictions_path.empty()) kv["predictions"] = config.predictions_path;
  std::string methods;
  for (Method m : config.methods) {
    if (!methods.empty()) methods += ",";
    methods += method_name(m);
  }
  kv["methods"] = methods;
  kv["alpha"] = text::fmt_shortest(config.alpha);
  kv["eval_window"] = config.window_k == 0 ? "full" : std::to_string(config.window_k);
  kv["split_mode"] = to_string(config.split_mode);
  kv["n_train"] = std::to_string(config.n_train);
  kv["n_cal"] = std::to_string(config.n_cal);
  kv["n_test"] = std::to_string(config.n_test);
  if (config.use_synth) {
    kv["horizon"] = std::to_string(config.synth.horizon);
    kv["noise"] = to_string(config.synth.noise);
    kv["ar_coef"] = text::fmt_shortest(config.synth.ar_coef);
    kv["scale_dist"] = to_string(config.synth.scale_dist);
    kv["sigma_scale"] = text::fmt_shortest(config.synth.sigma_scale);
    kv["drift"] = text::fmt_shortest(config.synth.drift);
  }
  kv["lambda_ridge"] = text::fmt_shortest(config.fit.lambda_ridge);
  kv["standardize"] = config.fit.standardize ? "1" : "0";
  kv["use_lagged_responses"] = config.fit.use_lagged_responses ? "1" : "0";
  kv["use_covariates"] = config.fit.use_covariates ? "1" : "0";
  kv["prior_weight"] = text::fmt_shortest(config.prior_weight);
  kv["mad_decay"] = text::fmt_shortest(config.mad_decay);
  if (config.subcommand == Subcommand::simulate) kv["experiment"] = to_string(config.experiment);
  kv["replicates"] = std::to_string(config.replicates);
  kv["seed"] = std::to_string(config.seed);
  kv["output"] = config.output_dir;
  kv["threads"] = std::to_string(config.threads);

  std::ostringstream out;
  for (const auto& [key, value] : kv) out << key << " = " << value << "\n";
  return out.str();
}

void validate(const RunConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
    raise(ErrorCode::ConfigError, "alpha must lie strictly between 0 and 1");
  }
  if (config.methods.empty()) raise(ErrorCode::ConfigError, "methods list is empty");
  bool has_panel = !config.panel_path.empty();
  if (has_panel == config.use_synth) {
    raise(ErrorCode::ConfigError, "exactly one data source: set 'panel' or 'synth = 1'");
  }
  if (config.use_synth && !config.predictions_path.empty()) {
    raise(ErrorCode::ConfigError, "external predictions require a panel file source");
  }
  if (config.subcommand == Subcommand::simulate && !config.use_synth) {
    raise(ErrorCode::ConfigError, "simulate runs on the synthetic source only");
  }
  if (config.n_train == 0 || config.n_cal == 0 || config.n_test == 0) {
    raise(ErrorCode::ConfigError, "n_train, n_cal and n_test must all be set and positive");
  }
  if (config.mad_decay < 0.0 || config.mad_decay >= 1.0) {
    raise(ErrorCode::ConfigError, "mad_decay must lie in [0, 1)");
  }
  if (config.prior_weight <= 0.0) {
    raise(ErrorCode::ConfigError, "prior_weight must be positive");
  }
}

namespace {

struct Manifest {
  std::vector<std::pair<std::string, std::string>> files;  // name -> checksum

  void add(const fs::path& dir, const std::string& name) {
    files.emplace_back(name, text::fnv1a_hex(dir / name));
  }

  void write(const fs::path& dir, const RunConfig& config) const {
    std::ostringstream out;
    out << "# cptd run manifest\n";
    out << config_to_kv(config);
    std::vector<std::pair<std::string, std::string>> sorted = files;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [name, digest] : sorted) out << "checksum." << name << " = " << digest << "\n";
    text::write_file(dir / "manifest.txt", out.str());
  }
};

struct PreparedData {
  PanelSplit blocks;
  Grid train_pred, cal_pred, test_pred;
  bool has_error_model = false;
  ErrorPredictorModel error_model;
};

Grid slice_grid(const Grid& full, const PanelData& full_panel, const PanelData& block) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < full_panel.n_series(); ++i) index.emplace(full_panel.series(i).id, i);
  Grid out(block.n_series(), block.horizon());
  for (std::size_t i = 0; i < block.n_series(); ++i) {
    std::size_t src = index.at(block.series(i).id);
    for (std::size_t t = 0; t < block.horizon(); ++t) out(i, t) = full(src, t);
  }
  return out;
}

PreparedData prepare(const RunConfig& config) {
  PreparedData data;
  PanelData panel = [&] {
    if (config.use_synth) {
      SynthSpec synth = config.synth;
      synth.n_train = config.n_train;
      synth.n_cal = config.n_cal;
      synth.n_test = config.n_test;
      synth.seed = rng::derive_stream(config.seed, 0);
      return generate_panel(synth);
    }
    return load_panel(config.panel_path);
  }();

  for (const std::string& warning : validate_exchangeability_contract(panel)) {
    std::cerr << "[cptd] warning: " << warning << "\n";
  }

  SplitSpec split_spec{config.n_train, config.n_cal, config.n_test, config.split_mode,
                       rng::derive_stream(config.seed, 1)};
  data.blocks = split_panel(panel, split_spec);

  bool need_error_model =
      std::find(config.methods.begin(), config.methods.end(), Method::lasplit) !=
      config.methods.end();

  if (!config.predictions_path.empty()) {
    ForecastGrid full = ingest_external_grid(config.predictions_path, panel);
    data.train_pred = slice_grid(full.y_hat, panel, data.blocks.train);
    data.cal_pred = slice_grid(full.y_hat, panel, data.blocks.cal);
    data.test_pred = slice_grid(full.y_hat, panel, data.blocks.test);
    log_info("ingested external predictions from " + config.predictions_path);
  } else {
    PerStepLinearModel model = PerStepLinearModel::fit(data.blocks.train, config.fit);
    data.train_pred = model.predict(data.blocks.train).y_hat;
    data.cal_pred = model.predict(data.blocks.cal).y_hat;
    data.test_pred = model.predict(data.blocks.test).y_hat;
    log_info("fitted per-step linear forecaster");
  }

  if (need_error_model) {
    ForecastGrid train_grid{data.train_pred, ForecastSource::per_step_linear};
    data.error_model = ErrorPredictorModel::fit(data.blocks.train, train_grid, config.fit);
    data.has_error_model = true;
  }
  return data;
}

std::vector<IntervalGrid> calibrate_all(const RunConfig& config, const PreparedData& data) {
  CalibrateOptions opts{config.alpha, config.prior_weight, config.mad_decay};
  std::vector<IntervalGrid> grids;
  grids.reserve(config.methods.size());
  for (Method method : config.methods) {
    grids.push_back(calibrate_path(data.blocks.cal, data.cal_pred, data.blocks.test,
                                   data.test_pred, method, opts,
                                   data.has_error_model ? &data.error_model : nullptr));
    log_info(std::string("calibrated ") + method_name(method));
  }
  return grids;
}

void run_calibrate(const RunConfig& config, const fs::path& dir, Manifest& manifest) {
  PreparedData data = prepare(config);
  std::vector<IntervalGrid> grids = calibrate_all(config, data);
  for (const IntervalGrid& grid : grids) {
    std::string name = std::string("intervals_") + method_name(grid.method) + ".csv";
    write_intervals_csv(grid, data.blocks.test, dir / name);
    manifest.add(dir, name);
  }
}

void run_evaluate_panel(const RunConfig& config, const fs::path& dir, Manifest& manifest) {
  PreparedData data = prepare(config);
  std::vector<IntervalGrid> grids = calibrate_all(config, data);
  EvalWindow window = config.window_k == 0
                          ? EvalWindow::full(data.blocks.test.horizon())
                          : EvalWindow::last_k(config.window_k, data.blocks.test.horizon());

  std::ostringstream report;
  report << "method,metric,value\n";
  std::ostringstream coverage_rows;
  coverage_rows << "method,series_id,coverage\n";
  for (const IntervalGrid& grid : grids) {
    ExperimentReport rep = make_report(grid, data.blocks.test, window, config.seed,
                                       data.blocks.cal.n_series());
    report << method_name(grid.method) << ",mean_coverage," << text::fmt_g6(rep.mean_coverage) << "\n";
    if (!std::isnan(rep.tail_coverage)) {
      report << method_name(grid.method) << ",tail_coverage," << text::fmt_g6(rep.tail_coverage) << "\n";
    }
    report << method_name(grid.method) << ",mean_width," << text::fmt_g6(rep.mean_width) << "\n";
    for (std::size_t i = 0; i < rep.per_series_coverage.size(); ++i) {
      coverage_rows << method_name(grid.method) << ',' << data.blocks.test.series(i).id << ','
                    << text::fmt_g6(rep.per_series_coverage[i]) << "\n";
    }
    std::string name = std::string("intervals_") + method_name(grid.method) + ".csv";
    write_intervals_csv(grid, data.blocks.test, dir / name);
    manifest.add(dir, name);
  }
  text::write_file(dir / "report.csv", report.str());
  manifest.add(dir, "report.csv");
  text::write_file(dir / "per_series_coverage.csv", coverage_rows.str());
  manifest.add(dir, "per_series_coverage.csv");
}

ExperimentConfig experiment_config(const RunConfig& config, std::size_t default_replicates) {
  ExperimentConfig mc;
  mc.synth = config.synth;
  mc.synth.n_train = config.n_train;
  mc.synth.n_cal = config.n_cal;
  mc.synth.n_test = config.n_test;
  mc.methods = config.methods;
  mc.alpha = config.alpha;
  mc.replicates = config.replicates == 0 ? default_replicates : config.replicates;
  mc.split_mode = config.split_mode;
  mc.window_k = config.window_k;
  mc.fit = config.fit;
  mc.prior_weight = config.prior_weight;
  mc.mad_decay = config.mad_decay;
  mc.seed = config.seed;
  return mc;
}

void add_mc_files(const fs::path& dir, Manifest& manifest, bool tail_mode) {
  manifest.add(dir, "summary.csv");
  manifest.add(dir, "replicates.csv");
  manifest.add(dir, "step_curves.csv");
  if (tail_mode) manifest.add(dir, "percentile_replicates.csv");
}

}  // namespace

void run(const RunConfig& config) {
  validate(config);
  if (config.threads > 0) omp_set_num_threads(config.threads);

  fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorCode::IoError, "cannot create output directory " + dir.string());

  Manifest manifest;
  switch (config.subcommand) {
    case Subcommand::calibrate:
      run_calibrate(config, dir, manifest);
      break;
    case Subcommand::evaluate:
      if (config.use_synth) {
        MCResult result = run_validity_mc(experiment_config(config, 20));
        write_mc_result(result, dir);
        add_mc_files(dir, manifest, false);
      } else {
        run_evaluate_panel(config, dir, manifest);
      }
      break;
    case Subcommand::simulate: {
      bool tail = config.experiment == ExperimentKind::tail;
      MCResult result = tail ? run_tail_comparison(experiment_config(config, 50))
                             : run_validity_mc(experiment_config(config, 200));
      write_mc_result(result, dir);
      add_mc_files(dir, manifest, tail);
      break;
    }
  }
  manifest.write(dir, config);
  log_info("results written to " + dir.string());
}

}  // namespace cptd
