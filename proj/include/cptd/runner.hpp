#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cptd/conformal.hpp"
#include "cptd/harness.hpp"

namespace cptd {

enum class Subcommand { calibrate, evaluate, simulate };
enum class ExperimentKind { validity, tail };

const char* to_string(Subcommand sub);
const char* to_string(ExperimentKind kind);

/// Resolved run description: one data source (a panel file xor a synthetic
/// spec), a method set, and the knobs shared by all subcommands. Built from
/// a flat key=value config file with command-line overrides on top.
struct RunConfig {
  Subcommand subcommand = Subcommand::calibrate;

  std::string panel_path;  ///< empty when the source is synthetic
  bool use_synth = false;
  SynthSpec synth;
  std::string predictions_path;  ///< optional externally computed forecasts

  std::vector<Method> methods{Method::split, Method::cptd_mad, Method::cptd_rat, Method::lasplit};
  double alpha = 0.1;
  std::size_t window_k = 20;  ///< 0 selects the full horizon
  SplitMode split_mode = SplitMode::random;
  std::size_t n_train = 0, n_cal = 0, n_test = 0;  ///< split sizes for panel sources

  FitOptions fit{};
  double prior_weight = 1.0;
  double mad_decay = 0.0;

  ExperimentKind experiment = ExperimentKind::validity;
  std::size_t replicates = 0;  ///< 0 = subcommand default (20 evaluate, 200/50 simulate)
  std::uint64_t seed = 0;
  std::string output_dir = "results";
  int threads = 0;  ///< 0 = leave the OpenMP default
};

/// Parses config-file keys into a RunConfig (subcommand must be set by the
/// caller). Unknown keys raise ConfigError.
RunConfig config_from_kv(const std::map<std::string, std::string>& kv);

/// Serializes the resolved config back to sorted key=value lines (used for
/// the run manifest).
std::string config_to_kv(const RunConfig& config);

/// Validates invariants that span several fields (one data source, alpha in
/// (0,1), non-empty methods, sizes present where required).
void validate(const RunConfig& config);

/// Executes the run and writes result files plus a manifest into
/// config.output_dir. Throws cptd::Error on failure.
void run(const RunConfig& config);

}  // namespace cptd
