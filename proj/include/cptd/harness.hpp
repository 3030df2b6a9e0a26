#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cptd/conformal.hpp"
#include "cptd/metrics.hpp"
#include "cptd/panel.hpp"

namespace cptd {

enum class NoiseKind { iid_gauss, ar1 };
enum class ScaleDist { constant, lognormal };

const char* to_string(NoiseKind kind);
NoiseKind noise_from_name(const std::string& name);
const char* to_string(ScaleDist dist);
ScaleDist scale_dist_from_name(const std::string& name);

/// Synthetic panel description. With drift == 0 the series are i.i.d. draws,
/// hence exchangeable by construction; drift > 0 shifts each series' mean by
/// drift * index, which breaks exchangeability in index order. A lognormal
/// scale distribution makes some series persistently noisier than others,
/// the situation the temporally-informed normalizers are designed for.
struct SynthSpec {
  std::size_t n_train = 100;
  std::size_t n_cal = 99;
  std::size_t n_test = 200;
  std::size_t horizon = 20;
  NoiseKind noise = NoiseKind::iid_gauss;
  double ar_coef = 0.0;  ///< AR(1) coefficient, only used for NoiseKind::ar1
  ScaleDist scale_dist = ScaleDist::constant;
  double sigma_scale = 0.0;  ///< lognormal sigma of the per-series scale
  double drift = 0.0;        ///< per-index mean shift
  std::uint64_t seed = 0;

  std::size_t total_series() const { return n_train + n_cal + n_test; }
};

/// y(i, t) = drift * i + sigma_i * eps(i, t); deterministic under the seed.
PanelData generate_panel(const SynthSpec& spec);

struct ExperimentConfig {
  SynthSpec synth;
  std::vector<Method> methods{Method::split, Method::cptd_mad, Method::cptd_rat, Method::lasplit};
  double alpha = 0.1;
  std::size_t replicates = 200;
  SplitMode split_mode = SplitMode::random;
  std::size_t window_k = 20;  ///< 0 selects the full horizon
  FitOptions fit{};
  double prior_weight = 1.0;
  double mad_decay = 0.0;
  std::uint64_t seed = 0;  ///< master seed; replicate streams are derived from it
};

/// Raw per-replicate measurements, one slot per label (methods, then
/// "ideal" when the run includes the independence reference).
struct ReplicateRecord {
  std::uint64_t seed = 0;
  std::vector<double> mean_coverage;
  std::vector<double> tail_coverage;  // NaN when fewer than 10 test series
  std::vector<double> mean_width;     // NaN for the ideal reference
  std::vector<std::vector<double>> step_mean;   // [label][step]
  std::vector<std::vector<double>> step_tail;   // [label][step], tail runs only
  std::vector<std::vector<double>> percentile;  // [label][p-1], p = 1..100, tail runs only
};

struct SummaryRow {
  std::string label;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;         ///< sd / sqrt(R)
  double se_binomial = 0;  ///< NaN for non-coverage metrics
};

struct MCResult {
  ExperimentConfig config;
  EvalWindow window;
  std::vector<std::string> labels;
  std::vector<ReplicateRecord> replicates;
  std::vector<SummaryRow> summary;

  // aggregated curves, one row of values per label
  std::vector<std::vector<double>> step_mean;
  std::vector<std::vector<double>> step_tail;
  std::vector<std::vector<double>> percentile;

  const SummaryRow& row(const std::string& label, const std::string& metric) const;
};

/// Coverage verification run: for each replicate, generate an exchangeable
/// panel, split, fit the per-step forecaster, calibrate every method and
/// measure coverage. Per-step coverage curves are kept so cross-sectional
/// validity can be checked at each step separately.
MCResult run_validity_mc(const ExperimentConfig& config);

/// Tail-coverage comparison under per-series heteroskedasticity: methods are
/// width-rescaled to the split-conformal mean width before bottom-decile
/// coverage is measured, and an "ideal" reference with temporally
/// independent coverage events is simulated alongside.
MCResult run_tail_comparison(const ExperimentConfig& config);

/// Writes summary.csv, replicates.csv, step_curves.csv and (for tail runs)
/// percentile_replicates.csv into the directory.
void write_mc_result(const MCResult& result, const std::filesystem::path& dir);

}  // namespace cptd
