#include "cptd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>

#include "cptd/error.hpp"
#include "cptd/rng.hpp"
#include "cptd/text.hpp"

namespace cptd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string series_label(std::size_t index, std::size_t total) {
  std::size_t width = 1;
  for (std::size_t v = total > 0 ? total - 1 : 0; v >= 10; v /= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%0*zu", static_cast<int>(width), index);
  return buf;
}

void validate(const SynthSpec& spec) {
  if (spec.n_train < 2 || spec.n_cal == 0 || spec.n_test == 0) {
    raise(ErrorCode::InvalidSpec, "synthetic spec needs n_train >= 2, n_cal >= 1, n_test >= 1");
  }
  if (spec.horizon == 0) raise(ErrorCode::InvalidSpec, "synthetic horizon must be positive");
  if (spec.noise == NoiseKind::ar1 && !(std::abs(spec.ar_coef) < 1.0)) {
    raise(ErrorCode::InvalidSpec, "AR(1) coefficient must lie in (-1, 1)");
  }
  if (spec.sigma_scale < 0.0) raise(ErrorCode::InvalidSpec, "sigma_scale must be >= 0");
}

double sample_sd(std::span<const double> values, double mean) {
  if (values.size() < 2) return 0.0;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

// Bottom-decile mean of per-series coverages; NaN when the decile is empty.
double tail_or_nan(std::span<const double> coverage) {
  if (coverage.size() < 10) return kNaN;
  return tail_coverage(coverage);
}

// Mean coverage of the lowest ceil(p * M / 100) series, p = 1..100.
std::vector<double> percentile_sweep(std::vector<double> coverage) {
  std::sort(coverage.begin(), coverage.end());
  std::size_t m = coverage.size();
  std::vector<double> out(100);
  std::vector<double> prefix(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] + coverage[i];
  for (std::size_t p = 1; p <= 100; ++p) {
    std::size_t k = (p * m + 99) / 100;
    k = std::max<std::size_t>(k, 1);
    out[p - 1] = prefix[k] / static_cast<double>(k);
  }
  return out;
}

// Per-step cross-sectional coverage and, when requested, the expanding
// bottom-decile curve, from a boolean hit grid (series x steps).
void curves_from_hits(const Grid& hits, std::vector<double>& step_mean,
                      std::vector<double>* step_tail) {
  std::size_t m = hits.rows;
  std::size_t horizon = hits.cols;
  step_mean.assign(horizon, 0.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += hits(i, t);
    step_mean[t] = sum / static_cast<double>(m);
  }
  if (step_tail == nullptr) return;
  step_tail->assign(horizon, kNaN);
  std::vector<double> running(m, 0.0), coverage(m);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      running[i] += hits(i, t);
      coverage[i] = running[i] / static_cast<double>(t + 1);
    }
    (*step_tail)[t] = tail_or_nan(coverage);
  }
}

Grid hit_grid(const IntervalGrid& intervals, const PanelData& truth) {
  Grid hits(intervals.n_series, intervals.horizon);
  for (std::size_t i = 0; i < intervals.n_series; ++i) {
    for (std::size_t t = 0; t < intervals.horizon; ++t) {
      hits(i, t) = intervals.at(i, t).covers(truth.y(i, t)) ? 1.0 : 0.0;
    }
  }
  return hits;
}

std::vector<double> window_coverage(const Grid& hits, const EvalWindow& window) {
  std::vector<double> coverage(hits.rows, 0.0);
  for (std::size_t i = 0; i < hits.rows; ++i) {
    double sum = 0.0;
    for (std::size_t t = window.first; t <= window.last; ++t) sum += hits(i, t);
    coverage[i] = sum / static_cast<double>(window.size());
  }
  return coverage;
}

}  // namespace

const char* to_string(NoiseKind kind) {
  return kind == NoiseKind::iid_gauss ? "iid_gauss" : "ar1";
}

NoiseKind noise_from_name(const std::string& name) {
  if (name == "iid_gauss") return NoiseKind::iid_gauss;
  if (name == "ar1") return NoiseKind::ar1;
  raise(ErrorCode::ConfigError, "unknown noise kind '" + name + "'");
}

const char* to_string(ScaleDist dist) {
  return dist == ScaleDist::constant ? "constant" : "lognormal";
}

ScaleDist scale_dist_from_name(const std::string& name) {
  if (name == "constant") return ScaleDist::constant;
  if (name == "lognormal") return ScaleDist::lognormal;
  raise(ErrorCode::ConfigError, "unknown scale distribution '" + name + "'");
}

PanelData generate_panel(const SynthSpec& spec) {
  validate(spec);
  std::size_t n = spec.total_series();
  rng::Rng gen(spec.seed);

  std::vector<SeriesRecord> series(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sigma = 1.0;
    if (spec.scale_dist == ScaleDist::lognormal) sigma = std::exp(spec.sigma_scale * gen.gauss());
    double level = spec.drift * static_cast<double>(i);

    SeriesRecord& record = series[i];
    record.id = series_label(i, n);
    record.y.resize(spec.horizon);
    double state = 0.0;
    for (std::size_t t = 0; t < spec.horizon; ++t) {
      double eps;
      if (spec.noise == NoiseKind::ar1) {
        if (t == 0) {
          state = gen.gauss();
        } else {
          state = spec.ar_coef * state + std::sqrt(1.0 - spec.ar_coef * spec.ar_coef) * gen.gauss();
        }
        eps = state;
      } else {
        eps = gen.gauss();
      }
      record.y[t] = level + sigma * eps;
    }
  }
  return PanelData::from_series(std::move(series), 0);
}

namespace {

struct RunFlags {
  bool tail_mode = false;
};

ReplicateRecord run_replicate(const ExperimentConfig& cfg, const EvalWindow& window,
                              std::size_t replicate, const RunFlags& flags) {
  std::uint64_t rep_seed = rng::derive_stream(cfg.seed, replicate);

  SynthSpec synth = cfg.synth;
  synth.seed = rng::derive_stream(rep_seed, 0);
  PanelData panel = generate_panel(synth);

  SplitSpec split_spec{cfg.synth.n_train, cfg.synth.n_cal, cfg.synth.n_test, cfg.split_mode,
                       rng::derive_stream(rep_seed, 1)};
  PanelSplit blocks = split_panel(panel, split_spec);

  PerStepLinearModel model = PerStepLinearModel::fit(blocks.train, cfg.fit);
  Grid cal_pred = model.predict(blocks.cal).y_hat;
  Grid test_pred = model.predict(blocks.test).y_hat;

  bool need_error_model =
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::lasplit) != cfg.methods.end();
  ErrorPredictorModel error_model;
  if (need_error_model) {
    error_model = ErrorPredictorModel::fit(blocks.train, model.predict(blocks.train), cfg.fit);
  }

  CalibrateOptions opts{cfg.alpha, cfg.prior_weight, cfg.mad_decay};
  std::vector<IntervalGrid> grids;
  grids.reserve(cfg.methods.size());
  for (Method method : cfg.methods) {
    grids.push_back(calibrate_path(blocks.cal, cal_pred, blocks.test, test_pred, method, opts,
                                   need_error_model ? &error_model : nullptr));
  }

  std::size_t n_labels = cfg.methods.size() + (flags.tail_mode ? 1 : 0);
  ReplicateRecord record;
  record.seed = rep_seed;
  record.mean_coverage.assign(n_labels, kNaN);
  record.tail_coverage.assign(n_labels, kNaN);
  record.mean_width.assign(n_labels, kNaN);
  record.step_mean.resize(n_labels);
  if (flags.tail_mode) {
    record.step_tail.resize(n_labels);
    record.percentile.resize(n_labels);
  }

  const IntervalGrid* reference = nullptr;
  if (flags.tail_mode) {
    for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
      if (cfg.methods[k] == Method::split) reference = &grids[k];
    }
  }

  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    Grid hits = hit_grid(grids[k], blocks.test);
    std::vector<double> coverage = window_coverage(hits, window);
    record.mean_coverage[k] = mean_coverage(coverage);
    record.mean_width[k] = mean_width(grids[k], window);
    curves_from_hits(hits, record.step_mean[k], nullptr);

    if (flags.tail_mode) {
      // Bottom-decile metrics and the percentile sweep use width-matched
      // intervals so wider methods get no free coverage; the per-step tail
      // curve stays unscaled because the ideal reference pins 1 - alpha.
      IntervalGrid scaled = rescale_to_reference(grids[k], *reference, window);
      Grid scaled_hits = hit_grid(scaled, blocks.test);
      std::vector<double> scaled_coverage = window_coverage(scaled_hits, window);
      record.tail_coverage[k] = tail_or_nan(scaled_coverage);
      record.percentile[k] = percentile_sweep(scaled_coverage);
      std::vector<double> unused;
      curves_from_hits(hits, unused, &record.step_tail[k]);
    } else {
      record.tail_coverage[k] = tail_or_nan(coverage);
    }
  }

  if (flags.tail_mode) {
    // Independence reference: coverage events are Bernoulli(1 - alpha),
    // temporally independent within each series.
    rng::Rng ideal_gen(rng::derive_stream(rep_seed, 2));
    Grid ideal_hits(cfg.synth.n_test, cfg.synth.horizon);
    for (std::size_t i = 0; i < ideal_hits.rows; ++i) {
      for (std::size_t t = 0; t < ideal_hits.cols; ++t) {
        ideal_hits(i, t) = ideal_gen.uniform01() < (1.0 - cfg.alpha) ? 1.0 : 0.0;
      }
    }
    std::size_t k = cfg.methods.size();
    std::vector<double> coverage = window_coverage(ideal_hits, window);
    record.mean_coverage[k] = mean_coverage(coverage);
    record.tail_coverage[k] = tail_or_nan(coverage);
    record.mean_width[k] = kNaN;
    record.percentile[k] = percentile_sweep(coverage);
    curves_from_hits(ideal_hits, record.step_mean[k], &record.step_tail[k]);
  }
  return record;
}

std::vector<double> mean_curve(const std::vector<ReplicateRecord>& replicates,
                               std::vector<std::vector<double>> ReplicateRecord::* member,
                               std::size_t label, std::size_t length) {
  std::vector<double> out(length, 0.0);
  for (const ReplicateRecord& rec : replicates) {
    const std::vector<double>& curve = (rec.*member)[label];
    for (std::size_t i = 0; i < length; ++i) out[i] += curve[i];
  }
  for (double& v : out) v /= static_cast<double>(replicates.size());
  return out;
}

MCResult run_experiment(const ExperimentConfig& cfg, const RunFlags& flags) {
  validate(cfg.synth);
  if (cfg.methods.empty()) raise(ErrorCode::ConfigError, "no methods selected");
  if (cfg.replicates == 0) raise(ErrorCode::ConfigError, "need at least one replicate");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    raise(ErrorCode::InvalidSpec, "alpha must lie strictly between 0 and 1");
  }
  if (flags.tail_mode) {
    if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::split) == cfg.methods.end()) {
      raise(ErrorCode::ConfigError, "tail comparison needs 'split' as the width reference");
    }
    if (cfg.synth.n_test < 10) {
      raise(ErrorCode::TooFewSeries, "tail comparison needs at least 10 test series");
    }
  }

  MCResult result;
  result.config = cfg;
  result.window = cfg.window_k == 0 ? EvalWindow::full(cfg.synth.horizon)
                                    : EvalWindow::last_k(cfg.window_k, cfg.synth.horizon);
  for (Method method : cfg.methods) result.labels.push_back(method_name(method));
  if (flags.tail_mode) result.labels.push_back("ideal");

  result.replicates.resize(cfg.replicates);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(cfg.replicates); ++r) {
    try {
      result.replicates[static_cast<std::size_t>(r)] =
          run_replicate(cfg, result.window, static_cast<std::size_t>(r), flags);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  // Aggregates; replicate order is fixed, so these are deterministic.
  std::size_t n_labels = result.labels.size();
  std::size_t r_count = cfg.replicates;
  double window_cells = static_cast<double>(cfg.synth.n_test * result.window.size());
  double tail_cells =
      static_cast<double>(((cfg.synth.n_test + 9) / 10) * result.window.size());
  for (std::size_t k = 0; k < n_labels; ++k) {
    auto add_metric = [&](const char* metric, std::vector<double> ReplicateRecord::* member,
                          double binom_cells) {
      std::vector<double> values(r_count);
      for (std::size_t r = 0; r < r_count; ++r) values[r] = (result.replicates[r].*member)[k];
      if (std::isnan(values[0])) return;  // metric undefined for this label
      double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(r_count);
      double sd = sample_sd(values, mean);
      SummaryRow row;
      row.label = result.labels[k];
      row.metric = metric;
      row.mean = mean;
      row.sd = sd;
      row.se = sd / std::sqrt(static_cast<double>(r_count));
      row.se_binomial = binom_cells > 0.0
                            ? std::sqrt(std::max(mean * (1.0 - mean), 0.0) /
                                        (static_cast<double>(r_count) * binom_cells))
                            : kNaN;
      result.summary.push_back(row);
    };
    add_metric("mean_coverage", &ReplicateRecord::mean_coverage, window_cells);
    add_metric("tail_coverage", &ReplicateRecord::tail_coverage, tail_cells);
    add_metric("mean_width", &ReplicateRecord::mean_width, 0.0);

    result.step_mean.push_back(
        mean_curve(result.replicates, &ReplicateRecord::step_mean, k, cfg.synth.horizon));
    if (flags.tail_mode) {
      result.step_tail.push_back(
          mean_curve(result.replicates, &ReplicateRecord::step_tail, k, cfg.synth.horizon));
      result.percentile.push_back(
          mean_curve(result.replicates, &ReplicateRecord::percentile, k, 100));
    }
  }
  return result;
}

}  // namespace

const SummaryRow& MCResult::row(const std::string& label, const std::string& metric) const {
  for (const SummaryRow& r : summary) {
    if (r.label == label && r.metric == metric) return r;
  }
  raise(ErrorCode::ConfigError, "no summary row for " + label + "/" + metric);
}

MCResult run_validity_mc(const ExperimentConfig& config) {
  return run_experiment(config, RunFlags{false});
}

MCResult run_tail_comparison(const ExperimentConfig& config) {
  return run_experiment(config, RunFlags{true});
}

void write_mc_result(const MCResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    std::ostringstream out;
    out << "method,metric,mean,sd,se,se_binomial,formatted\n";
    for (const SummaryRow& row : result.summary) {
      bool coverage_like = row.metric != "mean_width";
      // Coverage rates are formatted as percentages, widths as plain values.
      std::string formatted = coverage_like
                                  ? text::fmt_fixed(100.0 * row.mean, 2) + "±" +
                                        text::fmt_fixed(100.0 * row.sd, 2)
                                  : text::fmt_fixed(row.mean, 2) + "±" + text::fmt_fixed(row.sd, 2);
      out << row.label << ',' << row.metric << ',' << text::fmt_g6(row.mean) << ','
          << text::fmt_g6(row.sd) << ',' << text::fmt_g6(row.se) << ','
          << text::fmt_g6(row.se_binomial) << ',' << formatted << "\n";
    }
    text::write_file(dir / "summary.csv", out.str());
  }

  {
    std::ostringstream out;
    out << "replicate,seed,method,mean_coverage,tail_coverage,mean_width\n";
    for (std::size_t r = 0; r < result.replicates.size(); ++r) {
      const ReplicateRecord& rec = result.replicates[r];
      for (std::size_t k = 0; k < result.labels.size(); ++k) {
        out << r << ',' << rec.seed << ',' << result.labels[k] << ','
            << text::fmt_g6(rec.mean_coverage[k]) << ',' << text::fmt_g6(rec.tail_coverage[k])
            << ',' << text::fmt_g6(rec.mean_width[k]) << "\n";
      }
    }
    text::write_file(dir / "replicates.csv", out.str());
  }

  {
    std::ostringstream out;
    out << "step,method,percentile,coverage\n";
    for (std::size_t k = 0; k < result.labels.size(); ++k) {
      for (std::size_t t = 0; t < result.step_mean[k].size(); ++t) {
        out << t << ',' << result.labels[k] << ",1," << text::fmt_g6(result.step_mean[k][t]) << "\n";
      }
      if (!result.step_tail.empty()) {
        for (std::size_t t = 0; t < result.step_tail[k].size(); ++t) {
          out << t << ',' << result.labels[k] << ",0.1," << text::fmt_g6(result.step_tail[k][t])
              << "\n";
        }
      }
      if (!result.percentile.empty()) {
        for (std::size_t p = 1; p <= 100; ++p) {
          out << result.window.last << ',' << result.labels[k] << ','
              << text::fmt_g6(static_cast<double>(p) / 100.0) << ','
              << text::fmt_g6(result.percentile[k][p - 1]) << "\n";
        }
      }
    }
    text::write_file(dir / "step_curves.csv", out.str());
  }

  if (!result.percentile.empty()) {
    // Per-replicate sweeps so downstream plots can build their own bands.
    std::ostringstream out;
    out << "replicate,method,percentile,coverage\n";
    for (std::size_t r = 0; r < result.replicates.size(); ++r) {
      for (std::size_t k = 0; k < result.labels.size(); ++k) {
        const std::vector<double>& sweep = result.replicates[r].percentile[k];
        for (std::size_t p = 1; p <= 100; ++p) {
          out << r << ',' << result.labels[k] << ','
              << text::fmt_g6(static_cast<double>(p) / 100.0) << ','
              << text::fmt_g6(sweep[p - 1]) << "\n";
        }
      }
    }
    text::write_file(dir / "percentile_replicates.csv", out.str());
  }
}

}  // namespace cptd
