#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cptd/forecaster.hpp"
#include "cptd/grid.hpp"
#include "cptd/panel.hpp"

namespace cptd {

/// Interval construction methods. `split` is plain split conformal
/// (identity normalizer); `cptd_mad` normalizes scores by each series' own
/// mean absolute residual so far; `cptd_rat` normalizes by a rank-matched
/// quantile of the pooled median-normalized residual means; `lasplit`
/// normalizes by a fitted error predictor.
enum class Method { split, cptd_mad, cptd_rat, lasplit };

const char* method_name(Method method);
Method method_from_name(const std::string& name);

/// Symmetric interval around a point prediction. half_width == +inf encodes
/// the whole real line (the conservative fallback when the conformal rank
/// exceeds the calibration set).
struct PredictionInterval {
  std::size_t series = 0;  ///< index into the test panel
  std::size_t step = 0;    ///< 0-based
  double alpha = 0.1;
  double center = 0.0;
  double half_width = 0.0;

  bool unbounded() const { return std::isinf(half_width); }
  double lower() const { return unbounded() ? -std::numeric_limits<double>::infinity() : center - half_width; }
  double upper() const { return unbounded() ? std::numeric_limits<double>::infinity() : center + half_width; }
  double width() const { return unbounded() ? std::numeric_limits<double>::infinity() : 2.0 * half_width; }
  bool covers(double value) const { return unbounded() || std::abs(value - center) <= half_width; }
};

/// Everything observable when calibrating one test series at one target
/// step: responses and predictions for the calibration series up to and
/// including the target step, and for the test series up to the step before
/// it. Row n_cal() is the test series; y(n_cal(), target_step()) is never
/// read (it is the value being predicted).
struct CalibrationContext {
  Grid y;      ///< (N+1) x (target_step+1)
  Grid y_hat;  ///< (N+1) x (target_step+1)
  double alpha = 0.1;
  double eps_floor = 1e-12;   ///< positive guard for every division
  double prior_weight = 1.0;  ///< weight of the 0.5 rank prior
  double mad_decay = 0.0;     ///< 0 = plain expanding mean; (0,1) = exponential weighting

  std::size_t n_cal() const { return y.rows - 1; }
  std::size_t target_step() const { return y.cols - 1; }
  double abs_residual(std::size_t i, std::size_t s) const { return std::abs(y(i, s) - y_hat(i, s)); }
};

/// Per-series normalization factors for one target step. For cptd_rat the
/// intermediates are kept so tests and diagnostics can inspect them.
struct NormalizerState {
  Method method = Method::split;
  std::vector<double> m_hat;       ///< N+1 factors, test series last
  std::vector<double> median_abs;  ///< per past step (cptd_rat only)
  std::vector<double> nr;          ///< pooled normalized-residual means (cptd_rat only)
  std::vector<double> q_hat;       ///< estimated rank percentiles (cptd_rat only)
};

/// Conformal calibration rank: k = ceil((1-alpha)(n+1)), computed through
/// the complement so floating-point noise at integer boundaries cannot
/// shift the order statistic.
std::size_t conformal_rank(std::size_t n, double alpha);

/// k-th smallest element of scores ∪ {+inf} with k = conformal_rank(n, alpha);
/// +inf exactly when the rank exceeds the number of finite scores.
double conformal_quantile(std::span<const double> scores, double alpha);

/// Identity normalizer (plain split conformal); every factor is 1.
NormalizerState split_normalizer(const CalibrationContext& ctx);

/// Each series' expanding mean absolute residual over the past steps,
/// floored at eps_floor. Requires at least one past step.
NormalizerState mad_normalizer(const CalibrationContext& ctx);

/// Cross-sectional median of |residual| at each past step, floored.
std::vector<double> median_residuals(const CalibrationContext& ctx);

/// Expanding mean of |residual| / median_abs per series.
std::vector<double> normalized_residual_mean(const CalibrationContext& ctx,
                                             std::span<const double> median_abs);

/// Estimated rank percentile per series: prior-weighted expanding mean of
/// the empirical CDF values of the series' past residuals. Valid with no
/// history (returns the 0.5 prior).
std::vector<double> estimate_rank(const CalibrationContext& ctx);

/// Order-statistic lookup: the k-th smallest pooled value with
/// k = max(1, ceil(q_hat * (N+1))), floored at eps_floor.
std::vector<double> lookup_normalizer(std::span<const double> q_hat, std::span<const double> nr,
                                      double eps_floor);

/// Ratio-to-median normalizer: median_residuals -> estimate_rank ->
/// normalized_residual_mean -> lookup_normalizer, intermediates included.
NormalizerState rat_normalizer(const CalibrationContext& ctx);

/// Normalizer from a fitted error predictor: one predicted |residual| per
/// series at the target step, floored at the predictor floor.
NormalizerState lasplit_normalizer(const CalibrationContext& ctx,
                                   std::span<const double> predicted_errors, double floor_value);

/// Interval for the test series at the context's target step: calibration
/// scores are |residual| / m_hat, the threshold is their conformal quantile,
/// and the half-width is threshold * m_hat(test).
PredictionInterval build_pi(const CalibrationContext& ctx, const NormalizerState& norm);

struct CalibrateOptions {
  double alpha = 0.1;
  double prior_weight = 1.0;
  double mad_decay = 0.0;
};

/// Intervals for every (test series, step) cell of one method.
struct IntervalGrid {
  Method method = Method::split;
  double alpha = 0.1;
  std::size_t n_series = 0;
  std::size_t horizon = 0;
  std::vector<double> center;      ///< n_series * horizon, row-major
  std::vector<double> half_width;  ///< n_series * horizon, row-major

  IntervalGrid() = default;
  IntervalGrid(Method m, double a, std::size_t n, std::size_t t)
      : method(m), alpha(a), n_series(n), horizon(t), center(n * t, 0.0), half_width(n * t, 0.0) {}

  PredictionInterval at(std::size_t i, std::size_t t) const {
    return PredictionInterval{i, t, alpha, center[i * horizon + t], half_width[i * horizon + t]};
  }
  void set(std::size_t i, std::size_t t, double c, double hw) {
    center[i * horizon + t] = c;
    half_width[i * horizon + t] = hw;
  }
};

/// Builds the explicit context for one (test series, step) cell. The
/// division guard is derived from the calibration responses visible in the
/// context; its terms are combined in sorted order so the value does not
/// depend on the ordering of the calibration series.
CalibrationContext make_calibration_context(const PanelData& cal, const Grid& cal_pred,
                                            const PanelData& test, const Grid& test_pred,
                                            std::size_t test_index, std::size_t target_step,
                                            const CalibrateOptions& opts);

/// Calibrates every (test series, step) cell. Each test series is handled
/// independently with only its own past (other test series never enter a
/// context); cells are evaluated concurrently across test series. The first
/// step has no history, so cptd_mad and cptd_rat fall back to the identity
/// normalizer there. lasplit requires `error_model`.
IntervalGrid calibrate_path(const PanelData& cal, const Grid& cal_pred, const PanelData& test,
                            const Grid& test_pred, Method method, const CalibrateOptions& opts,
                            const ErrorPredictorModel* error_model = nullptr);

/// Interval CSV: series_id,t,method,alpha,y_hat,lower,upper with inf/-inf
/// tokens for unbounded bounds.
void write_intervals_csv(const IntervalGrid& grid, const PanelData& test,
                         const std::filesystem::path& path);
std::string intervals_to_csv(const IntervalGrid& grid, const PanelData& test);

struct NamedIntervals {
  std::vector<std::string> ids;
  IntervalGrid grid;
};

NamedIntervals read_intervals_csv(const std::filesystem::path& path);

}  // namespace cptd
