#pragma once

#include <filesystem>
#include <vector>

#include "cptd/grid.hpp"
#include "cptd/panel.hpp"

namespace cptd {

enum class ForecastSource { per_step_linear, naive_last, external };

const char* to_string(ForecastSource source);

/// Point predictions aligned to a panel: one value per (series, step).
struct ForecastGrid {
  Grid y_hat;
  ForecastSource source = ForecastSource::external;
};

struct FitOptions {
  double lambda_ridge = 1e-3;        ///< ridge strength; intercept unpenalized
  bool standardize = false;          ///< z-score features on the training set
  bool use_lagged_responses = true;  ///< include y_{0..t-1} in the step-t design
  bool use_covariates = true;        ///< include x_{0..t} in the step-t design
};

/// One ridge-regression head per step. The head for step t sees the series'
/// responses before t and its covariates up to t, so predictions never look
/// ahead. Step 0 falls back to an intercept-only model when there are no
/// covariates.
class PerStepLinearModel {
 public:
  struct StepModel {
    std::vector<double> coef;
    double intercept = 0.0;
    std::vector<double> feat_mean;   // standardize-only, else empty
    std::vector<double> feat_scale;  // standardize-only, else empty
  };

  static PerStepLinearModel fit(const PanelData& train, const FitOptions& opts = {});

  /// Fits the same per-step structure against externally supplied targets
  /// (one per (series, step)). Used by the error predictor.
  static PerStepLinearModel fit_targets(const PanelData& train, const Grid& targets,
                                        const FitOptions& opts);

  /// Reassembles a model from serialized parts.
  static PerStepLinearModel from_parts(std::vector<StepModel> steps, std::size_t feature_dim,
                                       const FitOptions& opts);

  ForecastGrid predict(const PanelData& panel) const;
  double predict_cell(const PanelData& panel, std::size_t i, std::size_t t) const;

  std::size_t horizon() const { return steps_.size(); }
  std::size_t feature_dim() const { return feature_dim_; }
  const StepModel& step(std::size_t t) const { return steps_[t]; }
  const FitOptions& options() const { return opts_; }

  void save(const std::filesystem::path& path) const;
  static PerStepLinearModel load(const std::filesystem::path& path);

 private:
  std::vector<StepModel> steps_;
  std::size_t feature_dim_ = 0;
  FitOptions opts_;
};

/// Predicts the magnitude of the point-forecast error at each step from the
/// same per-step features, trained on |y - y_hat|. Outputs are floored at a
/// small positive value so they can serve as normalizers.
class ErrorPredictorModel {
 public:
  /// floor_value < 0 selects the default 1e-6 * (1 + mean |y_train|).
  static ErrorPredictorModel fit(const PanelData& train, const ForecastGrid& grid,
                                 const FitOptions& opts = {}, double floor_value = -1.0);

  Grid predict(const PanelData& panel) const;
  double floor_value() const { return floor_; }
  const PerStepLinearModel& base() const { return base_; }

  void save(const std::filesystem::path& path) const;
  static ErrorPredictorModel load(const std::filesystem::path& path);

 private:
  PerStepLinearModel base_;
  double floor_ = 0.0;
};

/// Baseline that repeats the previous response; step 0 predicts 0.
ForecastGrid predict_naive_last(const PanelData& panel);

/// Reads a prediction CSV (`series_id,t,y_hat`) that must cover every cell
/// of the panel exactly once.
ForecastGrid ingest_external_grid(const std::filesystem::path& path, const PanelData& panel);

void write_forecast_grid(const ForecastGrid& grid, const PanelData& panel,
                         const std::filesystem::path& path);

/// |y - y_hat| for every cell.
Grid abs_residuals(const PanelData& panel, const ForecastGrid& grid);

}  // namespace cptd
