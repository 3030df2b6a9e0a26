#pragma once

// Serial straight-line reference for the conformal calibration path. This is
// deliberately naive: every cell recomputes everything from scratch with
// plain loops over plain vectors, with no state shared across steps and no
// code shared with the engine. Tests compare the optimized engine against
// it; the benchmark uses it as the serial baseline.

#include <cstddef>
#include <string>
#include <vector>

namespace refimpl {

using Matrix = std::vector<std::vector<double>>;  // [series][step]

struct RefInterval {
  double center = 0.0;
  double half_width = 0.0;  // +inf encodes the unbounded interval
};

struct RefInputs {
  Matrix y_cal;     // N x T observed responses, calibration series
  Matrix yhat_cal;  // N x T predictions
  std::vector<double> y_test;     // T observed responses, one test series
  std::vector<double> yhat_test;  // T predictions for the test series
  double alpha = 0.1;
  double prior_weight = 1.0;
  // lasplit only: externally predicted |error| per (series, step) and floor
  Matrix err_cal;
  std::vector<double> err_test;
  double err_floor = 0.0;
};

// method: "split", "cptd_mad", "cptd_rat" or "lasplit".
RefInterval interval_at(const RefInputs& in, const std::string& method, std::size_t target_step);

// All steps 0..T-1 for the one test series.
std::vector<RefInterval> calibrate_series(const RefInputs& in, const std::string& method);

}  // namespace refimpl
