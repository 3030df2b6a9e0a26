// Benchmark: the OpenMP calibration engine vs the serial straight-line
// reference, per method, on a mid-size synthetic panel.
//
//   cptd-bench [n_cal] [n_test] [horizon] [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "cptd/conformal.hpp"
#include "cptd/harness.hpp"
#include "reference_conformal.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

refimpl::Matrix to_matrix(const cptd::PanelData& panel) {
  refimpl::Matrix out(panel.n_series(), std::vector<double>(panel.horizon()));
  for (std::size_t i = 0; i < panel.n_series(); ++i) {
    for (std::size_t t = 0; t < panel.horizon(); ++t) out[i][t] = panel.y(i, t);
  }
  return out;
}

refimpl::Matrix to_matrix(const cptd::Grid& grid) {
  refimpl::Matrix out(grid.rows, std::vector<double>(grid.cols));
  for (std::size_t i = 0; i < grid.rows; ++i) {
    for (std::size_t t = 0; t < grid.cols; ++t) out[i][t] = grid(i, t);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n_cal = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 99;
  std::size_t n_test = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 100;
  std::size_t horizon = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 20;
  int repeats = argc > 4 ? std::atoi(argv[4]) : 3;

  cptd::SynthSpec spec;
  spec.n_train = 100;
  spec.n_cal = n_cal;
  spec.n_test = n_test;
  spec.horizon = horizon;
  spec.scale_dist = cptd::ScaleDist::lognormal;
  spec.sigma_scale = 1.0;
  spec.seed = 7;

  cptd::PanelData panel = cptd::generate_panel(spec);
  cptd::SplitSpec split_spec{spec.n_train, spec.n_cal, spec.n_test, cptd::SplitMode::temporal, 0};
  cptd::PanelSplit blocks = cptd::split_panel(panel, split_spec);

  cptd::PerStepLinearModel model = cptd::PerStepLinearModel::fit(blocks.train);
  cptd::Grid cal_pred = model.predict(blocks.cal).y_hat;
  cptd::Grid test_pred = model.predict(blocks.test).y_hat;
  cptd::ErrorPredictorModel error_model =
      cptd::ErrorPredictorModel::fit(blocks.train, model.predict(blocks.train));

  cptd::Grid err_cal = error_model.predict(blocks.cal);
  cptd::Grid err_test = error_model.predict(blocks.test);

  std::printf("panel: n_cal=%zu n_test=%zu horizon=%zu threads=%d\n", n_cal, n_test, horizon,
              omp_get_max_threads());
  std::printf("%-10s %14s %14s %10s\n", "method", "engine [ms]", "reference [ms]", "speedup");

  cptd::CalibrateOptions opts;
  opts.alpha = 0.1;
  for (cptd::Method method :
       {cptd::Method::split, cptd::Method::cptd_mad, cptd::Method::cptd_rat, cptd::Method::lasplit}) {
    double engine_best = 1e300;
    for (int r = 0; r < repeats; ++r) {
      auto start = Clock::now();
      cptd::IntervalGrid grid = cptd::calibrate_path(blocks.cal, cal_pred, blocks.test, test_pred,
                                                     method, opts, &error_model);
      engine_best = std::min(engine_best, seconds_since(start));
      if (grid.center.empty()) return 1;
    }

    refimpl::RefInputs inputs;
    inputs.y_cal = to_matrix(blocks.cal);
    inputs.yhat_cal = to_matrix(cal_pred);
    inputs.alpha = opts.alpha;
    inputs.err_cal = to_matrix(err_cal);
    inputs.err_floor = error_model.floor_value();

    double ref_best = 1e300;
    for (int r = 0; r < repeats; ++r) {
      auto start = Clock::now();
      for (std::size_t j = 0; j < blocks.test.n_series(); ++j) {
        inputs.y_test = blocks.test.series(j).y;
        inputs.yhat_test.assign(test_pred.data.begin() + static_cast<std::ptrdiff_t>(j * horizon),
                                test_pred.data.begin() + static_cast<std::ptrdiff_t>((j + 1) * horizon));
        inputs.err_test.assign(err_test.data.begin() + static_cast<std::ptrdiff_t>(j * horizon),
                               err_test.data.begin() + static_cast<std::ptrdiff_t>((j + 1) * horizon));
        auto intervals = refimpl::calibrate_series(inputs, cptd::method_name(method));
        if (intervals.size() != horizon) return 1;
      }
      ref_best = std::min(ref_best, seconds_since(start));
    }

    std::printf("%-10s %14.2f %14.2f %9.1fx\n", cptd::method_name(method), engine_best * 1e3,
                ref_best * 1e3, ref_best / engine_best);
  }
  return 0;
}
