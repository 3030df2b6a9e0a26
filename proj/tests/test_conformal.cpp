#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cptd/conformal.hpp"
#include "cptd/harness.hpp"
#include "cptd/rng.hpp"
#include "reference_conformal.hpp"

using namespace cptd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Independent sort-and-index oracle for the conformal quantile: append the
// +inf slot, sort, take the ceil((1-alpha)(n+1))-th entry.
double quantile_oracle(std::vector<double> scores, double alpha) {
  scores.push_back(kInf);
  std::sort(scores.begin(), scores.end());
  double pos = std::ceil((1.0 - alpha) * static_cast<double>(scores.size()) - 1e-9);
  return scores[static_cast<std::size_t>(pos) - 1];
}

// Context whose |residuals| equal the given values: y = residuals, y_hat = 0.
// `target_scores` fills the last column (used by build_pi); the test series'
// response at the target is left NaN.
CalibrationContext ctx_from_residuals(const std::vector<std::vector<double>>& history,
                                      std::vector<double> target_scores = {},
                                      double eps_floor = 1e-15, double alpha = 0.1) {
  std::size_t rows = history.size();
  std::size_t target = history.front().size();
  CalibrationContext ctx;
  ctx.alpha = alpha;
  ctx.eps_floor = eps_floor;
  ctx.y = Grid(rows, target + 1, std::numeric_limits<double>::quiet_NaN());
  ctx.y_hat = Grid(rows, target + 1, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t s = 0; s < target; ++s) ctx.y(i, s) = history[i][s];
  }
  if (target_scores.empty()) target_scores.assign(rows, 0.0);
  for (std::size_t i = 0; i + 1 < rows; ++i) ctx.y(i, target) = target_scores[i];
  return ctx;
}

PanelData panel_from_rows(const std::vector<std::vector<double>>& rows, const std::string& prefix) {
  std::vector<SeriesRecord> series;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    series.push_back(SeriesRecord{prefix + std::to_string(i), rows[i], {}});
  }
  return PanelData::from_series(std::move(series), 0);
}

struct Pipeline {
  PanelSplit blocks;
  Grid cal_pred, test_pred;
  ErrorPredictorModel error_model;
};

Pipeline make_pipeline(const SynthSpec& spec, SplitMode mode = SplitMode::temporal) {
  PanelData panel = generate_panel(spec);
  SplitSpec split_spec{spec.n_train, spec.n_cal, spec.n_test, mode, 11};
  Pipeline p;
  p.blocks = split_panel(panel, split_spec);
  PerStepLinearModel model = PerStepLinearModel::fit(p.blocks.train);
  p.cal_pred = model.predict(p.blocks.cal).y_hat;
  p.test_pred = model.predict(p.blocks.test).y_hat;
  p.error_model = ErrorPredictorModel::fit(p.blocks.train, model.predict(p.blocks.train));
  return p;
}

double rel_diff(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return (std::isinf(a) && std::isinf(b)) ? 0.0 : kInf;
  double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace

TEST_CASE("conformal quantile follows the sort-and-index oracle") {
  std::vector<double> one_to_nine{1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(conformal_quantile(one_to_nine, 0.1) == 9.0);
  CHECK(conformal_quantile(one_to_nine, 0.1) == quantile_oracle(one_to_nine, 0.1));

  std::vector<double> four{1, 2, 3, 4};
  CHECK(conformal_quantile(four, 0.5) == 3.0);
  CHECK(conformal_quantile(four, 0.5) == quantile_oracle(four, 0.5));

  std::vector<double> five{1, 2, 3, 4, 5};
  CHECK(std::isinf(conformal_quantile(five, 0.1)));

  rng::Rng gen(42);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 1 + gen.below(12);
    std::vector<double> scores(n);
    for (double& s : scores) s = 10.0 * gen.uniform01();
    double alpha = 0.05 + 0.9 * gen.uniform01();
    CHECK(conformal_quantile(scores, alpha) == quantile_oracle(scores, alpha));
  }
}

TEST_CASE("conformal quantile edge behaviour") {
  std::vector<double> empty;
  CHECK_THROWS_WITH_AS(conformal_quantile(empty, 0.1), doctest::Contains("EmptyScores"), Error);
  std::vector<double> scores{3, 1, 2};
  CHECK_THROWS_AS(conformal_quantile(scores, 0.0), Error);
  CHECK_THROWS_AS(conformal_quantile(scores, 1.0), Error);

  // Non-increasing in alpha.
  double previous = kInf;
  for (double alpha : {0.05, 0.1, 0.25, 0.5, 0.75, 0.9}) {
    double q = conformal_quantile(scores, alpha);
    CHECK(q <= previous);
    previous = q;
  }
}

TEST_CASE("mad normalizer: expanding mean of own residuals") {
  auto ctx = ctx_from_residuals({{1, 2, 3}, {1, 2, 3}});
  NormalizerState state = mad_normalizer(ctx);
  CHECK(state.m_hat[0] == 2.0);
  CHECK(state.m_hat[1] == 2.0);

  auto zeros = ctx_from_residuals({{0, 0}, {0, 0}}, {}, 1e-12);
  CHECK(mad_normalizer(zeros).m_hat[0] == 1e-12);

  auto two = ctx_from_residuals({{2, 2}, {4, 4}});
  NormalizerState per_series = mad_normalizer(two);
  CHECK(per_series.m_hat[0] == 2.0);
  CHECK(per_series.m_hat[1] == 4.0);

  auto no_history = ctx_from_residuals({{}, {}});
  CHECK_THROWS_WITH_AS(mad_normalizer(no_history), doctest::Contains("NoHistory"), Error);
}

TEST_CASE("mad normalizer: exponential weighting is optional") {
  auto ctx = ctx_from_residuals({{0, 3}, {0, 3}});
  CHECK(mad_normalizer(ctx).m_hat[0] == 1.5);
  ctx.mad_decay = 0.5;
  // weights (0.5, 1): (0*0.5 + 3) / 1.5
  CHECK(mad_normalizer(ctx).m_hat[0] == 2.0);
}

TEST_CASE("median residuals: midpoint convention and floor") {
  auto odd = ctx_from_residuals({{1}, {2}, {3}});
  CHECK(median_residuals(odd) == std::vector<double>{2.0});

  auto even = ctx_from_residuals({{1}, {2}, {3}, {10}});
  CHECK(median_residuals(even) == std::vector<double>{2.5});

  auto zeros = ctx_from_residuals({{0}, {0}, {0}}, {}, 1e-12);
  CHECK(median_residuals(zeros) == std::vector<double>{1e-12});
}

TEST_CASE("normalized residual mean") {
  auto ratio_one = ctx_from_residuals({{5, 7}, {5, 7}, {5, 7}});
  std::vector<double> medians = median_residuals(ratio_one);
  std::vector<double> nr = normalized_residual_mean(ratio_one, medians);
  for (double v : nr) CHECK(v == 1.0);

  auto two_rows = ctx_from_residuals({{2, 8}, {0, 0}});
  std::vector<double> m{2.0, 4.0};
  nr = normalized_residual_mean(two_rows, m);
  CHECK(nr[0] == 1.5);
  CHECK(nr[1] == 0.0);
}

TEST_CASE("rank estimate: prior and empirical CDF positions") {
  auto fresh = ctx_from_residuals({{}, {}, {}});
  for (double q : estimate_rank(fresh)) CHECK(q == 0.5);

  auto held_max = ctx_from_residuals({{9}, {1}, {2}, {3}});
  std::vector<double> q = estimate_rank(held_max);
  CHECK(q[0] == 0.75);  // F = 1 at the only step

  auto second_smallest = ctx_from_residuals({{1}, {2}, {3}, {4}});
  q = estimate_rank(second_smallest);
  CHECK(q[1] == 0.5);  // F = 2/4
}

TEST_CASE("rank lookup: order statistic with floor") {
  std::vector<double> nr{1, 2, 3};
  std::vector<double> q{0.5, 0.5, 0.5};
  std::vector<double> m = lookup_normalizer(q, nr, 1e-15);
  CHECK(m == std::vector<double>{2, 2, 2});

  std::vector<double> equal{4.5, 4.5, 4.5, 4.5};
  for (double qq : {0.05, 0.4, 0.97}) {
    std::vector<double> qv(equal.size(), qq);
    for (double v : lookup_normalizer(qv, equal, 1e-15)) CHECK(v == 4.5);
  }

  std::vector<double> zeros{0, 0, 0};
  CHECK(lookup_normalizer(q, zeros, 1e-12) == std::vector<double>{1e-12, 1e-12, 1e-12});
}

TEST_CASE("ratio-to-median normalizer on the worked fixture") {
  // Residual paths [1,2], [2,4], [3,6]; target step 2.
  auto ctx = ctx_from_residuals({{1, 2}, {2, 4}, {3, 6}});
  NormalizerState state = rat_normalizer(ctx);

  CHECK(state.median_abs == std::vector<double>{2.0, 4.0});
  CHECK(state.nr == std::vector<double>{0.5, 1.0, 1.5});
  CHECK(state.q_hat[0] == doctest::Approx((0.5 + 2.0 / 3.0) / 3.0).epsilon(1e-15));
  CHECK(state.m_hat[0] == 1.0);  // rank 2 of {0.5, 1, 1.5}

  // Same fixture through the serial reference implementation.
  refimpl::RefInputs in;
  in.y_cal = {{1, 2, 0}, {2, 4, 0}};
  in.yhat_cal = {{0, 0, 0}, {0, 0, 0}};
  in.y_test = {3, 6, 0};
  in.yhat_test = {0, 0, 0};
  in.alpha = 0.5;
  refimpl::RefInterval ref = refimpl::interval_at(in, "cptd_rat", 2);
  ctx.alpha = 0.5;
  ctx.eps_floor = 1e-12 * (1.0 + (1 + 2 + 0 + 2 + 4 + 0) / 6.0);
  PredictionInterval pi = build_pi(ctx, rat_normalizer(ctx));
  CHECK(rel_diff(pi.half_width, ref.half_width) <= 1e-12);
}

TEST_CASE("ratio-to-median normalizer: symmetry and no-history") {
  auto identical = ctx_from_residuals({{2, 5}, {2, 5}, {2, 5}, {2, 5}});
  NormalizerState state = rat_normalizer(identical);
  for (double v : state.m_hat) CHECK(v == state.m_hat[0]);

  auto fresh = ctx_from_residuals({{}, {}});
  CHECK_THROWS_WITH_AS(rat_normalizer(fresh), doctest::Contains("NoHistory"), Error);
}

TEST_CASE("ratio-to-median intermediates stay in range") {
  rng::Rng gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t rows = 3 + gen.below(5);
    std::size_t target = 1 + gen.below(4);
    std::vector<std::vector<double>> residuals(rows, std::vector<double>(target));
    for (auto& row : residuals) {
      for (double& v : row) v = std::abs(gen.gauss());
    }
    NormalizerState state = rat_normalizer(ctx_from_residuals(residuals));
    for (double q : state.q_hat) {
      CHECK(q > 0.0);
      CHECK(q < 1.0);
    }
    for (double v : state.nr) CHECK(v >= 0.0);
    for (double m : state.median_abs) CHECK(m > 0.0);
  }

  // A series holding the maximum residual at every step has CDF position 1.
  auto held_max = ctx_from_residuals({{9, 9, 9}, {1, 1, 1}, {2, 2, 2}});
  std::vector<double> q = estimate_rank(held_max);
  CHECK(q[0] == (0.5 + 3.0) / 4.0);
}

TEST_CASE("lasplit normalizer flooring and shape checks") {
  auto ctx = ctx_from_residuals({{1, 1}, {1, 1}});
  std::vector<double> constant{3, 3};
  NormalizerState state = lasplit_normalizer(ctx, constant, 1e-3);
  CHECK(state.m_hat == std::vector<double>{3, 3});

  std::vector<double> zeros{0, 0};
  CHECK(lasplit_normalizer(ctx, zeros, 1e-3).m_hat == std::vector<double>{1e-3, 1e-3});

  std::vector<double> wrong{1, 2, 3};
  CHECK_THROWS_WITH_AS(lasplit_normalizer(ctx, wrong, 1e-3), doctest::Contains("ShapeMismatch"),
                       Error);
}

TEST_CASE("interval construction") {
  // Identity normalizer, calibration |residuals| 1..9, alpha = 0.1, center 0.
  std::vector<std::vector<double>> rows(10);  // 9 cal + test, no history
  auto ctx = ctx_from_residuals(rows, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  ctx.alpha = 0.1;
  PredictionInterval pi = build_pi(ctx, split_normalizer(ctx));
  CHECK(pi.lower() == -9.0);
  CHECK(pi.upper() == 9.0);

  // Too few calibration series for alpha = 0.1: unbounded but still valid.
  std::vector<std::vector<double>> small(6);
  auto small_ctx = ctx_from_residuals(small, {1, 2, 3, 4, 5});
  small_ctx.alpha = 0.1;
  pi = build_pi(small_ctx, split_normalizer(small_ctx));
  CHECK(pi.unbounded());
  CHECK(std::isinf(pi.width()));
  CHECK(pi.covers(1e100));

  // threshold 3, test factor 2, center 10 -> [4, 16].
  std::vector<std::vector<double>> four(5);
  auto ctx3 = ctx_from_residuals(four, {1, 2, 3, 4});
  ctx3.alpha = 0.5;
  ctx3.y_hat(4, 0) = 10.0;
  NormalizerState norm = split_normalizer(ctx3);
  norm.m_hat.back() = 2.0;
  pi = build_pi(ctx3, norm);
  CHECK(pi.lower() == 4.0);
  CHECK(pi.upper() == 16.0);
  CHECK(!std::isnan(pi.half_width));
}

TEST_CASE("calibrate_path: split width is series-independent; first step falls back") {
  SynthSpec spec;
  spec.n_train = 10;
  spec.n_cal = 8;
  spec.n_test = 4;
  spec.horizon = 5;
  spec.seed = 3;
  Pipeline p = make_pipeline(spec);

  CalibrateOptions opts;
  opts.alpha = 0.3;
  IntervalGrid split_grid = calibrate_path(p.blocks.cal, p.cal_pred, p.blocks.test, p.test_pred,
                                           Method::split, opts);
  for (std::size_t t = 0; t < split_grid.horizon; ++t) {
    for (std::size_t j = 1; j < split_grid.n_series; ++j) {
      CHECK(split_grid.at(j, t).half_width == split_grid.at(0, t).half_width);
    }
  }

  for (Method method : {Method::cptd_mad, Method::cptd_rat}) {
    IntervalGrid grid = calibrate_path(p.blocks.cal, p.cal_pred, p.blocks.test, p.test_pred,
                                       method, opts);
    for (std::size_t j = 0; j < grid.n_series; ++j) {
      CHECK(grid.at(j, 0).half_width == split_grid.at(j, 0).half_width);
      CHECK(grid.at(j, 0).center == split_grid.at(j, 0).center);
    }
  }
}

TEST_CASE("calibrate_path equals the per-operation composition cell by cell") {
  SynthSpec spec;
  spec.n_train = 8;
  spec.n_cal = 6;
  spec.n_test = 3;
  spec.horizon = 4;
  spec.scale_dist = ScaleDist::lognormal;
  spec.sigma_scale = 0.8;
  spec.seed = 19;
  Pipeline p = make_pipeline(spec);

  CalibrateOptions opts;
  opts.alpha = 0.35;

  Grid err_cal = p.error_model.predict(p.blocks.cal);
  Grid err_test = p.error_model.predict(p.blocks.test);

  for (Method method : {Method::split, Method::cptd_mad, Method::cptd_rat, Method::lasplit}) {
    IntervalGrid grid = calibrate_path(p.blocks.cal, p.cal_pred, p.blocks.test, p.test_pred,
                                       method, opts, &p.error_model);
    for (std::size_t j = 0; j < grid.n_series; ++j) {
      for (std::size_t t = 0; t < grid.horizon; ++t) {
        CalibrationContext ctx = make_calibration_context(p.blocks.cal, p.cal_pred, p.blocks.test,
                                                          p.test_pred, j, t, opts);
        NormalizerState state;
        if (method == Method::split || (t == 0 && method != Method::lasplit)) {
          state = split_normalizer(ctx);
        } else if (method == Method::cptd_mad) {
          state = mad_normalizer(ctx);
        } else if (method == Method::cptd_rat) {
          state = rat_normalizer(ctx);
        } else {
          std::vector<double> predicted(ctx.n_cal() + 1);
          for (std::size_t i = 0; i < ctx.n_cal(); ++i) predicted[i] = err_cal(i, t);
          predicted.back() = err_test(j, t);
          state = lasplit_normalizer(ctx, predicted, p.error_model.floor_value());
        }
        PredictionInterval expected = build_pi(ctx, state);
        PredictionInterval actual = grid.at(j, t);
        CHECK(actual.center == expected.center);
        CHECK(actual.half_width == expected.half_width);
      }
    }
  }
}

TEST_CASE("calibrate_path matches the serial reference on random tiny panels") {
  rng::Rng gen(2024);
  for (int trial = 0; trial < 25; ++trial) {
    SynthSpec spec;
    spec.n_train = 4 + gen.below(3);
    spec.n_cal = 2 + gen.below(4);   // N_cal <= 5
    spec.n_test = 1 + gen.below(2);
    spec.horizon = 2 + gen.below(3);  // T <= 4
    spec.scale_dist = ScaleDist::lognormal;
    spec.sigma_scale = 0.5;
    spec.seed = 1000 + static_cast<std::uint64_t>(trial);
    Pipeline p = make_pipeline(spec);

    CalibrateOptions opts;
    const double alphas[] = {0.2, 0.35, 0.5};
    opts.alpha = alphas[trial % 3];

    refimpl::RefInputs in;
    in.alpha = opts.alpha;
    in.err_floor = p.error_model.floor_value();
    std::size_t n = p.blocks.cal.n_series();
    std::size_t horizon = p.blocks.cal.horizon();
    Grid err_cal = p.error_model.predict(p.blocks.cal);
    Grid err_test = p.error_model.predict(p.blocks.test);
    in.y_cal.resize(n);
    in.yhat_cal.resize(n);
    in.err_cal.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      in.y_cal[i] = p.blocks.cal.series(i).y;
      in.yhat_cal[i].assign(horizon, 0.0);
      in.err_cal[i].assign(horizon, 0.0);
      for (std::size_t t = 0; t < horizon; ++t) {
        in.yhat_cal[i][t] = p.cal_pred(i, t);
        in.err_cal[i][t] = err_cal(i, t);
      }
    }

    for (Method method : {Method::split, Method::cptd_mad, Method::cptd_rat, Method::lasplit}) {
      IntervalGrid grid = calibrate_path(p.blocks.cal, p.cal_pred, p.blocks.test, p.test_pred,
                                         method, opts, &p.error_model);
      for (std::size_t j = 0; j < grid.n_series; ++j) {
        in.y_test = p.blocks.test.series(j).y;
        in.yhat_test.assign(horizon, 0.0);
        in.err_test.assign(horizon, 0.0);
        for (std::size_t t = 0; t < horizon; ++t) {
          in.yhat_test[t] = p.test_pred(j, t);
          in.err_test[t] = err_test(j, t);
        }
        std::vector<refimpl::RefInterval> expected =
            refimpl::calibrate_series(in, method_name(method));
        for (std::size_t t = 0; t < horizon; ++t) {
          CHECK(grid.at(j, t).center == expected[t].center);
          CHECK(rel_diff(grid.at(j, t).half_width, expected[t].half_width) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("permuting calibration series leaves intervals bit-identical") {
  SynthSpec spec;
  spec.n_train = 10;
  spec.n_cal = 9;
  spec.n_test = 3;
  spec.horizon = 5;
  spec.scale_dist = ScaleDist::lognormal;
  spec.sigma_scale = 1.0;
  spec.seed = 99;
  Pipeline p = make_pipeline(spec);

  CalibrateOptions opts;
  opts.alpha = 0.3;

  std::vector<std::size_t> perm(p.blocks.cal.n_series());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng::Rng gen(5);
  gen.shuffle(perm);
  PanelData cal_perm = p.blocks.cal.take(perm);
  Grid cal_pred_perm(p.cal_pred.rows, p.cal_pred.cols);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t t = 0; t < p.cal_pred.cols; ++t) cal_pred_perm(i, t) = p.cal_pred(perm[i], t);
  }

  for (Method method : {Method::split, Method::cptd_mad, Method::cptd_rat, Method::lasplit}) {
    IntervalGrid base = calibrate_path(p.blocks.cal, p.cal_pred, p.blocks.test, p.test_pred,
                                       method, opts, &p.error_model);
    IntervalGrid permuted = calibrate_path(cal_perm, cal_pred_perm, p.blocks.test, p.test_pred,
                                           method, opts, &p.error_model);
    CHECK(base.center == permuted.center);
    CHECK(base.half_width == permuted.half_width);
  }
}

TEST_CASE("no lookahead: later responses never move earlier intervals") {
  SynthSpec spec;
  spec.n_train = 10;
  spec.n_cal = 7;
  spec.n_test = 2;
  spec.horizon = 5;
  spec.seed = 21;
  PanelData panel = generate_panel(spec);
  SplitSpec split_spec{spec.n_train, spec.n_cal, spec.n_test, SplitMode::temporal, 0};
  PanelSplit blocks = split_panel(panel, split_spec);
  PerStepLinearModel model = PerStepLinearModel::fit(blocks.train);
  ErrorPredictorModel error_model =
      ErrorPredictorModel::fit(blocks.train, model.predict(blocks.train));

  CalibrateOptions opts;
  opts.alpha = 0.25;
  auto calibrate_all = [&](const PanelData& cal, const PanelData& test) {
    std::vector<IntervalGrid> grids;
    for (Method method : {Method::split, Method::cptd_mad, Method::cptd_rat, Method::lasplit}) {
      grids.push_back(calibrate_path(cal, model.predict(cal).y_hat, test, model.predict(test).y_hat,
                                     method, opts, &error_model));
    }
    return grids;
  };
  std::vector<IntervalGrid> base = calibrate_all(blocks.cal, blocks.test);

  const std::size_t cut = 2;  // perturb responses at steps >= cut
  auto perturb = [&](const PanelData& block, std::size_t series) {
    std::vector<SeriesRecord> records = block.all();
    for (std::size_t t = cut; t < records[series].y.size(); ++t) records[series].y[t] += 17.5;
    return PanelData::from_series(std::move(records), 0);
  };
  std::vector<IntervalGrid> moved =
      calibrate_all(perturb(blocks.cal, 0), perturb(blocks.test, 1));

  for (std::size_t k = 0; k < base.size(); ++k) {
    for (std::size_t j = 0; j < base[k].n_series; ++j) {
      for (std::size_t t = 0; t < cut; ++t) {
        CHECK(base[k].at(j, t).center == moved[k].at(j, t).center);
        CHECK(base[k].at(j, t).half_width == moved[k].at(j, t).half_width);
      }
    }
  }

  // Perturbing the test response at the target step itself does not change
  // that step's interval (it is the value being predicted).
  std::vector<SeriesRecord> records = blocks.test.all();
  records[0].y[cut] += 3.0;
  std::vector<IntervalGrid> target_moved =
      calibrate_all(blocks.cal, PanelData::from_series(std::move(records), 0));
  for (std::size_t k = 0; k < base.size(); ++k) {
    CHECK(base[k].at(0, cut).center == target_moved[k].at(0, cut).center);
    CHECK(base[k].at(0, cut).half_width == target_moved[k].at(0, cut).half_width);
  }
}

TEST_CASE("nested levels and scale equivariance") {
  SynthSpec spec;
  spec.n_train = 8;
  spec.n_cal = 6;
  spec.n_test = 2;
  spec.horizon = 4;
  spec.seed = 33;
  Pipeline p = make_pipeline(spec);

  for (Method method : {Method::split, Method::cptd_mad, Method::cptd_rat, Method::lasplit}) {
    CalibrateOptions narrow{0.5, 1.0, 0.0};
    CalibrateOptions wide{0.2, 1.0, 0.0};
    IntervalGrid narrow_grid = calibrate_path(p.blocks.cal, p.cal_pred, p.blocks.test, p.test_pred,
                                              method, narrow, &p.error_model);
    IntervalGrid wide_grid = calibrate_path(p.blocks.cal, p.cal_pred, p.blocks.test, p.test_pred,
                                            method, wide, &p.error_model);
    for (std::size_t idx = 0; idx < narrow_grid.half_width.size(); ++idx) {
      CHECK(narrow_grid.center[idx] == wide_grid.center[idx]);
      CHECK(narrow_grid.half_width[idx] <= wide_grid.half_width[idx]);
    }
  }

  // Split conformal scales with the data.
  const double c = 2.5;
  auto scale_panel = [&](const PanelData& block) {
    std::vector<SeriesRecord> records = block.all();
    for (SeriesRecord& r : records) {
      for (double& v : r.y) v *= c;
    }
    return PanelData::from_series(std::move(records), 0);
  };
  Grid cal_scaled = p.cal_pred;
  Grid test_scaled = p.test_pred;
  for (double& v : cal_scaled.data) v *= c;
  for (double& v : test_scaled.data) v *= c;

  CalibrateOptions opts{0.3, 1.0, 0.0};
  IntervalGrid base = calibrate_path(p.blocks.cal, p.cal_pred, p.blocks.test, p.test_pred,
                                     Method::split, opts);
  IntervalGrid scaled = calibrate_path(scale_panel(p.blocks.cal), cal_scaled,
                                       scale_panel(p.blocks.test), test_scaled, Method::split, opts);
  for (std::size_t idx = 0; idx < base.half_width.size(); ++idx) {
    CHECK(rel_diff(scaled.half_width[idx], c * base.half_width[idx]) <= 1e-12);
  }
}

TEST_CASE("interval CSV round-trips") {
  SynthSpec spec;
  spec.n_train = 6;
  spec.n_cal = 5;
  spec.n_test = 2;
  spec.horizon = 3;
  spec.seed = 55;
  Pipeline p = make_pipeline(spec);
  CalibrateOptions opts;
  opts.alpha = 0.1;  // small calibration set: every interval is unbounded
  IntervalGrid grid = calibrate_path(p.blocks.cal, p.cal_pred, p.blocks.test, p.test_pred,
                                     Method::split, opts);

  auto path = std::filesystem::temp_directory_path() / "cptd_test_intervals.csv";
  write_intervals_csv(grid, p.blocks.test, path);
  NamedIntervals parsed = read_intervals_csv(path);
  CHECK(parsed.ids.size() == grid.n_series);
  CHECK(parsed.grid.method == Method::split);
  for (std::size_t j = 0; j < grid.n_series; ++j) {
    CHECK(parsed.ids[j] == p.blocks.test.series(j).id);
    for (std::size_t t = 0; t < grid.horizon; ++t) {
      CHECK(parsed.grid.at(j, t).unbounded() == grid.at(j, t).unbounded());
    }
  }
  std::filesystem::remove(path);
}
