#include "cptd/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cptd/error.hpp"
#include "cptd/text.hpp"

namespace cptd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Index form of ceil(x) that tolerates floating-point noise just above an
// integer. Arguments here are products like q * (N+1) whose exact values sit
// on integers for round alphas/quantiles.
std::size_t ceil_index(double x) {
  double c = std::ceil(x - 1e-9);
  return c <= 0.0 ? 0 : static_cast<std::size_t>(c);
}

double kth_smallest(std::vector<double> values, std::size_t k) {
  // k is 1-based
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

// k-th smallest (0-based) of a sorted array with one extra value inserted.
double kth_with_insert(const std::vector<double>& sorted, double extra, std::size_t k) {
  std::size_t pos = static_cast<std::size_t>(
      std::upper_bound(sorted.begin(), sorted.end(), extra) - sorted.begin());
  if (k < pos) return sorted[k];
  if (k == pos) return extra;
  return sorted[k - 1];
}

// Median of (sorted calibration values + one test value), midpoint rule.
double merged_median(const std::vector<double>& sorted, double extra) {
  std::size_t total = sorted.size() + 1;
  if (total % 2 == 1) return kth_with_insert(sorted, extra, total / 2);
  double lo = kth_with_insert(sorted, extra, total / 2 - 1);
  double hi = kth_with_insert(sorted, extra, total / 2);
  return 0.5 * (lo + hi);
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    raise(ErrorCode::InvalidSpec, "alpha must lie strictly between 0 and 1");
  }
}

// Division guard from calibration responses: 1e-12 * (1 + mean |y|).
// Per-series sums are combined in ascending order so the result is
// invariant to the ordering of the calibration series, bit for bit.
double eps_floor_from_sums(std::vector<double> per_series_sums, std::size_t steps) {
  std::sort(per_series_sums.begin(), per_series_sums.end());
  double total = 0.0;
  for (double s : per_series_sums) total += s;
  double mean = total / (static_cast<double>(per_series_sums.size()) * static_cast<double>(steps));
  return 1e-12 * (1.0 + mean);
}

}  // namespace

const char* method_name(Method method) {
  switch (method) {
    case Method::split: return "split";
    case Method::cptd_mad: return "cptd_mad";
    case Method::cptd_rat: return "cptd_rat";
    case Method::lasplit: return "lasplit";
  }
  return "split";
}

Method method_from_name(const std::string& name) {
  if (name == "split") return Method::split;
  if (name == "cptd_mad") return Method::cptd_mad;
  if (name == "cptd_rat") return Method::cptd_rat;
  if (name == "lasplit") return Method::lasplit;
  raise(ErrorCode::ConfigError, "unknown method '" + name + "'");
}

std::size_t conformal_rank(std::size_t n, double alpha) {
  check_alpha(alpha);
  // ceil((1-alpha)(n+1)) == (n+1) - floor(alpha*(n+1)) for real arguments.
  double miss = alpha * static_cast<double>(n + 1);
  std::size_t dropped = static_cast<std::size_t>(std::floor(miss + 1e-9));
  if (dropped > n) dropped = n;
  return n + 1 - dropped;
}

double conformal_quantile(std::span<const double> scores, double alpha) {
  check_alpha(alpha);
  if (scores.empty()) raise(ErrorCode::EmptyScores, "conformal quantile of an empty score set");
  std::size_t n = scores.size();
  std::size_t k = conformal_rank(n, alpha);
  if (k > n) return kInf;  // the +inf slot appended for the unseen test score
  return kth_smallest(std::vector<double>(scores.begin(), scores.end()), k);
}

NormalizerState split_normalizer(const CalibrationContext& ctx) {
  NormalizerState state;
  state.method = Method::split;
  state.m_hat.assign(ctx.n_cal() + 1, 1.0);
  return state;
}

NormalizerState mad_normalizer(const CalibrationContext& ctx) {
  std::size_t target = ctx.target_step();
  if (target == 0) {
    raise(ErrorCode::NoHistory, "mad normalizer needs at least one past step");
  }
  NormalizerState state;
  state.method = Method::cptd_mad;
  std::size_t rows = ctx.n_cal() + 1;
  state.m_hat.resize(rows);
  double keep = 1.0 - ctx.mad_decay;
  for (std::size_t i = 0; i < rows; ++i) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t s = 0; s < target; ++s) {
      num = num * keep + ctx.abs_residual(i, s);
      den = den * keep + 1.0;
    }
    state.m_hat[i] = std::max(ctx.eps_floor, num / den);
  }
  return state;
}

std::vector<double> median_residuals(const CalibrationContext& ctx) {
  std::size_t target = ctx.target_step();
  if (target == 0) {
    raise(ErrorCode::NoHistory, "median residuals need at least one past step");
  }
  std::size_t rows = ctx.n_cal() + 1;
  std::vector<double> medians(target);
  std::vector<double> column(rows);
  for (std::size_t s = 0; s < target; ++s) {
    for (std::size_t i = 0; i < rows; ++i) column[i] = ctx.abs_residual(i, s);
    std::sort(column.begin(), column.end());
    double med = (rows % 2 == 1) ? column[rows / 2]
                                 : 0.5 * (column[rows / 2 - 1] + column[rows / 2]);
    medians[s] = std::max(ctx.eps_floor, med);
  }
  return medians;
}

std::vector<double> normalized_residual_mean(const CalibrationContext& ctx,
                                             std::span<const double> median_abs) {
  std::size_t target = ctx.target_step();
  if (target == 0) {
    raise(ErrorCode::NoHistory, "normalized residual mean needs at least one past step");
  }
  if (median_abs.size() != target) {
    raise(ErrorCode::ShapeMismatch, "need one median per past step");
  }
  std::size_t rows = ctx.n_cal() + 1;
  std::vector<double> nr(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (std::size_t s = 0; s < target; ++s) sum += ctx.abs_residual(i, s) / median_abs[s];
    nr[i] = sum / static_cast<double>(target);
  }
  return nr;
}

std::vector<double> estimate_rank(const CalibrationContext& ctx) {
  std::size_t target = ctx.target_step();
  std::size_t rows = ctx.n_cal() + 1;
  std::vector<double> cdf_sum(rows, 0.0);
  std::vector<double> column(rows);
  for (std::size_t s = 0; s < target; ++s) {
    for (std::size_t i = 0; i < rows; ++i) column[i] = ctx.abs_residual(i, s);
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < rows; ++i) {
      auto leq = static_cast<double>(
          std::upper_bound(sorted.begin(), sorted.end(), column[i]) - sorted.begin());
      cdf_sum[i] += leq / static_cast<double>(rows);
    }
  }
  std::vector<double> q_hat(rows);
  double prior = ctx.prior_weight;
  for (std::size_t i = 0; i < rows; ++i) {
    q_hat[i] = (0.5 * prior + cdf_sum[i]) / (static_cast<double>(target) + prior);
  }
  return q_hat;
}

std::vector<double> lookup_normalizer(std::span<const double> q_hat, std::span<const double> nr,
                                      double eps_floor) {
  if (q_hat.size() != nr.size()) {
    raise(ErrorCode::ShapeMismatch, "rank and pooled-value vectors must have equal length");
  }
  std::vector<double> sorted(nr.begin(), nr.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t rows = sorted.size();
  std::vector<double> m_hat(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t k = ceil_index(q_hat[i] * static_cast<double>(rows));
    k = std::clamp<std::size_t>(k, 1, rows);
    m_hat[i] = std::max(eps_floor, sorted[k - 1]);
  }
  return m_hat;
}

NormalizerState rat_normalizer(const CalibrationContext& ctx) {
  std::size_t target = ctx.target_step();
  if (target == 0) {
    raise(ErrorCode::NoHistory, "ratio-to-median normalizer needs at least one past step");
  }
  NormalizerState state;
  state.method = Method::cptd_rat;
  state.median_abs = median_residuals(ctx);
  state.q_hat = estimate_rank(ctx);
  state.nr = normalized_residual_mean(ctx, state.median_abs);
  state.m_hat = lookup_normalizer(state.q_hat, state.nr, ctx.eps_floor);
  return state;
}

NormalizerState lasplit_normalizer(const CalibrationContext& ctx,
                                   std::span<const double> predicted_errors, double floor_value) {
  if (predicted_errors.size() != ctx.n_cal() + 1) {
    raise(ErrorCode::ShapeMismatch, "need one predicted error per series (calibration + test)");
  }
  if (floor_value <= 0.0) raise(ErrorCode::InvalidSpec, "error-predictor floor must be positive");
  NormalizerState state;
  state.method = Method::lasplit;
  state.m_hat.resize(predicted_errors.size());
  for (std::size_t i = 0; i < predicted_errors.size(); ++i) {
    state.m_hat[i] = std::max(ctx.eps_floor, std::max(floor_value, predicted_errors[i]));
  }
  return state;
}

PredictionInterval build_pi(const CalibrationContext& ctx, const NormalizerState& norm) {
  std::size_t n = ctx.n_cal();
  if (norm.m_hat.size() != n + 1) {
    raise(ErrorCode::ShapeMismatch, "normalizer does not match the context");
  }
  std::size_t target = ctx.target_step();
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = ctx.abs_residual(i, target) / norm.m_hat[i];
  double threshold = conformal_quantile(scores, ctx.alpha);

  PredictionInterval pi;
  pi.step = target;
  pi.alpha = ctx.alpha;
  pi.center = ctx.y_hat(n, target);
  pi.half_width = std::isinf(threshold) ? kInf : threshold * norm.m_hat[n];
  return pi;
}

CalibrationContext make_calibration_context(const PanelData& cal, const Grid& cal_pred,
                                            const PanelData& test, const Grid& test_pred,
                                            std::size_t test_index, std::size_t target_step,
                                            const CalibrateOptions& opts) {
  std::size_t n = cal.n_series();
  CalibrationContext ctx;
  ctx.alpha = opts.alpha;
  ctx.prior_weight = opts.prior_weight;
  ctx.mad_decay = opts.mad_decay;
  ctx.y = Grid(n + 1, target_step + 1, std::numeric_limits<double>::quiet_NaN());
  ctx.y_hat = Grid(n + 1, target_step + 1);

  std::vector<double> abs_sums(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s <= target_step; ++s) {
      ctx.y(i, s) = cal.y(i, s);
      ctx.y_hat(i, s) = cal_pred(i, s);
      abs_sums[i] += std::abs(cal.y(i, s));
    }
  }
  for (std::size_t s = 0; s < target_step; ++s) ctx.y(n, s) = test.y(test_index, s);
  for (std::size_t s = 0; s <= target_step; ++s) ctx.y_hat(n, s) = test_pred(test_index, s);
  ctx.eps_floor = eps_floor_from_sums(std::move(abs_sums), target_step + 1);
  return ctx;
}

namespace {

struct CalPrecompute {
  Grid abs_r;                                   // N x T calibration |residual|
  std::vector<std::vector<double>> sorted_r;    // per step, ascending
  std::vector<std::vector<std::size_t>> n_leq;  // per step, per series: #cal <= own residual
  std::vector<double> eps_floor;                // per target step
};

CalPrecompute precompute_cal(const PanelData& cal, const Grid& cal_pred) {
  std::size_t n = cal.n_series();
  std::size_t horizon = cal.horizon();
  CalPrecompute pre;
  pre.abs_r = Grid(n, horizon);
  pre.sorted_r.resize(horizon);
  pre.n_leq.resize(horizon);
  pre.eps_floor.resize(horizon);

  std::vector<double> abs_sums(n, 0.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    std::vector<double>& sorted = pre.sorted_r[t];
    sorted.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      pre.abs_r(i, t) = std::abs(cal.y(i, t) - cal_pred(i, t));
      sorted[i] = pre.abs_r(i, t);
      abs_sums[i] += std::abs(cal.y(i, t));
    }
    std::sort(sorted.begin(), sorted.end());
    pre.n_leq[t].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      pre.n_leq[t][i] = static_cast<std::size_t>(
          std::upper_bound(sorted.begin(), sorted.end(), pre.abs_r(i, t)) - sorted.begin());
    }
    pre.eps_floor[t] = eps_floor_from_sums(abs_sums, t + 1);
  }
  return pre;
}

}  // namespace

IntervalGrid calibrate_path(const PanelData& cal, const Grid& cal_pred, const PanelData& test,
                            const Grid& test_pred, Method method, const CalibrateOptions& opts,
                            const ErrorPredictorModel* error_model) {
  check_alpha(opts.alpha);
  if (cal.horizon() != test.horizon()) {
    raise(ErrorCode::ShapeMismatch, "calibration and test panels disagree on the horizon");
  }
  if (cal_pred.rows != cal.n_series() || cal_pred.cols != cal.horizon()) {
    raise(ErrorCode::ShapeMismatch, "calibration prediction grid does not match the panel");
  }
  if (test_pred.rows != test.n_series() || test_pred.cols != test.horizon()) {
    raise(ErrorCode::ShapeMismatch, "test prediction grid does not match the panel");
  }
  if (method == Method::lasplit && error_model == nullptr) {
    raise(ErrorCode::ConfigError, "lasplit needs a fitted error predictor");
  }

  const std::size_t n = cal.n_series();
  const std::size_t m = test.n_series();
  const std::size_t horizon = cal.horizon();
  const double keep = 1.0 - opts.mad_decay;

  CalPrecompute pre = precompute_cal(cal, cal_pred);

  Grid err_cal, err_test;
  double err_floor = 0.0;
  if (method == Method::lasplit) {
    err_cal = error_model->predict(cal);
    err_test = error_model->predict(test);
    err_floor = error_model->floor_value();
  }

  // Per-step thresholds that do not depend on the test series. For cptd_mad
  // and lasplit both the calibration scores and their quantile are shared;
  // only the test series' own factor varies.
  std::vector<double> v_split(horizon), v_mad, v_las;
  std::vector<double> scores(n);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < n; ++i) scores[i] = pre.abs_r(i, t);
    v_split[t] = conformal_quantile(scores, opts.alpha);
  }
  if (method == Method::cptd_mad) {
    v_mad.resize(horizon);
    v_mad[0] = v_split[0];
    std::vector<double> num(n, 0.0), den(n, 0.0);
    for (std::size_t t = 1; t < horizon; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        num[i] = num[i] * keep + pre.abs_r(i, t - 1);
        den[i] = den[i] * keep + 1.0;
        double m_hat = std::max(pre.eps_floor[t], num[i] / den[i]);
        scores[i] = pre.abs_r(i, t) / m_hat;
      }
      v_mad[t] = conformal_quantile(scores, opts.alpha);
    }
  }
  if (method == Method::lasplit) {
    v_las.resize(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        double m_hat = std::max(pre.eps_floor[t], std::max(err_floor, err_cal(i, t)));
        scores[i] = pre.abs_r(i, t) / m_hat;
      }
      v_las[t] = conformal_quantile(scores, opts.alpha);
    }
  }

  IntervalGrid out(method, opts.alpha, m, horizon);

  auto half_from = [](double threshold, double factor) {
    return std::isinf(threshold) ? kInf : threshold * factor;
  };

  switch (method) {
    case Method::split: {
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t t = 0; t < horizon; ++t) {
          out.set(j, t, test_pred(j, t), half_from(v_split[t], 1.0));
        }
      }
      break;
    }
    case Method::cptd_mad: {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(m); ++jj) {
        std::size_t j = static_cast<std::size_t>(jj);
        out.set(j, 0, test_pred(j, 0), half_from(v_mad[0], 1.0));
        double num = 0.0, den = 0.0;
        for (std::size_t t = 1; t < horizon; ++t) {
          num = num * keep + std::abs(test.y(j, t - 1) - test_pred(j, t - 1));
          den = den * keep + 1.0;
          double m_hat = std::max(pre.eps_floor[t], num / den);
          out.set(j, t, test_pred(j, t), half_from(v_mad[t], m_hat));
        }
      }
      break;
    }
    case Method::lasplit: {
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t t = 0; t < horizon; ++t) {
          double m_hat = std::max(pre.eps_floor[t], std::max(err_floor, err_test(j, t)));
          out.set(j, t, test_pred(j, t), half_from(v_las[t], m_hat));
        }
      }
      break;
    }
    case Method::cptd_rat: {
      const std::size_t rows = n + 1;
      std::exception_ptr failure;
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(m); ++jj) {
        try {
        std::size_t j = static_cast<std::size_t>(jj);
        out.set(j, 0, test_pred(j, 0), half_from(v_split[0], 1.0));

        // Expanding per-series state over this test series' history.
        std::vector<double> cdf_sum(rows, 0.0);
        std::vector<double> nr_sum(rows, 0.0);
        std::vector<double> nr(rows), q_hat(rows), sorted_nr(rows), m_hat(rows), cell_scores(n);

        for (std::size_t t = 1; t < horizon; ++t) {
          std::size_t s = t - 1;
          double r_test = std::abs(test.y(j, s) - test_pred(j, s));
          const std::vector<double>& sorted = pre.sorted_r[s];

          double med = std::max(pre.eps_floor[t], merged_median(sorted, r_test));
          std::size_t test_leq = static_cast<std::size_t>(
              std::upper_bound(sorted.begin(), sorted.end(), r_test) - sorted.begin());

          for (std::size_t i = 0; i < n; ++i) {
            double r = pre.abs_r(i, s);
            std::size_t leq = pre.n_leq[s][i] + (r_test <= r ? 1 : 0);
            cdf_sum[i] += static_cast<double>(leq) / static_cast<double>(rows);
            nr_sum[i] += r / med;
          }
          cdf_sum[n] += static_cast<double>(test_leq + 1) / static_cast<double>(rows);
          nr_sum[n] += r_test / med;

          for (std::size_t i = 0; i < rows; ++i) {
            q_hat[i] = (0.5 * opts.prior_weight + cdf_sum[i]) /
                       (static_cast<double>(t) + opts.prior_weight);
            nr[i] = nr_sum[i] / static_cast<double>(t);
          }
          sorted_nr = nr;
          std::sort(sorted_nr.begin(), sorted_nr.end());
          for (std::size_t i = 0; i < rows; ++i) {
            std::size_t k = ceil_index(q_hat[i] * static_cast<double>(rows));
            k = std::clamp<std::size_t>(k, 1, rows);
            m_hat[i] = std::max(pre.eps_floor[t], sorted_nr[k - 1]);
          }
          for (std::size_t i = 0; i < n; ++i) cell_scores[i] = pre.abs_r(i, t) / m_hat[i];
          double threshold = conformal_quantile(cell_scores, opts.alpha);
          out.set(j, t, test_pred(j, t), half_from(threshold, m_hat[n]));
        }
        } catch (...) {
#pragma omp critical
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);
      break;
    }
  }
  return out;
}

std::string intervals_to_csv(const IntervalGrid& grid, const PanelData& test) {
  if (grid.n_series != test.n_series() || grid.horizon != test.horizon()) {
    raise(ErrorCode::ShapeMismatch, "interval grid does not match the test panel");
  }
  std::ostringstream out;
  out << "series_id,t,method,alpha,y_hat,lower,upper\n";
  for (std::size_t i = 0; i < grid.n_series; ++i) {
    for (std::size_t t = 0; t < grid.horizon; ++t) {
      PredictionInterval pi = grid.at(i, t);
      out << test.series(i).id << ',' << t << ',' << method_name(grid.method) << ','
          << text::fmt_g6(grid.alpha) << ',' << text::fmt_g6(pi.center) << ','
          << text::fmt_g6(pi.lower()) << ',' << text::fmt_g6(pi.upper()) << "\n";
    }
  }
  return out.str();
}

void write_intervals_csv(const IntervalGrid& grid, const PanelData& test,
                         const std::filesystem::path& path) {
  text::write_file(path, intervals_to_csv(grid, test));
}

NamedIntervals read_intervals_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
  std::string origin = path.string();

  struct Row {
    std::string id;
    std::size_t step;
    double center, lower, upper;
  };
  std::vector<Row> rows;
  std::string method_token;
  double alpha = 0.0;

  std::string line;
  std::size_t lineno = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = text::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto fields = text::split_csv_line(stripped);
    if (!header_done) {
      if (fields != std::vector<std::string>{"series_id", "t", "method", "alpha", "y_hat", "lower", "upper"}) {
        raise(ErrorCode::MissingColumn, origin + ": unexpected interval header");
      }
      header_done = true;
      continue;
    }
    if (fields.size() != 7) {
      raise(ErrorCode::MissingColumn, origin + ":" + std::to_string(lineno) + ": expected 7 fields");
    }
    Row row;
    row.id = fields[0];
    std::uint64_t step = 0;
    double a = 0.0;
    if (!text::try_parse_u64(fields[1], step) || !text::try_parse_double(fields[3], a) ||
        !text::try_parse_double(fields[4], row.center) || !text::try_parse_double(fields[5], row.lower) ||
        !text::try_parse_double(fields[6], row.upper)) {
      raise(ErrorCode::BadHeader, origin + ":" + std::to_string(lineno) + ": malformed row");
    }
    row.step = static_cast<std::size_t>(step);
    if (method_token.empty()) {
      method_token = fields[2];
      alpha = a;
    } else if (method_token != fields[2]) {
      raise(ErrorCode::BadHeader, origin + ": mixed methods in one interval file");
    }
    rows.push_back(std::move(row));
  }
  if (!header_done || rows.empty()) raise(ErrorCode::MissingColumn, origin + ": no interval rows");

  std::vector<std::string> ids;
  std::size_t horizon = 0;
  for (const Row& row : rows) {
    if (ids.empty() || ids.back() != row.id) {
      if (std::find(ids.begin(), ids.end(), row.id) != ids.end()) {
        raise(ErrorCode::BadHeader, origin + ": series rows are not contiguous");
      }
      ids.push_back(row.id);
    }
    horizon = std::max(horizon, row.step + 1);
  }

  NamedIntervals out;
  out.ids = ids;
  out.grid = IntervalGrid(method_from_name(method_token), alpha, ids.size(), horizon);
  std::vector<char> seen(ids.size() * horizon, 0);
  std::size_t series_idx = 0;
  for (const Row& row : rows) {
    while (ids[series_idx] != row.id) ++series_idx;  // contiguity checked above
    std::size_t slot = series_idx * horizon + row.step;
    if (seen[slot]) raise(ErrorCode::DuplicateCell, origin + ": duplicate interval cell");
    seen[slot] = 1;
    double half = std::isinf(row.upper) ? kInf : 0.5 * (row.upper - row.lower);
    out.grid.set(series_idx, row.step, row.center, half);
  }
  for (char s : seen) {
    if (!s) raise(ErrorCode::MissingPrediction, origin + ": interval grid has holes");
  }
  return out;
}

}  // namespace cptd
