#include "reference_conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace refimpl {

namespace {

const double kInf = std::numeric_limits<double>::infinity();

double abs_residual(const RefInputs& in, std::size_t i, std::size_t s) {
  std::size_t n = in.y_cal.size();
  if (i < n) return std::fabs(in.y_cal[i][s] - in.yhat_cal[i][s]);
  return std::fabs(in.y_test[s] - in.yhat_test[s]);
}

double division_floor(const RefInputs& in, std::size_t target_step) {
  // 1e-12 * (1 + mean |y|) over the calibration responses visible at this
  // step; per-series sums are added smallest-first.
  std::vector<double> sums;
  for (const std::vector<double>& row : in.y_cal) {
    double s = 0.0;
    for (std::size_t t = 0; t <= target_step; ++t) s += std::fabs(row[t]);
    sums.push_back(s);
  }
  std::sort(sums.begin(), sums.end());
  double total = 0.0;
  for (double s : sums) total += s;
  double count = static_cast<double>(in.y_cal.size()) * static_cast<double>(target_step + 1);
  return 1e-12 * (1.0 + total / count);
}

double sorted_kth(std::vector<double> values, std::size_t k_one_based) {
  std::sort(values.begin(), values.end());
  return values[k_one_based - 1];
}

std::vector<double> normalizers(const RefInputs& in, const std::string& method,
                                std::size_t target_step, double eps) {
  std::size_t n = in.y_cal.size();
  std::size_t rows = n + 1;
  std::vector<double> m_hat(rows, 1.0);

  if (method == "split") return m_hat;

  if (method == "lasplit") {
    for (std::size_t i = 0; i < rows; ++i) {
      double predicted = i < n ? in.err_cal[i][target_step] : in.err_test[target_step];
      m_hat[i] = std::max(eps, std::max(in.err_floor, predicted));
    }
    return m_hat;
  }

  if (target_step == 0) return m_hat;  // no history: identity fallback

  if (method == "cptd_mad") {
    for (std::size_t i = 0; i < rows; ++i) {
      double sum = 0.0;
      for (std::size_t s = 0; s < target_step; ++s) sum += abs_residual(in, i, s);
      m_hat[i] = std::max(eps, sum / static_cast<double>(target_step));
    }
    return m_hat;
  }

  if (method == "cptd_rat") {
    // Cross-sectional median of |residual| at each past step.
    std::vector<double> medians(target_step);
    for (std::size_t s = 0; s < target_step; ++s) {
      std::vector<double> column(rows);
      for (std::size_t i = 0; i < rows; ++i) column[i] = abs_residual(in, i, s);
      std::sort(column.begin(), column.end());
      double med = rows % 2 == 1 ? column[rows / 2]
                                 : 0.5 * (column[rows / 2 - 1] + column[rows / 2]);
      medians[s] = std::max(eps, med);
    }

    // Rank estimate: prior-weighted mean of empirical CDF positions.
    std::vector<double> q_hat(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      double cdf_sum = 0.0;
      for (std::size_t s = 0; s < target_step; ++s) {
        double own = abs_residual(in, i, s);
        std::size_t leq = 0;
        for (std::size_t j = 0; j < rows; ++j) {
          if (abs_residual(in, j, s) <= own) ++leq;
        }
        cdf_sum += static_cast<double>(leq) / static_cast<double>(rows);
      }
      q_hat[i] = (0.5 * in.prior_weight + cdf_sum) /
                 (static_cast<double>(target_step) + in.prior_weight);
    }

    // Expanding mean of the median-normalized residuals.
    std::vector<double> nr(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      double sum = 0.0;
      for (std::size_t s = 0; s < target_step; ++s) sum += abs_residual(in, i, s) / medians[s];
      nr[i] = sum / static_cast<double>(target_step);
    }

    // Quantile lookup into the pooled nr values.
    for (std::size_t i = 0; i < rows; ++i) {
      double pos = q_hat[i] * static_cast<double>(rows);
      double c = std::ceil(pos - 1e-9);
      std::size_t k = c <= 1.0 ? 1 : static_cast<std::size_t>(c);
      if (k > rows) k = rows;
      m_hat[i] = std::max(eps, sorted_kth(nr, k));
    }
    return m_hat;
  }

  throw std::invalid_argument("unknown reference method " + method);
}

}  // namespace

RefInterval interval_at(const RefInputs& in, const std::string& method, std::size_t target_step) {
  std::size_t n = in.y_cal.size();
  double eps = division_floor(in, target_step);
  std::vector<double> m_hat = normalizers(in, method, target_step, eps);

  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = abs_residual(in, i, target_step) / m_hat[i];

  double c = std::ceil((1.0 - in.alpha) * static_cast<double>(n + 1) - 1e-9);
  std::size_t k = c <= 1.0 ? 1 : static_cast<std::size_t>(c);

  RefInterval out;
  out.center = in.yhat_test[target_step];
  if (k > n) {
    out.half_width = kInf;
  } else {
    out.half_width = sorted_kth(scores, k) * m_hat[n];
  }
  return out;
}

std::vector<RefInterval> calibrate_series(const RefInputs& in, const std::string& method) {
  std::vector<RefInterval> out;
  for (std::size_t t = 0; t < in.y_test.size(); ++t) out.push_back(interval_at(in, method, t));
  return out;
}

}  // namespace refimpl
