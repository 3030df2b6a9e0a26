#include "cptd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cptd/error.hpp"

namespace cptd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_window(const EvalWindow& window, std::size_t horizon) {
  if (window.first > window.last || window.last >= horizon) {
    raise(ErrorCode::WindowOutOfRange,
          "window [" + std::to_string(window.first) + ", " + std::to_string(window.last) +
              "] does not fit horizon " + std::to_string(horizon));
  }
}

}  // namespace

EvalWindow EvalWindow::full(std::size_t horizon) {
  if (horizon == 0) raise(ErrorCode::WindowOutOfRange, "empty horizon");
  return EvalWindow{0, horizon - 1};
}

EvalWindow EvalWindow::last_k(std::size_t k, std::size_t horizon) {
  if (k == 0 || k > horizon) {
    raise(ErrorCode::WindowOutOfRange,
          "last_k window of " + std::to_string(k) + " steps does not fit horizon " +
              std::to_string(horizon));
  }
  return EvalWindow{horizon - k, horizon - 1};
}

std::vector<double> coverage_per_series(const IntervalGrid& intervals, const PanelData& truth,
                                        const EvalWindow& window) {
  if (intervals.n_series != truth.n_series() || intervals.horizon != truth.horizon()) {
    raise(ErrorCode::ShapeMismatch, "interval grid does not match the truth panel");
  }
  check_window(window, intervals.horizon);
  std::vector<double> coverage(intervals.n_series);
  for (std::size_t i = 0; i < intervals.n_series; ++i) {
    std::size_t hits = 0;
    for (std::size_t t = window.first; t <= window.last; ++t) {
      if (intervals.at(i, t).covers(truth.y(i, t))) ++hits;
    }
    coverage[i] = static_cast<double>(hits) / static_cast<double>(window.size());
  }
  return coverage;
}

double mean_coverage(std::span<const double> per_series) {
  if (per_series.empty()) raise(ErrorCode::EmptyTestSet, "no test series to average");
  double sum = std::accumulate(per_series.begin(), per_series.end(), 0.0);
  return sum / static_cast<double>(per_series.size());
}

double tail_coverage(std::span<const double> per_series) {
  std::size_t m = per_series.size();
  if (m < 10) {
    raise(ErrorCode::TooFewSeries,
          "tail coverage needs at least 10 series, got " + std::to_string(m));
  }
  std::vector<double> sorted(per_series.begin(), per_series.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t k = (m + 9) / 10;  // ceil(0.1 * M) without float rounding
  double sum = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  return sum / static_cast<double>(k);
}

double mean_width(const IntervalGrid& intervals, const EvalWindow& window) {
  check_window(window, intervals.horizon);
  double sum = 0.0;
  for (std::size_t i = 0; i < intervals.n_series; ++i) {
    for (std::size_t t = window.first; t <= window.last; ++t) {
      PredictionInterval pi = intervals.at(i, t);
      if (pi.unbounded()) return kInf;
      sum += pi.width();
    }
  }
  return sum / static_cast<double>(intervals.n_series * window.size());
}

IntervalGrid rescale_to_reference(const IntervalGrid& method, const IntervalGrid& reference,
                                  const EvalWindow& window) {
  double ref_width = mean_width(reference, window);
  double own_width = mean_width(method, window);
  if (std::isinf(ref_width) || std::isinf(own_width)) {
    raise(ErrorCode::UnboundedWidth, "cannot rescale with unbounded intervals in the window");
  }
  if (ref_width <= 0.0 || own_width <= 0.0) {
    raise(ErrorCode::ZeroWidth, "cannot rescale with zero mean width");
  }
  double rho = ref_width / own_width;
  IntervalGrid out = method;
  for (double& hw : out.half_width) hw *= rho;
  return out;
}

ExperimentReport make_report(const IntervalGrid& intervals, const PanelData& truth,
                             const EvalWindow& window, std::uint64_t seed, std::size_t n_cal) {
  ExperimentReport report;
  report.method = intervals.method;
  report.alpha = intervals.alpha;
  report.window = window;
  report.per_series_coverage = coverage_per_series(intervals, truth, window);
  report.mean_coverage = mean_coverage(report.per_series_coverage);
  report.tail_coverage = report.per_series_coverage.size() >= 10
                             ? tail_coverage(report.per_series_coverage)
                             : std::numeric_limits<double>::quiet_NaN();
  report.mean_width = mean_width(intervals, window);
  report.seed = seed;
  report.n_cal = n_cal;
  report.n_test = truth.n_series();
  report.horizon = truth.horizon();
  if (!std::isnan(report.tail_coverage) && report.tail_coverage > report.mean_coverage + 1e-12) {
    raise(ErrorCode::InvalidSpec, "tail coverage exceeded mean coverage; metric accounting is broken");
  }
  return report;
}

}  // namespace cptd
