#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cptd/conformal.hpp"
#include "cptd/panel.hpp"

namespace cptd {

/// Inclusive step range used for evaluation.
struct EvalWindow {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first + 1; }

  static EvalWindow full(std::size_t horizon);
  /// The final k steps of the horizon.
  static EvalWindow last_k(std::size_t k, std::size_t horizon);
};

/// Fraction of window steps whose interval covers the truth, one value per
/// test series. Unbounded intervals always cover.
std::vector<double> coverage_per_series(const IntervalGrid& intervals, const PanelData& truth,
                                        const EvalWindow& window);

double mean_coverage(std::span<const double> per_series);

/// Mean coverage of the least-covered decile: sort ascending and average the
/// first ceil(M/10) entries. Needs at least 10 series.
double tail_coverage(std::span<const double> per_series);

/// Mean interval width over the window; +inf if any interval is unbounded.
double mean_width(const IntervalGrid& intervals, const EvalWindow& window);

/// Scales every half-width by one global factor so the method's mean width
/// over the window equals the reference's. Centers are unchanged.
IntervalGrid rescale_to_reference(const IntervalGrid& method, const IntervalGrid& reference,
                                  const EvalWindow& window);

/// Per-method evaluation summary. tail_coverage is NaN when the test
/// cross-section is too small for a decile (fewer than 10 series).
struct ExperimentReport {
  Method method = Method::split;
  double alpha = 0.1;
  EvalWindow window;
  double mean_coverage = 0.0;
  double tail_coverage = 0.0;
  double mean_width = 0.0;
  std::vector<double> per_series_coverage;
  // replicate metadata
  std::uint64_t seed = 0;
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
  std::size_t horizon = 0;
};

ExperimentReport make_report(const IntervalGrid& intervals, const PanelData& truth,
                             const EvalWindow& window, std::uint64_t seed, std::size_t n_cal);

}  // namespace cptd
