#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cptd {

/// One unit of the cross-section: a response path and optional covariates.
struct SeriesRecord {
  std::string id;
  std::vector<double> y;  ///< length T
  std::vector<double> x;  ///< row-major T x d; empty when d == 0
};

/// Immutable panel of N series sharing a horizon T and feature dimension d.
/// Construction validates the shape invariants (equal lengths, unique ids,
/// finite values); instances are safe to share read-only across threads.
class PanelData {
 public:
  static PanelData from_series(std::vector<SeriesRecord> series, std::size_t feature_dim);

  std::size_t n_series() const { return series_.size(); }
  std::size_t horizon() const { return horizon_; }
  std::size_t feature_dim() const { return feature_dim_; }

  const SeriesRecord& series(std::size_t i) const { return series_[i]; }
  const std::vector<SeriesRecord>& all() const { return series_; }

  double y(std::size_t i, std::size_t t) const { return series_[i].y[t]; }
  double x(std::size_t i, std::size_t t, std::size_t j) const {
    return series_[i].x[t * feature_dim_ + j];
  }

  /// New panel holding copies of the given series, in the given order.
  PanelData take(const std::vector<std::size_t>& indices) const;

 private:
  PanelData() = default;
  std::vector<SeriesRecord> series_;
  std::size_t horizon_ = 0;
  std::size_t feature_dim_ = 0;
};

enum class SplitMode { random, temporal };

const char* to_string(SplitMode mode);
SplitMode split_mode_from_name(const std::string& name);

struct SplitSpec {
  std::size_t n_train = 0;
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
  SplitMode mode = SplitMode::random;
  std::uint64_t seed = 0;
};

struct PanelSplit {
  PanelData train;
  PanelData cal;
  PanelData test;
};

/// Reads the long CSV layout: header `series_id,t,y[,x0..x{d-1}]`, one row
/// per (series, step), '#' comments allowed, steps 0..T-1 exactly once per
/// series. Series keep their order of first appearance.
PanelData load_panel(const std::filesystem::path& path);
PanelData parse_panel_csv(std::istream& in, const std::string& origin);

void write_panel(const PanelData& panel, const std::filesystem::path& path);
std::string panel_to_csv(const PanelData& panel);

/// Assigns series to train/cal/test blocks. Random mode permutes the series
/// with a seeded generator before slicing; temporal mode slices in the given
/// order so every test series is preceded by calibration series.
PanelSplit split_panel(const PanelData& panel, const SplitSpec& spec);

/// Heuristic diagnostics for the exchangeable-panel assumption. Never errors;
/// returns human-readable warnings (empty list = nothing suspicious found).
/// Exchangeability itself is an assumption and cannot be verified.
std::vector<std::string> validate_exchangeability_contract(const PanelData& panel);

}  // namespace cptd
