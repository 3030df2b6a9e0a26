#include "cptd/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cptd/error.hpp"
#include "cptd/rng.hpp"
#include "cptd/text.hpp"

namespace cptd {

namespace {

void check_finite(double value, const std::string& where) {
  if (!std::isfinite(value)) raise(ErrorCode::NonFiniteValue, where);
}

}  // namespace

PanelData PanelData::from_series(std::vector<SeriesRecord> series, std::size_t feature_dim) {
  if (series.empty()) raise(ErrorCode::InvalidSpec, "panel needs at least one series");
  std::size_t horizon = series.front().y.size();
  if (horizon == 0) raise(ErrorCode::InvalidSpec, "panel horizon must be positive");

  std::set<std::string> ids;
  for (const SeriesRecord& record : series) {
    if (!ids.insert(record.id).second) {
      raise(ErrorCode::DuplicateCell, "duplicate series id '" + record.id + "'");
    }
    if (record.y.size() != horizon) {
      raise(ErrorCode::RaggedSeries,
            "series '" + record.id + "' has " + std::to_string(record.y.size()) +
                " steps, expected " + std::to_string(horizon));
    }
    if (record.x.size() != horizon * feature_dim) {
      raise(ErrorCode::RaggedSeries,
            "series '" + record.id + "' has a covariate block of size " +
                std::to_string(record.x.size()) + ", expected " +
                std::to_string(horizon * feature_dim));
    }
    for (double value : record.y) check_finite(value, "response in series '" + record.id + "'");
    for (double value : record.x) check_finite(value, "covariate in series '" + record.id + "'");
  }

  PanelData panel;
  panel.series_ = std::move(series);
  panel.horizon_ = horizon;
  panel.feature_dim_ = feature_dim;
  return panel;
}

PanelData PanelData::take(const std::vector<std::size_t>& indices) const {
  std::vector<SeriesRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(series_[i]);
  return from_series(std::move(out), feature_dim_);
}

const char* to_string(SplitMode mode) {
  return mode == SplitMode::random ? "random" : "temporal";
}

SplitMode split_mode_from_name(const std::string& name) {
  if (name == "random") return SplitMode::random;
  if (name == "temporal") return SplitMode::temporal;
  raise(ErrorCode::ConfigError, "unknown split mode '" + name + "'");
}

PanelData load_panel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
  return parse_panel_csv(in, path.string());
}

PanelData parse_panel_csv(std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t lineno = 0;

  // Header: series_id, t, y, then exactly x0..x{d-1}.
  std::size_t feature_dim = 0;
  {
    bool got_header = false;
    while (std::getline(in, line)) {
      ++lineno;
      std::string stripped = text::trim(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      std::vector<std::string> header = text::split_csv_line(stripped);
      if (header.size() < 3 || header[0] != "series_id" || header[1] != "t" || header[2] != "y") {
        raise(ErrorCode::MissingColumn,
              origin + ": header must start with series_id,t,y");
      }
      for (std::size_t j = 3; j < header.size(); ++j) {
        std::string expected = "x" + std::to_string(j - 3);
        if (header[j] != expected) {
          raise(ErrorCode::BadHeader,
                origin + ": expected column '" + expected + "', found '" + header[j] + "'");
        }
      }
      feature_dim = header.size() - 3;
      got_header = true;
      break;
    }
    if (!got_header) raise(ErrorCode::MissingColumn, origin + ": empty file, no header");
  }

  struct RawSeries {
    // step -> (y, x row); steps may arrive in any order
    std::unordered_map<std::size_t, std::pair<double, std::vector<double>>> cells;
    std::size_t max_step = 0;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, RawSeries> by_id;

  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = text::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::vector<std::string> fields = text::split_csv_line(stripped);
    if (fields.size() != 3 + feature_dim) {
      raise(ErrorCode::MissingColumn,
            origin + ":" + std::to_string(lineno) + ": expected " +
                std::to_string(3 + feature_dim) + " fields, found " + std::to_string(fields.size()));
    }
    const std::string& id = fields[0];
    if (id.empty()) raise(ErrorCode::BadHeader, origin + ":" + std::to_string(lineno) + ": empty series_id");

    std::uint64_t step = 0;
    if (!text::try_parse_u64(fields[1], step)) {
      raise(ErrorCode::BadHeader,
            origin + ":" + std::to_string(lineno) + ": step must be a non-negative integer");
    }
    double response = 0.0;
    if (!text::try_parse_double(fields[2], response) || !std::isfinite(response)) {
      raise(ErrorCode::NonFiniteValue,
            origin + ":" + std::to_string(lineno) + ": response for (" + id + ", " +
                std::to_string(step) + ")");
    }
    std::vector<double> covariates(feature_dim);
    for (std::size_t j = 0; j < feature_dim; ++j) {
      if (!text::try_parse_double(fields[3 + j], covariates[j]) || !std::isfinite(covariates[j])) {
        raise(ErrorCode::NonFiniteValue,
              origin + ":" + std::to_string(lineno) + ": covariate x" + std::to_string(j) +
                  " for (" + id + ", " + std::to_string(step) + ")");
      }
    }

    auto it = by_id.find(id);
    if (it == by_id.end()) {
      order.push_back(id);
      it = by_id.emplace(id, RawSeries{}).first;
    }
    RawSeries& raw = it->second;
    if (!raw.cells.emplace(step, std::make_pair(response, std::move(covariates))).second) {
      raise(ErrorCode::DuplicateCell,
            origin + ":" + std::to_string(lineno) + ": duplicate cell (" + id + ", " +
                std::to_string(step) + ")");
    }
    raw.max_step = std::max(raw.max_step, static_cast<std::size_t>(step));
  }

  if (order.empty()) raise(ErrorCode::MissingColumn, origin + ": no data rows");

  // Every series must cover 0..T-1 exactly once, for a common T.
  std::size_t horizon = by_id[order.front()].max_step + 1;
  for (const std::string& id : order) {
    const RawSeries& raw = by_id[id];
    if (raw.max_step + 1 != horizon || raw.cells.size() != horizon) {
      raise(ErrorCode::RaggedSeries,
            origin + ": series '" + id + "' does not cover steps 0.." + std::to_string(horizon - 1));
    }
  }

  std::vector<SeriesRecord> series;
  series.reserve(order.size());
  for (const std::string& id : order) {
    RawSeries& raw = by_id[id];
    SeriesRecord record;
    record.id = id;
    record.y.resize(horizon);
    record.x.resize(horizon * feature_dim);
    for (std::size_t t = 0; t < horizon; ++t) {
      auto cell = raw.cells.find(t);
      if (cell == raw.cells.end()) {
        raise(ErrorCode::RaggedSeries,
              origin + ": series '" + id + "' is missing step " + std::to_string(t));
      }
      record.y[t] = cell->second.first;
      std::copy(cell->second.second.begin(), cell->second.second.end(),
                record.x.begin() + static_cast<std::ptrdiff_t>(t * feature_dim));
    }
    series.push_back(std::move(record));
  }
  return PanelData::from_series(std::move(series), feature_dim);
}

std::string panel_to_csv(const PanelData& panel) {
  std::ostringstream out;
  out << "series_id,t,y";
  for (std::size_t j = 0; j < panel.feature_dim(); ++j) out << ",x" << j;
  out << "\n";
  for (std::size_t i = 0; i < panel.n_series(); ++i) {
    const SeriesRecord& record = panel.series(i);
    for (std::size_t t = 0; t < panel.horizon(); ++t) {
      out << record.id << ',' << t << ',' << text::fmt_shortest(record.y[t]);
      for (std::size_t j = 0; j < panel.feature_dim(); ++j) {
        out << ',' << text::fmt_shortest(panel.x(i, t, j));
      }
      out << "\n";
    }
  }
  return out.str();
}

void write_panel(const PanelData& panel, const std::filesystem::path& path) {
  text::write_file(path, panel_to_csv(panel));
}

PanelSplit split_panel(const PanelData& panel, const SplitSpec& spec) {
  if (spec.n_train == 0 || spec.n_cal == 0 || spec.n_test == 0) {
    raise(ErrorCode::InvalidSpec, "split block sizes must be positive");
  }
  std::size_t needed = spec.n_train + spec.n_cal + spec.n_test;
  if (needed > panel.n_series()) {
    raise(ErrorCode::SizesExceedPanel,
          "split needs " + std::to_string(needed) + " series, panel has " +
              std::to_string(panel.n_series()));
  }

  std::vector<std::size_t> indices(panel.n_series());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (spec.mode == SplitMode::random) {
    rng::Rng gen(spec.seed);
    gen.shuffle(indices);
  }

  auto block = [&](std::size_t offset, std::size_t count) {
    return std::vector<std::size_t>(indices.begin() + static_cast<std::ptrdiff_t>(offset),
                                    indices.begin() + static_cast<std::ptrdiff_t>(offset + count));
  };
  PanelSplit split{panel.take(block(0, spec.n_train)),
                   panel.take(block(spec.n_train, spec.n_cal)),
                   panel.take(block(spec.n_train + spec.n_cal, spec.n_test))};
  return split;
}

std::vector<std::string> validate_exchangeability_contract(const PanelData& panel) {
  std::vector<std::string> warnings;
  std::size_t n = panel.n_series();
  if (n < 3) {
    warnings.push_back("insufficient cross-section: only " + std::to_string(n) +
                       " series; exchangeability diagnostics need at least 3");
    return warnings;
  }

  // Correlation of a per-series statistic with the series position. Under
  // exchangeability the ordering carries no information, so a strong trend
  // in either the level or the spread is suspicious.
  auto trend_stat = [&](const std::vector<double>& stat) {
    double n_d = static_cast<double>(n);
    double mean_idx = (n_d - 1.0) / 2.0;
    double mean_stat = std::accumulate(stat.begin(), stat.end(), 0.0) / n_d;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dx = static_cast<double>(i) - mean_idx;
      double dy = stat[i] - mean_stat;
      sxy += dx * dy;
      sxx += dx * dx;
      syy += dy * dy;
    }
    if (syy <= 0.0 || sxx <= 0.0) return 0.0;
    double r = sxy / std::sqrt(sxx * syy);
    double denom = std::max(1.0 - r * r, 1e-12);
    return r * std::sqrt((n_d - 2.0) / denom);
  };

  std::vector<double> means(n), spreads(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double>& y = panel.series(i).y;
    double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    means[i] = mean;
    spreads[i] = std::sqrt(var / static_cast<double>(y.size()));
  }

  constexpr double kTrendThreshold = 4.0;  // conservative; iid panels stay quiet
  double t_mean = trend_stat(means);
  if (std::abs(t_mean) > kTrendThreshold) {
    warnings.push_back("per-series mean drifts with series order (t-statistic " +
                       text::fmt_g6(t_mean) + "); exchangeability across series is doubtful");
  }
  double t_spread = trend_stat(spreads);
  if (std::abs(t_spread) > kTrendThreshold) {
    warnings.push_back("per-series spread drifts with series order (t-statistic " +
                       text::fmt_g6(t_spread) + "); exchangeability across series is doubtful");
  }
  return warnings;
}

}  // namespace cptd
