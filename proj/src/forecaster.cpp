#include "cptd/forecaster.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "cptd/error.hpp"
#include "cptd/text.hpp"

namespace cptd {

namespace {

// Design row for the step-t head of a series: lagged responses then the
// covariate block up to and including t.
std::vector<double> features_for(const PanelData& panel, std::size_t i, std::size_t t,
                                 const FitOptions& opts) {
  std::vector<double> f;
  if (opts.use_lagged_responses) {
    for (std::size_t s = 0; s < t; ++s) f.push_back(panel.y(i, s));
  }
  if (opts.use_covariates && panel.feature_dim() > 0) {
    for (std::size_t s = 0; s <= t; ++s) {
      for (std::size_t j = 0; j < panel.feature_dim(); ++j) f.push_back(panel.x(i, s, j));
    }
  }
  return f;
}

std::size_t feature_count(std::size_t t, std::size_t d, const FitOptions& opts) {
  std::size_t n = 0;
  if (opts.use_lagged_responses) n += t;
  if (opts.use_covariates) n += (t + 1) * d;
  return n;
}

PerStepLinearModel::StepModel fit_one_step(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                           const FitOptions& opts, std::size_t step) {
  const auto n = X.rows();
  const auto p = X.cols();
  PerStepLinearModel::StepModel model;

  Eigen::MatrixXd Xw = X;
  if (opts.standardize && p > 0) {
    model.feat_mean.resize(static_cast<std::size_t>(p));
    model.feat_scale.resize(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
      double mean = Xw.col(j).mean();
      double sd = std::sqrt((Xw.col(j).array() - mean).square().sum() / static_cast<double>(n));
      if (sd <= 0.0) sd = 1.0;  // constant feature
      model.feat_mean[static_cast<std::size_t>(j)] = mean;
      model.feat_scale[static_cast<std::size_t>(j)] = sd;
      Xw.col(j) = (Xw.col(j).array() - mean) / sd;
    }
  }

  // Augment with the intercept column; ridge leaves the intercept unpenalized.
  Eigen::MatrixXd A(n, p + 1);
  if (p > 0) A.leftCols(p) = Xw;
  A.col(p).setOnes();

  Eigen::VectorXd beta;
  if (opts.lambda_ridge > 0.0) {
    Eigen::MatrixXd G = A.transpose() * A;
    for (Eigen::Index j = 0; j < p; ++j) G(j, j) += opts.lambda_ridge;
    beta = G.ldlt().solve(A.transpose() * y);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < p + 1) {
      raise(ErrorCode::SingularDesign,
            "step " + std::to_string(step) + ": design is rank-deficient and lambda_ridge is 0");
    }
    beta = qr.solve(y);
  }

  model.coef.assign(beta.data(), beta.data() + p);
  model.intercept = beta(p);
  for (double c : model.coef) {
    if (!std::isfinite(c)) raise(ErrorCode::SingularDesign, "non-finite coefficient at step " + std::to_string(step));
  }
  if (!std::isfinite(model.intercept)) {
    raise(ErrorCode::SingularDesign, "non-finite intercept at step " + std::to_string(step));
  }
  return model;
}

double apply_step(const PerStepLinearModel::StepModel& model, const std::vector<double>& features) {
  double value = model.intercept;
  if (model.feat_mean.empty()) {
    for (std::size_t j = 0; j < features.size(); ++j) value += model.coef[j] * features[j];
  } else {
    for (std::size_t j = 0; j < features.size(); ++j) {
      value += model.coef[j] * ((features[j] - model.feat_mean[j]) / model.feat_scale[j]);
    }
  }
  return value;
}

PerStepLinearModel fit_impl(const PanelData& train, const Grid& targets, const FitOptions& opts) {
  if (train.n_series() < 2) raise(ErrorCode::InvalidSpec, "need at least 2 training series");
  if (opts.lambda_ridge < 0.0) raise(ErrorCode::InvalidSpec, "lambda_ridge must be >= 0");
  if (targets.rows != train.n_series() || targets.cols != train.horizon()) {
    raise(ErrorCode::ShapeMismatch, "target grid does not match the training panel");
  }

  const std::size_t n = train.n_series();
  const std::size_t horizon = train.horizon();
  std::vector<PerStepLinearModel::StepModel> steps(horizon);

  for (std::size_t t = 0; t < horizon; ++t) {
    std::size_t p = feature_count(t, train.feature_dim(), opts);
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> f = features_for(train, i, t, opts);
      for (std::size_t j = 0; j < p; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
      y(static_cast<Eigen::Index>(i)) = targets(i, t);
    }
    steps[t] = fit_one_step(X, y, opts, t);
  }

  PerStepLinearModel model;
  model.steps_ = std::move(steps);
  model.feature_dim_ = train.feature_dim();
  model.opts_ = opts;
  return model;
}

}  // namespace

const char* to_string(ForecastSource source) {
  switch (source) {
    case ForecastSource::per_step_linear: return "per_step_linear";
    case ForecastSource::naive_last: return "naive_last";
    case ForecastSource::external: return "external";
  }
  return "external";
}

PerStepLinearModel PerStepLinearModel::fit(const PanelData& train, const FitOptions& opts) {
  Grid targets(train.n_series(), train.horizon());
  for (std::size_t i = 0; i < train.n_series(); ++i) {
    for (std::size_t t = 0; t < train.horizon(); ++t) targets(i, t) = train.y(i, t);
  }
  return fit_impl(train, targets, opts);
}

PerStepLinearModel PerStepLinearModel::fit_targets(const PanelData& train, const Grid& targets,
                                                   const FitOptions& opts) {
  return fit_impl(train, targets, opts);
}

PerStepLinearModel PerStepLinearModel::from_parts(std::vector<StepModel> steps,
                                                  std::size_t feature_dim, const FitOptions& opts) {
  PerStepLinearModel model;
  model.steps_ = std::move(steps);
  model.feature_dim_ = feature_dim;
  model.opts_ = opts;
  return model;
}

double PerStepLinearModel::predict_cell(const PanelData& panel, std::size_t i, std::size_t t) const {
  std::vector<double> f = features_for(panel, i, t, opts_);
  return apply_step(steps_[t], f);
}

ForecastGrid PerStepLinearModel::predict(const PanelData& panel) const {
  if (panel.horizon() != horizon() || panel.feature_dim() != feature_dim_) {
    raise(ErrorCode::ShapeMismatch, "panel shape does not match the fitted model");
  }
  ForecastGrid grid;
  grid.source = ForecastSource::per_step_linear;
  grid.y_hat = Grid(panel.n_series(), panel.horizon());
  for (std::size_t i = 0; i < panel.n_series(); ++i) {
    for (std::size_t t = 0; t < panel.horizon(); ++t) {
      grid.y_hat(i, t) = predict_cell(panel, i, t);
    }
  }
  return grid;
}

namespace {

void save_step_models(std::ostringstream& out, const PerStepLinearModel& model) {
  const FitOptions& opts = model.options();
  out << "horizon " << model.horizon() << "\n";
  out << "feature_dim " << model.feature_dim() << "\n";
  out << "lambda_ridge " << text::fmt_shortest(opts.lambda_ridge) << "\n";
  out << "standardize " << (opts.standardize ? 1 : 0) << "\n";
  out << "use_lagged_responses " << (opts.use_lagged_responses ? 1 : 0) << "\n";
  out << "use_covariates " << (opts.use_covariates ? 1 : 0) << "\n";
  for (std::size_t t = 0; t < model.horizon(); ++t) {
    const auto& step = model.step(t);
    out << "step " << t << " nfeat " << step.coef.size() << "\n";
    out << "intercept " << text::fmt_shortest(step.intercept) << "\n";
    auto row = [&](const char* tag, const std::vector<double>& values) {
      if (values.empty()) return;
      out << tag;
      for (double v : values) out << ' ' << text::fmt_shortest(v);
      out << "\n";
    };
    row("coef", step.coef);
    row("feat_mean", step.feat_mean);
    row("feat_scale", step.feat_scale);
  }
}

class LineReader {
 public:
  LineReader(const std::filesystem::path& path) : in_(path), origin_(path.string()) {
    if (!in_) raise(ErrorCode::IoError, "cannot open " + origin_);
  }
  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      line = text::trim(line);
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      return tokens;
    }
    raise(ErrorCode::BadHeader, origin_ + ": unexpected end of model file");
  }
  const std::string& origin() const { return origin_; }

 private:
  std::ifstream in_;
  std::string origin_;
};

double parse_num(const LineReader& reader, const std::string& token) {
  double value = 0.0;
  if (!text::try_parse_double(token, value)) {
    raise(ErrorCode::BadHeader, reader.origin() + ": bad number '" + token + "'");
  }
  return value;
}

PerStepLinearModel load_step_models(LineReader& reader) {
  auto expect = [&](const char* key) {
    auto tokens = reader.next();
    if (tokens.size() < 2 || tokens[0] != key) {
      raise(ErrorCode::BadHeader, reader.origin() + ": expected '" + key + "'");
    }
    return tokens[1];
  };

  std::size_t horizon = static_cast<std::size_t>(parse_num(reader, expect("horizon")));
  std::size_t feature_dim = static_cast<std::size_t>(parse_num(reader, expect("feature_dim")));
  FitOptions opts;
  opts.lambda_ridge = parse_num(reader, expect("lambda_ridge"));
  opts.standardize = parse_num(reader, expect("standardize")) != 0;
  opts.use_lagged_responses = parse_num(reader, expect("use_lagged_responses")) != 0;
  opts.use_covariates = parse_num(reader, expect("use_covariates")) != 0;

  std::vector<PerStepLinearModel::StepModel> steps(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    auto header = reader.next();
    if (header.size() != 4 || header[0] != "step" || header[2] != "nfeat") {
      raise(ErrorCode::BadHeader, reader.origin() + ": expected 'step <t> nfeat <n>'");
    }
    std::size_t nfeat = static_cast<std::size_t>(parse_num(reader, header[3]));
    PerStepLinearModel::StepModel& step = steps[t];
    step.intercept = parse_num(reader, expect("intercept"));
    auto read_row = [&](const char* tag, std::vector<double>& values, std::size_t count) {
      if (count == 0) return;
      auto tokens = reader.next();
      if (tokens.size() != count + 1 || tokens[0] != tag) {
        raise(ErrorCode::BadHeader, reader.origin() + ": expected '" + tag + "' row");
      }
      values.resize(count);
      for (std::size_t j = 0; j < count; ++j) values[j] = parse_num(reader, tokens[j + 1]);
    };
    read_row("coef", step.coef, nfeat);
    if (opts.standardize) {
      read_row("feat_mean", step.feat_mean, nfeat);
      read_row("feat_scale", step.feat_scale, nfeat);
    }
  }

  return PerStepLinearModel::from_parts(std::move(steps), feature_dim, opts);
}

}  // namespace

void PerStepLinearModel::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  out << "cptd-model v1\n";
  out << "kind per_step_linear\n";
  save_step_models(out, *this);
  text::write_file(path, out.str());
}

PerStepLinearModel PerStepLinearModel::load(const std::filesystem::path& path) {
  LineReader reader(path);
  auto magic = reader.next();
  if (magic.size() != 2 || magic[0] != "cptd-model" || magic[1] != "v1") {
    raise(ErrorCode::BadHeader, path.string() + ": not a cptd-model v1 file");
  }
  auto kind = reader.next();
  if (kind.size() != 2 || kind[0] != "kind" || kind[1] != "per_step_linear") {
    raise(ErrorCode::BadHeader, path.string() + ": expected kind per_step_linear");
  }
  return load_step_models(reader);
}

ErrorPredictorModel ErrorPredictorModel::fit(const PanelData& train, const ForecastGrid& grid,
                                             const FitOptions& opts, double floor_value) {
  if (grid.y_hat.rows != train.n_series() || grid.y_hat.cols != train.horizon()) {
    raise(ErrorCode::ShapeMismatch, "forecast grid does not match the training panel");
  }
  Grid targets(train.n_series(), train.horizon());
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < train.n_series(); ++i) {
    for (std::size_t t = 0; t < train.horizon(); ++t) {
      targets(i, t) = std::abs(train.y(i, t) - grid.y_hat(i, t));
      abs_sum += std::abs(train.y(i, t));
    }
  }
  ErrorPredictorModel model;
  model.base_ = PerStepLinearModel::fit_targets(train, targets, opts);
  if (floor_value < 0.0) {
    double mean_abs = abs_sum / static_cast<double>(train.n_series() * train.horizon());
    floor_value = 1e-6 * (1.0 + mean_abs);
  }
  if (floor_value <= 0.0) raise(ErrorCode::InvalidSpec, "error-predictor floor must be positive");
  model.floor_ = floor_value;
  return model;
}

Grid ErrorPredictorModel::predict(const PanelData& panel) const {
  ForecastGrid raw = base_.predict(panel);
  Grid out = raw.y_hat;
  for (double& v : out.data) v = std::max(v, floor_);
  return out;
}

void ErrorPredictorModel::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  out << "cptd-model v1\n";
  out << "kind error_predictor\n";
  out << "floor " << text::fmt_shortest(floor_) << "\n";
  save_step_models(out, base_);
  text::write_file(path, out.str());
}

ErrorPredictorModel ErrorPredictorModel::load(const std::filesystem::path& path) {
  LineReader reader(path);
  auto magic = reader.next();
  if (magic.size() != 2 || magic[0] != "cptd-model" || magic[1] != "v1") {
    raise(ErrorCode::BadHeader, path.string() + ": not a cptd-model v1 file");
  }
  auto kind = reader.next();
  if (kind.size() != 2 || kind[0] != "kind" || kind[1] != "error_predictor") {
    raise(ErrorCode::BadHeader, path.string() + ": expected kind error_predictor");
  }
  auto floor_row = reader.next();
  if (floor_row.size() != 2 || floor_row[0] != "floor") {
    raise(ErrorCode::BadHeader, path.string() + ": expected floor");
  }
  ErrorPredictorModel model;
  model.floor_ = parse_num(reader, floor_row[1]);
  model.base_ = load_step_models(reader);
  return model;
}

ForecastGrid predict_naive_last(const PanelData& panel) {
  ForecastGrid grid;
  grid.source = ForecastSource::naive_last;
  grid.y_hat = Grid(panel.n_series(), panel.horizon());
  for (std::size_t i = 0; i < panel.n_series(); ++i) {
    grid.y_hat(i, 0) = 0.0;
    for (std::size_t t = 1; t < panel.horizon(); ++t) grid.y_hat(i, t) = panel.y(i, t - 1);
  }
  return grid;
}

ForecastGrid ingest_external_grid(const std::filesystem::path& path, const PanelData& panel) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
  std::string origin = path.string();

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < panel.n_series(); ++i) index.emplace(panel.series(i).id, i);

  ForecastGrid grid;
  grid.source = ForecastSource::external;
  grid.y_hat = Grid(panel.n_series(), panel.horizon());
  std::vector<char> seen(panel.n_series() * panel.horizon(), 0);

  std::string line;
  std::size_t lineno = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = text::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::vector<std::string> fields = text::split_csv_line(stripped);
    if (!header_done) {
      if (fields.size() != 3 || fields[0] != "series_id" || fields[1] != "t" || fields[2] != "y_hat") {
        raise(ErrorCode::MissingColumn, origin + ": header must be series_id,t,y_hat");
      }
      header_done = true;
      continue;
    }
    if (fields.size() != 3) {
      raise(ErrorCode::MissingColumn, origin + ":" + std::to_string(lineno) + ": expected 3 fields");
    }
    auto it = index.find(fields[0]);
    if (it == index.end()) {
      raise(ErrorCode::UnknownSeries, origin + ":" + std::to_string(lineno) + ": series '" + fields[0] + "'");
    }
    std::uint64_t step = 0;
    if (!text::try_parse_u64(fields[1], step) || step >= panel.horizon()) {
      raise(ErrorCode::UnknownSeries,
            origin + ":" + std::to_string(lineno) + ": step " + fields[1] + " outside the panel horizon");
    }
    double value = 0.0;
    if (!text::try_parse_double(fields[2], value) || !std::isfinite(value)) {
      raise(ErrorCode::NonFiniteValue, origin + ":" + std::to_string(lineno) + ": y_hat");
    }
    std::size_t slot = it->second * panel.horizon() + static_cast<std::size_t>(step);
    if (seen[slot]) {
      raise(ErrorCode::DuplicateCell,
            origin + ":" + std::to_string(lineno) + ": duplicate prediction for (" + fields[0] + ", " + fields[1] + ")");
    }
    seen[slot] = 1;
    grid.y_hat(it->second, static_cast<std::size_t>(step)) = value;
  }
  if (!header_done) raise(ErrorCode::MissingColumn, origin + ": empty file, no header");

  for (std::size_t i = 0; i < panel.n_series(); ++i) {
    for (std::size_t t = 0; t < panel.horizon(); ++t) {
      if (!seen[i * panel.horizon() + t]) {
        raise(ErrorCode::MissingPrediction,
              origin + ": no prediction for (" + panel.series(i).id + ", " + std::to_string(t) + ")");
      }
    }
  }
  return grid;
}

void write_forecast_grid(const ForecastGrid& grid, const PanelData& panel,
                         const std::filesystem::path& path) {
  if (grid.y_hat.rows != panel.n_series() || grid.y_hat.cols != panel.horizon()) {
    raise(ErrorCode::ShapeMismatch, "forecast grid does not match the panel");
  }
  std::ostringstream out;
  out << "series_id,t,y_hat\n";
  for (std::size_t i = 0; i < panel.n_series(); ++i) {
    for (std::size_t t = 0; t < panel.horizon(); ++t) {
      out << panel.series(i).id << ',' << t << ',' << text::fmt_shortest(grid.y_hat(i, t)) << "\n";
    }
  }
  text::write_file(path, out.str());
}

Grid abs_residuals(const PanelData& panel, const ForecastGrid& grid) {
  if (grid.y_hat.rows != panel.n_series() || grid.y_hat.cols != panel.horizon()) {
    raise(ErrorCode::ShapeMismatch, "forecast grid does not match the panel");
  }
  Grid out(panel.n_series(), panel.horizon());
  for (std::size_t i = 0; i < panel.n_series(); ++i) {
    for (std::size_t t = 0; t < panel.horizon(); ++t) {
      out(i, t) = std::abs(panel.y(i, t) - grid.y_hat(i, t));
    }
  }
  return out;
}

}  // namespace cptd
