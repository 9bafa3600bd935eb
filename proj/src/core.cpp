#include "optimcorr/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace optimcorr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AllSameOutcome: return "AllSameOutcome";
    case ErrorCode::Separation: return "Separation";
    case ErrorCode::SingularInformation: return "SingularInformation";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateOutcome: return "DegenerateOutcome";
    case ErrorCode::DegeneratePath: return "DegeneratePath";
    case ErrorCode::UndefinedC: return "UndefinedC";
    case ErrorCode::ValidationDegenerate: return "ValidationDegenerate";
    case ErrorCode::InfeasibleMargins: return "InfeasibleMargins";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::DegenerateAfterRetries: return "DegenerateAfterRetries";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::NonBinaryOutcome: return "NonBinaryOutcome";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Dataset::Dataset(Vector outcomes, Matrix predictors, std::vector<std::string> names)
    : outcomes_(std::move(outcomes)), predictors_(std::move(predictors)), names_(std::move(names)) {
  if (predictors_.rows() < 1 || predictors_.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument, "dataset needs n >= 1 and p >= 1");
  }
  if (outcomes_.size() != predictors_.rows()) {
    throw Error(ErrorCode::InvalidArgument, "outcome length does not match predictor rows");
  }
  for (Index i = 0; i < outcomes_.size(); ++i) {
    const double y = outcomes_[i];
    if (y != 0.0 && y != 1.0) {
      throw Error(ErrorCode::NonBinaryOutcome, "outcome at row " + std::to_string(i) + " is not 0/1");
    }
    if (y == 1.0) ++events_;
  }
  if (!predictors_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "predictors contain non-finite values");
  }
  if (names_.empty()) {
    names_.reserve(static_cast<std::size_t>(p()));
    for (Index j = 0; j < p(); ++j) names_.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Index>(names_.size()) != p()) {
    throw Error(ErrorCode::InvalidArgument, "names must have one entry per predictor");
  }
  if (std::set<std::string>(names_.begin(), names_.end()).size() != names_.size()) {
    throw Error(ErrorCode::InvalidArgument, "predictor names must be unique");
  }
}

Dataset Dataset::rows(std::span<const Index> index) const {
  const auto m = static_cast<Index>(index.size());
  Vector y(m);
  Matrix x(m, p());
  for (Index r = 0; r < m; ++r) {
    const Index src = index[static_cast<std::size_t>(r)];
    y[r] = outcomes_[src];
    x.row(r) = predictors_.row(src);
  }
  return Dataset(std::move(y), std::move(x), names_);
}

Dataset Dataset::columns(std::span<const Index> index) const {
  Matrix x(n(), static_cast<Index>(index.size()));
  std::vector<std::string> names;
  for (std::size_t c = 0; c < index.size(); ++c) {
    x.col(static_cast<Index>(c)) = predictors_.col(index[c]);
    names.push_back(names_[static_cast<std::size_t>(index[c])]);
  }
  return Dataset(outcomes_, std::move(x), std::move(names));
}

bool StandardizationParams::is_constant(Index j) const {
  return std::find(constant_columns.begin(), constant_columns.end(), j) != constant_columns.end();
}

Standardized standardize(const Matrix& predictors) {
  const Index n = predictors.rows();
  const Index p = predictors.cols();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "standardize needs n >= 2");

  Standardized out{Matrix(n, p), {Vector(p), Vector(p), {}}};
  for (Index j = 0; j < p; ++j) {
    const auto col = predictors.col(j);
    const double mean = col.mean();
    out.params.means[j] = mean;
    if (col.maxCoeff() == col.minCoeff()) {
      out.params.scales[j] = 1.0;
      out.params.constant_columns.push_back(j);
      out.values.col(j).setZero();
      continue;
    }
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
    const double scale = std::sqrt(var);
    out.params.scales[j] = scale;
    out.values.col(j) = (col.array() - mean) / scale;
  }
  return out;
}

Matrix unstandardize(const Matrix& standardized, const StandardizationParams& params) {
  Matrix out = standardized;
  for (Index j = 0; j < out.cols(); ++j) {
    out.col(j) = (standardized.col(j).array() * params.scales[j] + params.means[j]).matrix();
  }
  return out;
}

bool FittedModel::intercept_only() const {
  return std::none_of(selected.begin(), selected.end(), [](bool s) { return s; });
}

FittedModel FittedModel::null_model(Index p, double intercept, std::string tag) {
  FittedModel m;
  m.intercept = intercept;
  m.coefficients = Vector::Zero(p);
  m.selected.assign(static_cast<std::size_t>(p), false);
  m.strategy_tag = std::move(tag);
  return m;
}

FittedModel destandardize(const FittedModel& standardized, const StandardizationParams& params) {
  FittedModel out = standardized;
  double shift = 0.0;
  for (Index j = 0; j < standardized.p(); ++j) {
    if (params.is_constant(j)) {
      out.coefficients[j] = 0.0;
      out.selected[static_cast<std::size_t>(j)] = false;
      continue;
    }
    out.coefficients[j] = standardized.coefficients[j] / params.scales[j];
    shift += out.coefficients[j] * params.means[j];
  }
  out.intercept = standardized.intercept - shift;
  return out;
}

// Clamped to the open interval (0, 1) so saturated predictions stay usable as
// probabilities.
double sigmoid(double eta) noexcept {
  constexpr double kUpper = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  constexpr double kLower = std::numeric_limits<double>::min();
  double value;
  if (eta >= 0.0) {
    value = 1.0 / (1.0 + std::exp(-eta));
  } else {
    const double e = std::exp(eta);
    value = e / (1.0 + e);
  }
  return std::clamp(value, kLower, kUpper);
}

double log_sigmoid(double eta) noexcept {
  if (eta >= 0.0) return -std::log1p(std::exp(-eta));
  return eta - std::log1p(std::exp(eta));
}

double linear_predictor_one(const FittedModel& model, const Eigen::Ref<const Vector>& x) {
  return model.intercept + model.coefficients.dot(x);
}

Vector linear_predictor(const FittedModel& model, const Matrix& predictors) {
  Vector eta = predictors * model.coefficients;
  eta.array() += model.intercept;
  return eta;
}

double predict_risk_one(const FittedModel& model, const Eigen::Ref<const Vector>& x) {
  return sigmoid(linear_predictor_one(model, x));
}

Vector predict_risk(const FittedModel& model, const Matrix& predictors) {
  Vector eta = linear_predictor(model, predictors);
  return eta.unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace optimcorr
