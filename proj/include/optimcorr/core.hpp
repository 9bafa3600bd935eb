#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "optimcorr/error.hpp"

namespace optimcorr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Binary outcome with an n x p numeric predictor matrix.
///
/// Construction validates: outcomes are 0/1, predictors finite, names unique
/// and sized p. Immutable afterwards.
class Dataset {
 public:
  Dataset(Vector outcomes, Matrix predictors, std::vector<std::string> names = {});

  const Vector& outcomes() const noexcept { return outcomes_; }
  const Matrix& predictors() const noexcept { return predictors_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  Index n() const noexcept { return predictors_.rows(); }
  Index p() const noexcept { return predictors_.cols(); }
  Index events() const noexcept { return events_; }
  Index non_events() const noexcept { return n() - events_; }

  /// Rows in the given order; duplicates allowed (bootstrap resamples).
  Dataset rows(std::span<const Index> index) const;
  Dataset columns(std::span<const Index> index) const;

 private:
  Vector outcomes_;
  Matrix predictors_;
  std::vector<std::string> names_;
  Index events_ = 0;
};

struct StandardizationParams {
  Vector means;
  Vector scales;  // 1 for constant columns
  std::vector<Index> constant_columns;

  bool is_constant(Index j) const;
};

/// Column-wise centering and scaling with the population (divisor n) variance.
/// Constant columns come back as zeros and are listed in constant_columns.
struct Standardized {
  Matrix values;
  StandardizationParams params;
};

Standardized standardize(const Matrix& predictors);
Matrix unstandardize(const Matrix& standardized, const StandardizationParams& params);

struct FittedModel {
  double intercept = 0.0;
  Vector coefficients;
  std::vector<bool> selected;
  std::string strategy_tag;
  bool converged = true;
  int iterations = 0;

  Index p() const noexcept { return coefficients.size(); }
  bool intercept_only() const;

  static FittedModel null_model(Index p, double intercept, std::string tag);
};

/// Maps a model fitted on standardized predictors back to the original scale.
FittedModel destandardize(const FittedModel& standardized, const StandardizationParams& params);

double sigmoid(double eta) noexcept;
/// log(sigmoid(eta)) without cancellation or overflow.
double log_sigmoid(double eta) noexcept;

double linear_predictor_one(const FittedModel& model, const Eigen::Ref<const Vector>& x);
Vector linear_predictor(const FittedModel& model, const Matrix& predictors);
double predict_risk_one(const FittedModel& model, const Eigen::Ref<const Vector>& x);
Vector predict_risk(const FittedModel& model, const Matrix& predictors);

}  // namespace optimcorr
