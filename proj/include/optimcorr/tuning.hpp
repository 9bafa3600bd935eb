#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optimcorr/core.hpp"

namespace optimcorr {

/// Cross-validation settings for choosing the penalty strength.
struct CvPlan {
  int folds = 10;
  bool leave_one_out = false;
  bool stratified = true;
  std::uint64_t seed = 0;
  int path_length = 100;
  double path_ratio = 1e-4;
  // Stop the path once the deviance ratio saturates (see fit_penalized_path).
  bool early_stop = true;

  /// Number of folds actually used for n subjects.
  int resolved_folds(Index n) const;
  void validate(Index n) const;
};

struct LambdaPath {
  std::vector<double> values;  // strictly decreasing
  double lambda_max = 0.0;
};

/// Ridge has no finite lambda_max; the path is anchored at this surrogate
/// mixing weight instead.
inline constexpr double kRidgeAlphaSurrogate = 0.001;

/// Log-spaced path from lambda_max = max_j |(1/n) sum_i x_ij (y_i - ybar)| / alpha
/// (standardized predictors) down to lambda_max * path_ratio.
LambdaPath lambda_path(const Dataset& data, double alpha, const CvPlan& plan = {});

struct FoldAssignment {
  std::vector<int> fold;  // fold id per subject
  int k = 0;
  bool stratified = false;
  std::vector<std::string> warnings;
};

FoldAssignment make_folds(Index n, const CvPlan& plan, const Vector& outcomes);

struct CvResult {
  double lambda = 0.0;
  std::size_t index = 0;
  std::vector<double> lambdas;   // path actually evaluated
  std::vector<double> cv_curve;  // mean held-out deviance per lambda
  std::vector<int> skipped_folds;
  FoldAssignment folds;
  FittedModel model;  // full-data fit at the selected lambda
};

/// K-fold (or leave-one-out) CV of held-out deviance along the path; returns
/// the minimizer, ties going to the larger lambda.
CvResult cv_select_lambda(const Dataset& data, double alpha, const CvPlan& plan);

}  // namespace optimcorr
