#include "optimcorr/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "optimcorr/estimators.hpp"
#include "optimcorr/metrics.hpp"
#include "optimcorr/random.hpp"

namespace optimcorr {

int CvPlan::resolved_folds(Index n) const { return leave_one_out ? static_cast<int>(n) : folds; }

void CvPlan::validate(Index n) const {
  const int k = resolved_folds(n);
  if (k < 2 || k > n) {
    throw Error(ErrorCode::InvalidArgument,
                "fold count " + std::to_string(k) + " must satisfy 2 <= k <= n = " + std::to_string(n));
  }
  if (path_length < 1) throw Error(ErrorCode::InvalidArgument, "path_length must be positive");
  if (!(path_ratio > 0.0 && path_ratio < 1.0)) throw Error(ErrorCode::InvalidArgument, "path_ratio must lie in (0, 1)");
}

LambdaPath lambda_path(const Dataset& data, double alpha, const CvPlan& plan) {
  const Vector& y = data.outcomes();
  const double ybar = y.mean();
  if (ybar == 0.0 || ybar == 1.0) throw Error(ErrorCode::DegenerateOutcome, "outcome has a single class");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  if (plan.path_length < 1) throw Error(ErrorCode::InvalidArgument, "path_length must be positive");
  const double effective_alpha = alpha > 0.0 ? alpha : kRidgeAlphaSurrogate;

  const Standardized s = standardize(data.predictors());
  const Vector centred = (y.array() - ybar).matrix();
  const double n = static_cast<double>(data.n());
  double max_gradient = 0.0;
  for (Index j = 0; j < data.p(); ++j) {
    max_gradient = std::max(max_gradient, std::abs(s.values.col(j).dot(centred)) / n);
  }
  LambdaPath path;
  path.lambda_max = max_gradient / effective_alpha;
  if (!(path.lambda_max > 1e-14)) {
    throw Error(ErrorCode::DegeneratePath, "no predictor is correlated with the outcome (lambda_max = 0)");
  }
  const int length = plan.path_length;
  path.values.resize(static_cast<std::size_t>(length));
  for (int k = 0; k < length; ++k) {
    const double t = length == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(length - 1);
    path.values[static_cast<std::size_t>(k)] = path.lambda_max * std::pow(plan.path_ratio, t);
  }
  path.values.front() = path.lambda_max;
  return path;
}

FoldAssignment make_folds(Index n, const CvPlan& plan, const Vector& outcomes) {
  plan.validate(n);
  FoldAssignment out;
  out.k = plan.resolved_folds(n);
  out.fold.assign(static_cast<std::size_t>(n), 0);

  Rng rng = make_stream(plan.seed, 0, StreamPurpose::CvFolds);
  auto shuffle = [&](std::vector<Index>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_below(rng, i));
      std::swap(v[i - 1], v[j]);
    }
  };

  std::vector<Index> events, non_events;
  for (Index i = 0; i < n; ++i) (outcomes[i] == 1.0 ? events : non_events).push_back(i);

  bool stratify = plan.stratified && !plan.leave_one_out;
  if (stratify && static_cast<int>(events.size()) < out.k) {
    out.warnings.push_back("TooFewEventsForStratification: " + std::to_string(events.size()) + " events for " +
                           std::to_string(out.k) + " folds; using unstratified folds");
    stratify = false;
  }
  out.stratified = stratify;

  // Dealing one long cyclic sequence keeps fold sizes within one of each other;
  // when stratified, events are dealt first so their counts also differ by at most one.
  std::vector<Index> order;
  if (stratify) {
    shuffle(events);
    shuffle(non_events);
    order = events;
    order.insert(order.end(), non_events.begin(), non_events.end());
  } else {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    shuffle(order);
  }
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    out.fold[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(out.k));
  }
  return out;
}

CvResult cv_select_lambda(const Dataset& data, double alpha, const CvPlan& plan) {
  plan.validate(data.n());
  const LambdaPath path = lambda_path(data, alpha, plan);
  PenalizedPath full = fit_penalized_path(data, alpha, path.values, plan.early_stop);

  CvResult result;
  result.folds = make_folds(data.n(), plan, data.outcomes());
  const Index n = data.n();
  std::size_t length = full.lambdas.size();

  // Held-out deviance per subject and lambda, reduced in subject order.
  Matrix held_out = Matrix::Constant(n, static_cast<Index>(length), std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> scored(static_cast<std::size_t>(n), false);
  for (int f = 0; f < result.folds.k; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < n; ++i) (result.folds.fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    const Dataset training = data.rows(train);
    if (training.events() == 0 || training.non_events() == 0 || training.n() < 2) {
      result.skipped_folds.push_back(f);
      continue;
    }
    PenalizedPath fold_path = fit_penalized_path(
        training, alpha, std::span<const double>(full.lambdas.data(), length), plan.early_stop);
    length = std::min(length, fold_path.lambdas.size());
    for (Index i : test) {
      scored[static_cast<std::size_t>(i)] = true;
      const Vector x = data.predictors().row(i).transpose();
      for (std::size_t k = 0; k < length; ++k) {
        held_out(i, static_cast<Index>(k)) = unit_deviance(linear_predictor_one(fold_path.models[k], x), data.outcomes()[i]);
      }
    }
  }
  const auto used = static_cast<double>(std::count(scored.begin(), scored.end(), true));
  if (used == 0) throw Error(ErrorCode::DegenerateOutcome, "every CV fold was skipped");

  result.lambdas.assign(full.lambdas.begin(), full.lambdas.begin() + static_cast<std::ptrdiff_t>(length));
  result.cv_curve.assign(length, 0.0);
  for (std::size_t k = 0; k < length; ++k) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (scored[static_cast<std::size_t>(i)]) total += held_out(i, static_cast<Index>(k));
    }
    result.cv_curve[k] = total / used;
  }
  result.index = static_cast<std::size_t>(
      std::min_element(result.cv_curve.begin(), result.cv_curve.end()) - result.cv_curve.begin());
  result.lambda = result.lambdas[result.index];
  result.model = full.models[result.index];
  return result;
}

}  // namespace optimcorr
