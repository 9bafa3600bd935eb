#pragma once

#include <span>

#include "optimcorr/core.hpp"

namespace optimcorr {

/// Risk scores (or linear predictors) paired with binary outcomes.
struct ScoredOutcomes {
  std::span<const double> scores;
  std::span<const double> outcomes;
};

/// Concordance probability over all event/non-event pairs, ties counted as
/// one half. O(n log n) via mid-rank sums; the numerator is kept in integer
/// arithmetic so the result equals the pairwise count exactly.
///
/// Throws Error(UndefinedC) without at least one event and one non-event.
double c_statistic(ScoredOutcomes s);
double c_statistic(const Vector& scores, const Vector& outcomes);

/// -2 times the Bernoulli log-likelihood of the model on the data.
double deviance(const FittedModel& model, const Dataset& data);

/// Per-observation deviance contribution given a linear predictor.
inline double unit_deviance(double eta, double y) {
  return -2.0 * (y == 1.0 ? log_sigmoid(eta) : log_sigmoid(-eta));
}

}  // namespace optimcorr
