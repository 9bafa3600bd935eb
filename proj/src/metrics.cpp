#include "optimcorr/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "optimcorr/estimators.hpp"

namespace optimcorr {

double c_statistic(ScoredOutcomes s) {
  const std::size_t n = s.scores.size();
  if (s.outcomes.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "scores and outcomes differ in length");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });

  // Twice the mid-rank of a tie block spanning 1-based ranks [lo+1, hi] is lo + hi + 1.
  std::int64_t twice_rank_sum = 0;
  std::int64_t events = 0;
  std::size_t lo = 0;
  while (lo < n) {
    std::size_t hi = lo + 1;
    while (hi < n && s.scores[order[hi]] == s.scores[order[lo]]) ++hi;
    const auto twice_mid = static_cast<std::int64_t>(lo + hi + 1);
    for (std::size_t k = lo; k < hi; ++k) {
      if (s.outcomes[order[k]] == 1.0) {
        twice_rank_sum += twice_mid;
        ++events;
      }
    }
    lo = hi;
  }
  const std::int64_t non_events = static_cast<std::int64_t>(n) - events;
  if (events == 0 || non_events == 0) {
    throw Error(ErrorCode::UndefinedC, "C-statistic needs at least one event and one non-event");
  }
  // 2U = 2 * rank_sum - n1 (n1 + 1)
  const std::int64_t twice_u = twice_rank_sum - events * (events + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(events) * static_cast<double>(non_events));
}

double c_statistic(const Vector& scores, const Vector& outcomes) {
  return c_statistic(ScoredOutcomes{std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
                                    std::span<const double>(outcomes.data(), static_cast<std::size_t>(outcomes.size()))});
}

double deviance(const FittedModel& model, const Dataset& data) { return -2.0 * log_likelihood(model, data); }

}  // namespace optimcorr
