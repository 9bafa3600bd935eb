#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optimcorr/core.hpp"
#include "optimcorr/estimators.hpp"

namespace optimcorr {

/// Model-building pipeline replayed inside every bootstrap resample:
/// standardization, CV tuning and variable selection all live in the strategy.
struct Pipeline {
  Strategy strategy;

  FittedModel fit(const Dataset& data, std::uint64_t seed) const { return fit_strategy(strategy, data, seed); }
};

/// No-information C-statistic.
inline constexpr double kNoInformationC = 0.5;
inline constexpr int kDefaultBootstrapReplicates = 2000;

struct ReplicateRecord {
  std::size_t index = 0;
  std::optional<double> theta_boot;
  std::optional<double> theta_orig;
  std::optional<double> theta_out;
  std::size_t oob_size = 0;
  std::size_t oob_events = 0;
  bool intercept_only = false;
  std::optional<std::string> skipped_reason;
};

struct ValidationReport {
  double theta_app = 0.0;
  double optimism = 0.0;
  double theta_out_mean = 0.0;
  double harrell = 0.0;
  double est_632 = 0.0;
  double est_632_plus = 0.0;
  double overfit_R = 0.0;
  double weight_w = 0.632;
  double gamma = kNoInformationC;
  std::size_t B = 0;
  std::uint64_t seed = 0;
  std::vector<ReplicateRecord> replicates;
  std::size_t skipped = 0;      // replicates excluded from every aggregate
  std::size_t skipped_oob = 0;  // replicates with an undefined out-of-bag C only
  FittedModel model;            // fit on the full data
};

double harrell_correct(double theta_app, double optimism);
double estimator_632(double theta_app, double theta_out);

struct Estimate632Plus {
  double estimate = 0.0;
  double R = 0.0;
  double w = 0.632;
  double theta_out_clamped = 0.0;
};

/// theta_out is floored at gamma and R clamped to [0, 1]; theta_app == gamma
/// resolves to R = 0.
Estimate632Plus estimator_632_plus(double theta_app, double theta_out, double gamma = kNoInformationC);

/// C-statistic of the pipeline's model on the data it was fitted to.
double apparent(const Pipeline& pipeline, const Dataset& data, std::uint64_t seed);

/// Bootstrap optimism correction with full pipeline replay. Replicate b draws
/// its resample and CV folds from streams keyed by (seed, b), so the report is
/// identical for any thread count.
///
/// If `final_model` is given it is used as the full-data fit instead of refitting.
ValidationReport bootstrap_optimism(const Pipeline& pipeline, const Dataset& data, std::size_t B, std::uint64_t seed,
                                    unsigned threads = 1, const FittedModel* final_model = nullptr);

}  // namespace optimcorr
