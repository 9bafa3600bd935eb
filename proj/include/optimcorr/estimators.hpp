#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "optimcorr/core.hpp"
#include "optimcorr/tuning.hpp"

namespace optimcorr {

enum class StrategyKind { ML, Firth, Ridge, Lasso, ElasticNet, StepwiseAIC, StepwiseBIC, StepwiseP };

/// CLI spelling: ml, firth, ridge, lasso, enet, step-aic, step-bic, step-p.
std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy_kind(std::string_view name);

/// A model-building strategy with everything needed to replay it on a resample.
struct Strategy {
  StrategyKind kind = StrategyKind::ML;
  double alpha = 0.5;         // elastic-net mixing weight
  double p_threshold = 0.05;  // StepwiseP only
  bool allow_separation = false;  // ML and stepwise: keep diverging fits
  CvPlan tuning;              // penalized kinds only

  bool penalized() const noexcept;
  /// Mixing weight handed to the penalized fitter (0 ridge, 1 lasso).
  double mixing() const noexcept;
  void validate() const;
  std::string tag() const { return std::string(to_string(kind)); }
};

struct FitControls {
  int max_iterations = 50;
  int firth_max_iterations = 200;
  int max_sweeps = 1000;
  double tolerance = 1e-7;        // max coefficient change
  double separation_bound = 15.0; // |beta| on the standardized scale
  double extreme_probability = 1e-10;
  // ML only: return the last iterate (converged = false) instead of raising
  // Separation, the way glm-style fitters do.
  bool keep_divergent = false;
};

struct PenaltySpec {
  double lambda = 0.0;
  double alpha = 1.0;
};

/// IRLS quantities at a coefficient vector on a design with a leading
/// intercept column.
struct WorkingState {
  Vector beta;
  Vector weights;      // pi (1 - pi)
  Matrix information;  // Z' W Z
  Vector hat_diagonal; // filled only when requested
};

WorkingState working_state(const Matrix& design, const Vector& beta, bool with_hat);

/// sum_i y_i log pi_i + (1 - y_i) log(1 - pi_i), evaluated with log-sigmoids.
double log_likelihood(const FittedModel& model, const Dataset& data);

FittedModel fit_ml(const Dataset& data, const FitControls& controls = {});
FittedModel fit_firth(const Dataset& data, const FitControls& controls = {});

/// Maximizes (1/n) l(beta) - lambda {(1 - alpha) sum beta_j^2 + alpha sum |beta_j|}
/// over standardized predictors (intercept unpenalized) and returns the
/// coefficients on the original scale. If `objective_trace` is given it
/// receives the objective after every IRLS step.
FittedModel fit_penalized(const Dataset& data, const PenaltySpec& penalty, const FitControls& controls = {},
                          std::vector<double>* objective_trace = nullptr);

struct PenalizedPath {
  std::vector<double> lambdas;  // prefix of the requested path that was fitted
  std::vector<FittedModel> models;
  std::vector<double> deviance_ratio;
};

/// Warm-started fits along a decreasing lambda sequence. With early_stop the
/// path ends once the deviance ratio reaches 0.999 or improves by less than a
/// relative 1e-5 (after the first five values).
PenalizedPath fit_penalized_path(const Dataset& data, double alpha, std::span<const double> lambdas,
                                 bool early_stop, const FitControls& controls = {});

enum class StepwiseCriterion { AIC, BIC, PValue };

struct StepwiseRule {
  StepwiseCriterion criterion = StepwiseCriterion::AIC;
  double p_threshold = 0.05;
};

/// Backward elimination from the full ML model, refitting after each drop.
FittedModel backward_stepwise(const Dataset& data, const StepwiseRule& rule, const FitControls& controls = {});

/// Runs the whole model-building strategy (including CV tuning) on `data`.
FittedModel fit_strategy(const Strategy& strategy, const Dataset& data, std::uint64_t seed);

}  // namespace optimcorr
