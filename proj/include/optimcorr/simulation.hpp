#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optimcorr/core.hpp"
#include "optimcorr/estimators.hpp"
#include "optimcorr/random.hpp"

namespace optimcorr {

// ---------------------------------------------------------------------------
// Correlated binary variables
// ---------------------------------------------------------------------------

/// Probability table over {0,1}^k; cell c has variable j equal to bit j of c.
struct JointBernoulli {
  int k = 0;
  std::vector<double> table;
  std::vector<double> cumulative;
  double max_deviation = 0.0;
  int iterations = 0;
  bool converged = false;

  /// Inverse-CDF draw of one cell index.
  std::uint32_t draw(Rng& rng) const;
};

struct TableMoments {
  Vector marginals;
  Matrix joint;         // P(X_j = 1, X_l = 1); diagonal holds the marginals
  Matrix correlations;  // Pearson correlations
};

TableMoments table_moments(const JointBernoulli& jb);

/// Iterative proportional fitting of the 2^k table to the given one-way
/// marginals and pairwise correlations, starting from independence.
/// Throws InfeasibleMargins when a pair violates the Frechet bounds and
/// NoConvergence when the margins are still off by more than `tol` after
/// `max_iterations` cycles (unless allow_nonconverged, which returns the best
/// table with converged == false).
JointBernoulli fit_joint_bernoulli(std::span<const double> marginals, const Matrix& correlations, double tol = 1e-8,
                                   int max_iterations = 5000, bool allow_nonconverged = false);

// ---------------------------------------------------------------------------
// Predictor generation
// ---------------------------------------------------------------------------

enum class ColumnSource { Continuous, Dichotomized, SmokingEx, SmokingCurrent, Binary };

struct GeneratedColumn {
  std::string name;
  ColumnSource source;
  Index index = 0;  // into the continuous block or the binary block
};

struct DichotomizeRule {
  Index latent = 0;
  double target_probability = 0.5;  // P(latent > threshold)
  double threshold = 0.0;
};

struct PredictorGenModel {
  Vector continuous_mean;
  Matrix continuous_covariance;
  std::vector<DichotomizeRule> dichotomize;
  std::array<double, 3> smoking_probabilities{};  // never, ex, current
  std::vector<double> binary_marginals;
  Matrix binary_correlations;
  JointBernoulli joint;
  std::vector<GeneratedColumn> columns;

  Index width() const { return static_cast<Index>(columns.size()); }
  std::vector<std::string> names() const;
  /// Fits the joint table and derives thresholds; call after editing fields.
  void prepare();
  void validate() const;
};

/// Acute-MI cohort generator. Binary correlations are 0.1 inside clinically
/// related pairs and 0 elsewhere.
PredictorGenModel default_generator();

/// Clinically related pairs of the default binary block (indices into it).
std::vector<std::pair<Index, Index>> related_binary_pairs();

/// n x width() matrix, one row at a time in a fixed draw order.
Matrix sample_predictors(const PredictorGenModel& gen, Index n, Rng& rng);

/// Output columns used by the 8- and 17-variable predictor sets.
std::vector<Index> predictor_set_columns(int predictor_set);

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

enum class ScenarioLabel { Scenario1_ML, Scenario2_ElasticNet, Custom };

struct CoefficientScenario {
  std::vector<double> slopes;
  ScenarioLabel label = ScenarioLabel::Custom;
};

/// Default coefficients: scenario 1 = ML fit, scenario 2 = elastic-net fit.
CoefficientScenario default_coefficients(int predictor_set, int scenario);

struct ScenarioConfig {
  double epv = 3;
  double event_fraction = 0.5;
  int predictor_set = 8;
  CoefficientScenario coefficients = default_coefficients(8, 2);
  std::size_t n_sim = 200;
  std::size_t B = 200;
  Index external_n = 50000;
  std::uint64_t master_seed = 20200101;
  std::vector<Strategy> strategies;
  Index calibration_n = 200000;
  double calibration_tol = 0.002;

  Index n() const;
  int scenario_number() const;
  /// Throws Error(ConfigError) naming the offending field.
  void validate() const;
};

Index derived_n(int predictor_set, double epv, double fraction);

/// Bisection on the intercept so the mean risk over a fixed calibration
/// sample matches target_fraction.
double calibrate_intercept(std::span<const double> slopes, const PredictorGenModel& gen, std::span<const Index> columns,
                           double target_fraction, double tol = 0.002, Index sample_size = 200000,
                           std::uint64_t seed = 0x5eed);

/// Everything a scenario needs before replicates start.
struct ScenarioSetup {
  PredictorGenModel generator;
  std::vector<Index> columns;
  Vector slopes;
  double intercept = 0.0;
  Index n = 0;
};

ScenarioSetup prepare_scenario(const ScenarioConfig& config);

/// Derivation dataset for one replicate, regenerated (up to 100 times) if it
/// has no events or no non-events.
Dataset generate_dataset(const ScenarioConfig& config, const ScenarioSetup& setup, std::size_t replicate_index);

/// Dataset of size n from the setup's true model, drawn from `rng`.
Dataset draw_dataset(const ScenarioSetup& setup, Index n, Rng& rng);

inline constexpr std::array<const char*, 4> kEstimatorNames{"apparent", "harrell", "632", "632plus"};

struct EstimatorSummary {
  double bias = 0.0;
  double rmse = 0.0;
  double variance = 0.0;
  double mean = 0.0;
};

struct StrategySummary {
  std::string strategy;
  std::array<EstimatorSummary, 4> estimators{};
  double mean_external_c = 0.0;
  std::size_t included = 0;
  std::size_t intercept_only = 0;
  std::size_t failed = 0;
  bool ok = true;
};

struct ReplicateOutcome {
  std::size_t replicate = 0;
  std::size_t strategy = 0;
  bool intercept_only = false;
  std::optional<std::string> failure;
  std::array<double, 4> estimates{};
  double external_c = 0.0;
  double overfit_R = 0.0;
  double weight_w = 0.0;
  std::size_t skipped_bootstrap = 0;
};

struct ScenarioResult {
  ScenarioConfig config;
  Index n = 0;
  double intercept = 0.0;
  double external_event_fraction = 0.0;
  std::vector<StrategySummary> summaries;
  std::vector<ReplicateOutcome> replicates;  // replicate-major, strategy-minor
};

ScenarioResult run_scenario(const ScenarioConfig& config, unsigned threads = 1);

/// The full 5 x 4 x 2 x 2 factorial over EPV, event fraction, predictor set and
/// coefficient scenario, with every other field copied from `base`.
std::vector<ScenarioConfig> factorial_grid(const ScenarioConfig& base);

/// All seven strategies with default settings.
std::vector<Strategy> default_strategies();

}  // namespace optimcorr
