#include "optimcorr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "optimcorr/metrics.hpp"
#include "optimcorr/parallel.hpp"
#include "optimcorr/validation.hpp"

namespace optimcorr {

// ---------------------------------------------------------------------------
// Joint Bernoulli table
// ---------------------------------------------------------------------------

std::uint32_t JointBernoulli::draw(Rng& rng) const {
  const double u = uniform01(rng) * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto cell = static_cast<std::size_t>(it - cumulative.begin());
  return static_cast<std::uint32_t>(std::min(cell, cumulative.size() - 1));
}

TableMoments table_moments(const JointBernoulli& jb) {
  const int k = jb.k;
  TableMoments m{Vector::Zero(k), Matrix::Zero(k, k), Matrix::Identity(k, k)};
  for (std::size_t cell = 0; cell < jb.table.size(); ++cell) {
    const double pr = jb.table[cell];
    for (int j = 0; j < k; ++j) {
      if (!(cell >> j & 1U)) continue;
      for (int l = j; l < k; ++l) {
        if (cell >> l & 1U) m.joint(j, l) += pr;
      }
    }
  }
  for (int j = 0; j < k; ++j) {
    m.marginals[j] = m.joint(j, j);
    for (int l = 0; l < j; ++l) m.joint(j, l) = m.joint(l, j);
  }
  for (int j = 0; j < k; ++j) {
    for (int l = 0; l < k; ++l) {
      if (j == l) continue;
      const double pj = m.marginals[j], pl = m.marginals[l];
      const double denom = std::sqrt(pj * (1 - pj) * pl * (1 - pl));
      m.correlations(j, l) = denom > 0 ? (m.joint(j, l) - pj * pl) / denom : 0.0;
    }
  }
  return m;
}

namespace {

void finalize_cumulative(JointBernoulli& jb) {
  jb.cumulative.resize(jb.table.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < jb.table.size(); ++c) {
    acc += jb.table[c];
    jb.cumulative[c] = acc;
  }
}

}  // namespace

JointBernoulli fit_joint_bernoulli(std::span<const double> marginals, const Matrix& correlations, double tol,
                                   int max_iterations, bool allow_nonconverged) {
  const int k = static_cast<int>(marginals.size());
  if (k < 1 || k > 20) throw Error(ErrorCode::InvalidArgument, "joint Bernoulli needs 1 <= k <= 20");
  if (correlations.rows() != k || correlations.cols() != k) {
    throw Error(ErrorCode::InvalidArgument, "correlation matrix must be k x k");
  }
  for (int j = 0; j < k; ++j) {
    if (!(marginals[static_cast<std::size_t>(j)] > 0.0 && marginals[static_cast<std::size_t>(j)] < 1.0)) {
      throw Error(ErrorCode::InfeasibleMargins, "marginal " + std::to_string(j) + " outside (0, 1)");
    }
  }
  // Target P(X_j = 1, X_l = 1).
  Matrix target(k, k);
  for (int j = 0; j < k; ++j) {
    const double pj = marginals[static_cast<std::size_t>(j)];
    target(j, j) = pj;
    for (int l = j + 1; l < k; ++l) {
      const double pl = marginals[static_cast<std::size_t>(l)];
      const double rho = correlations(j, l);
      if (std::abs(rho - correlations(l, j)) > 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "correlation matrix must be symmetric");
      }
      double pjl = rho * std::sqrt(pj * (1 - pj) * pl * (1 - pl)) + pj * pl;
      const double lower = std::max(0.0, pj + pl - 1.0);
      const double upper = std::min(pj, pl);
      if (pjl < lower - 1e-12 || pjl > upper + 1e-12) {
        throw Error(ErrorCode::InfeasibleMargins, "pair (" + std::to_string(j) + ", " + std::to_string(l) +
                                                      ") violates the Frechet bounds");
      }
      pjl = std::clamp(pjl, lower, upper);
      target(j, l) = target(l, j) = pjl;
    }
  }

  JointBernoulli jb;
  jb.k = k;
  const std::size_t cells = std::size_t{1} << k;
  jb.table.assign(cells, 1.0);
  for (std::size_t c = 0; c < cells; ++c) {
    for (int j = 0; j < k; ++j) {
      const double pj = marginals[static_cast<std::size_t>(j)];
      jb.table[c] *= (c >> j & 1U) ? pj : 1.0 - pj;
    }
  }

  auto deviation = [&]() {
    const TableMoments m = table_moments(jb);
    return (m.joint - target).cwiseAbs().maxCoeff();
  };

  // Margins of a pair: index (bit_j, bit_l) -> 2 * bit_j + bit_l.
  auto pair_targets = [&](int j, int l) {
    const double p11 = target(j, l);
    const double p10 = target(j, j) - p11;
    const double p01 = target(l, l) - p11;
    return std::array<double, 4>{1.0 - target(j, j) - target(l, l) + p11, p01, p10, p11};
  };

  jb.max_deviation = deviation();
  std::vector<double> best = jb.table;
  double best_deviation = jb.max_deviation;
  for (int it = 1; it <= max_iterations && jb.max_deviation >= tol; ++it) {
    for (int j = 0; j < k; ++j) {
      double current = 0.0;
      for (std::size_t c = 0; c < cells; ++c) {
        if (c >> j & 1U) current += jb.table[c];
      }
      const double pj = target(j, j);
      const double up = current > 0 ? pj / current : 0.0;
      const double down = current < 1 ? (1.0 - pj) / (1.0 - current) : 0.0;
      for (std::size_t c = 0; c < cells; ++c) jb.table[c] *= (c >> j & 1U) ? up : down;
    }
    for (int j = 0; j < k; ++j) {
      for (int l = j + 1; l < k; ++l) {
        std::array<double, 4> current{};
        for (std::size_t c = 0; c < cells; ++c) current[2 * (c >> j & 1U) + (c >> l & 1U)] += jb.table[c];
        const std::array<double, 4> want = pair_targets(j, l);
        std::array<double, 4> factor{};
        for (int q = 0; q < 4; ++q) factor[static_cast<std::size_t>(q)] = current[static_cast<std::size_t>(q)] > 0 ? want[static_cast<std::size_t>(q)] / current[static_cast<std::size_t>(q)] : 0.0;
        for (std::size_t c = 0; c < cells; ++c) jb.table[c] *= factor[2 * (c >> j & 1U) + (c >> l & 1U)];
      }
    }
    jb.iterations = it;
    jb.max_deviation = deviation();
    if (jb.max_deviation < best_deviation) {
      best_deviation = jb.max_deviation;
      best = jb.table;
    }
  }
  jb.converged = jb.max_deviation < tol;
  if (!jb.converged) {
    jb.table = best;
    jb.max_deviation = best_deviation;
    if (!allow_nonconverged) {
      throw Error(ErrorCode::NoConvergence,
                  "IPF stopped with max margin deviation " + std::to_string(best_deviation));
    }
  }
  finalize_cumulative(jb);
  return jb;
}

// ---------------------------------------------------------------------------
// Default generator
// ---------------------------------------------------------------------------

namespace {

// Binary block order.
enum Binary : Index {
  kFemale,
  kDiabetes,
  kHypotension,
  kTachycardia,
  kHighRisk,
  kShock,
  kNoRelief,
  kPreviousMI,
  kHypertension,
  kHypercholesterolemia,
  kAngina,
  kFamilyHistory,
  kStElevation,
  kBinaryCount
};

enum Continuous : Index { kHeight, kWeight, kAgeLatent };

}  // namespace

std::vector<std::pair<Index, Index>> related_binary_pairs() {
  return {
      {kDiabetes, kHypertension},     {kHypertension, kHypercholesterolemia}, {kDiabetes, kHypercholesterolemia},
      {kPreviousMI, kAngina},         {kPreviousMI, kHighRisk},               {kHighRisk, kStElevation},
      {kHypotension, kShock},         {kTachycardia, kShock},                 {kHypotension, kTachycardia},
      {kAngina, kHypercholesterolemia},
  };
}

PredictorGenModel default_generator() {
  PredictorGenModel g;
  g.continuous_mean = Vector(3);
  g.continuous_mean << 172.1, 82.9, 0.0;
  const Vector sd = (Vector(3) << 10.1, 17.7, 1.0).finished();
  Matrix corr(3, 3);
  // Height, weight, latent age.
  corr << 1.0, 0.5, -0.15,  //
      0.5, 1.0, -0.1,       //
      -0.15, -0.1, 1.0;
  g.continuous_covariance = sd.asDiagonal() * corr * sd.asDiagonal();
  g.dichotomize = {DichotomizeRule{kAgeLatent, 0.384, 0.0}};
  g.smoking_probabilities = {1.0 - 0.308 - 0.279, 0.308, 0.279};
  g.binary_marginals = {0.249, 0.143, 0.096, 0.334, 0.487, 0.015, 0.609, 0.171, 0.404, 0.405, 0.341, 0.476, 0.356};
  g.binary_correlations = Matrix::Identity(kBinaryCount, kBinaryCount);
  for (auto [a, b] : related_binary_pairs()) g.binary_correlations(a, b) = g.binary_correlations(b, a) = 0.1;

  using S = ColumnSource;
  g.columns = {
      {"age_gt_65", S::Dichotomized, 0},
      {"female", S::Binary, kFemale},
      {"diabetes", S::Binary, kDiabetes},
      {"hypotension", S::Binary, kHypotension},
      {"tachycardia", S::Binary, kTachycardia},
      {"high_risk", S::Binary, kHighRisk},
      {"shock", S::Binary, kShock},
      {"no_relief", S::Binary, kNoRelief},
      {"previous_mi", S::Binary, kPreviousMI},
      {"height", S::Continuous, kHeight},
      {"weight", S::Continuous, kWeight},
      {"hypertension", S::Binary, kHypertension},
      {"ex_smoker", S::SmokingEx, 0},
      {"current_smoker", S::SmokingCurrent, 0},
      {"hypercholesterolemia", S::Binary, kHypercholesterolemia},
      {"previous_angina", S::Binary, kAngina},
      {"family_history_mi", S::Binary, kFamilyHistory},
      {"st_elevation", S::Binary, kStElevation},
  };
  g.prepare();
  return g;
}

std::vector<std::string> PredictorGenModel::names() const {
  std::vector<std::string> out;
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

void PredictorGenModel::validate() const {
  const Index c = continuous_mean.size();
  if (continuous_covariance.rows() != c || continuous_covariance.cols() != c) {
    throw Error(ErrorCode::InvalidArgument, "continuous covariance must match the mean vector");
  }
  if ((continuous_covariance - continuous_covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "continuous covariance must be symmetric");
  }
  const double total = smoking_probabilities[0] + smoking_probabilities[1] + smoking_probabilities[2];
  if (std::abs(total - 1.0) > 1e-12 || *std::min_element(smoking_probabilities.begin(), smoking_probabilities.end()) < 0) {
    throw Error(ErrorCode::InvalidArgument, "smoking probabilities must be nonnegative and sum to 1");
  }
  for (const auto& rule : dichotomize) {
    if (!(rule.target_probability > 0 && rule.target_probability < 1) || rule.latent >= c) {
      throw Error(ErrorCode::InvalidArgument, "invalid dichotomize rule");
    }
  }
}

void PredictorGenModel::prepare() {
  validate();
  for (auto& rule : dichotomize) {
    const double sd = std::sqrt(continuous_covariance(rule.latent, rule.latent));
    const boost::math::normal_distribution<double> dist(continuous_mean[rule.latent], sd);
    rule.threshold = boost::math::quantile(dist, 1.0 - rule.target_probability);
  }
  joint = fit_joint_bernoulli(binary_marginals, binary_correlations);
}

Matrix sample_predictors(const PredictorGenModel& gen, Index n, Rng& rng) {
  const Index c = gen.continuous_mean.size();
  const Eigen::LLT<Matrix> llt(gen.continuous_covariance);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "continuous covariance is not PD");
  const Matrix chol = llt.matrixL();

  Matrix out(n, gen.width());
  Vector z(c), latent(c);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < c; ++j) z[j] = standard_normal(rng);
    latent = gen.continuous_mean + chol * z;
    const double u = uniform01(rng);
    const int smoking = u < gen.smoking_probabilities[0] ? 0 : (u < gen.smoking_probabilities[0] + gen.smoking_probabilities[1] ? 1 : 2);
    const std::uint32_t cell = gen.joint.draw(rng);
    for (Index col = 0; col < gen.width(); ++col) {
      const GeneratedColumn& spec = gen.columns[static_cast<std::size_t>(col)];
      double v = 0.0;
      switch (spec.source) {
        case ColumnSource::Continuous: v = latent[spec.index]; break;
        case ColumnSource::Dichotomized: {
          const DichotomizeRule& rule = gen.dichotomize[static_cast<std::size_t>(spec.index)];
          v = latent[rule.latent] > rule.threshold ? 1.0 : 0.0;
          break;
        }
        case ColumnSource::SmokingEx: v = smoking == 1 ? 1.0 : 0.0; break;
        case ColumnSource::SmokingCurrent: v = smoking == 2 ? 1.0 : 0.0; break;
        case ColumnSource::Binary: v = (cell >> spec.index & 1U) ? 1.0 : 0.0; break;
      }
      out(i, col) = v;
    }
  }
  return out;
}

std::vector<Index> predictor_set_columns(int predictor_set) {
  std::vector<Index> cols;
  const Index width = predictor_set == 8 ? 8 : 18;
  if (predictor_set != 8 && predictor_set != 17) {
    throw Error(ErrorCode::ConfigError, "predictor_set must be 8 or 17");
  }
  for (Index j = 0; j < width; ++j) cols.push_back(j);
  return cols;
}

CoefficientScenario default_coefficients(int predictor_set, int scenario) {
  if (predictor_set == 8 && scenario == 1) {
    return {{1.637, 0.622, 0.069, 1.218, 0.650, 0.847, 2.395, 0.263}, ScenarioLabel::Scenario1_ML};
  }
  if (predictor_set == 8 && scenario == 2) {
    return {{1.535, 0.586, 0.035, 1.145, 0.597, 0.781, 2.354, 0.221}, ScenarioLabel::Scenario2_ElasticNet};
  }
  if (predictor_set == 17 && scenario == 1) {
    return {{1.429, 0.490, 0.153, 1.192, 0.653, 0.403, 2.685, 0.233, 0.505, 0.008, -0.019, -0.165, 0.174, 0.247,
             -0.064, 0.246, -0.015, 0.583},
            ScenarioLabel::Scenario1_ML};
  }
  if (predictor_set == 17 && scenario == 2) {
    return {{1.324, 0.289, 0.0, 1.030, 0.526, 0.372, 2.455, 0.107, 0.376, 0.0, -0.014, 0.0, 0.0, 0.059, 0.0, 0.151,
             0.0, 0.430},
            ScenarioLabel::Scenario2_ElasticNet};
  }
  throw Error(ErrorCode::ConfigError, "no default coefficients for predictor_set " + std::to_string(predictor_set) +
                                          ", scenario " + std::to_string(scenario));
}

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

Index derived_n(int predictor_set, double epv, double fraction) {
  if (!(predictor_set > 0 && epv > 0 && fraction > 0)) {
    throw Error(ErrorCode::InvalidArgument, "derived_n needs positive inputs");
  }
  return static_cast<Index>(std::llround(static_cast<double>(predictor_set) * epv / fraction));
}

Index ScenarioConfig::n() const { return derived_n(predictor_set, epv, event_fraction); }

int ScenarioConfig::scenario_number() const {
  switch (coefficients.label) {
    case ScenarioLabel::Scenario1_ML: return 1;
    case ScenarioLabel::Scenario2_ElasticNet: return 2;
    case ScenarioLabel::Custom: return 0;
  }
  return 0;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::ConfigError, field + ": " + why);
  };
  constexpr std::array<double, 5> kEpv{3, 5, 10, 20, 40};
  constexpr std::array<double, 4> kFractions{0.5, 0.25, 0.125, 0.0625};
  if (std::find(kEpv.begin(), kEpv.end(), epv) == kEpv.end()) fail("epv", "must be one of 3, 5, 10, 20, 40");
  if (std::find(kFractions.begin(), kFractions.end(), event_fraction) == kFractions.end()) {
    fail("event_fraction", "must be one of 0.5, 0.25, 0.125, 0.0625");
  }
  if (predictor_set != 8 && predictor_set != 17) fail("predictor_set", "must be 8 or 17");
  const std::size_t width = predictor_set_columns(predictor_set).size();
  if (coefficients.slopes.size() != width) {
    fail("coefficients", "expected " + std::to_string(width) + " slopes");
  }
  for (double b : coefficients.slopes) {
    if (!std::isfinite(b)) fail("coefficients", "slopes must be finite");
  }
  if (n_sim < 1) fail("n_sim", "must be at least 1");
  if (B < 1) fail("B", "must be at least 1");
  if (external_n < 2) fail("external_n", "must be at least 2");
  if (calibration_n < 1000) fail("calibration_n", "must be at least 1000");
  if (!(calibration_tol > 0)) fail("calibration_tol", "must be positive");
  if (strategies.empty()) fail("strategies", "at least one strategy is required");
  if (n() < predictor_set + 1) fail("epv", "derived n is smaller than predictor_set + 1");
  for (const auto& s : strategies) {
    try {
      s.validate();
    } catch (const Error& e) {
      fail("strategies", e.what());
    }
  }
}

double calibrate_intercept(std::span<const double> slopes, const PredictorGenModel& gen, std::span<const Index> columns,
                           double target_fraction, double tol, Index sample_size, std::uint64_t seed) {
  if (!(target_fraction > 0 && target_fraction < 1)) {
    throw Error(ErrorCode::InvalidArgument, "target_fraction must lie in (0, 1)");
  }
  if (slopes.size() != columns.size()) throw Error(ErrorCode::InvalidArgument, "one slope per column required");
  Rng rng = make_stream(seed, 0, StreamPurpose::Calibration);
  const Matrix x = sample_predictors(gen, sample_size, rng);
  Vector score = Vector::Zero(sample_size);
  for (std::size_t k = 0; k < columns.size(); ++k) score += slopes[k] * x.col(columns[k]);

  auto mean_risk = [&](double b0) {
    double total = 0.0;
    for (Index i = 0; i < sample_size; ++i) total += sigmoid(b0 + score[i]);
    return total / static_cast<double>(sample_size);
  };
  double lo = -40.0, hi = 40.0;
  if (mean_risk(lo) > target_fraction || mean_risk(hi) < target_fraction) {
    throw Error(ErrorCode::NoBracket, "intercept bracket [-40, 40] does not contain the target fraction");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_risk(mid) < target_fraction ? lo : hi) = mid;
  }
  const double b0 = 0.5 * (lo + hi);
  if (std::abs(mean_risk(b0) - target_fraction) > tol) {
    throw Error(ErrorCode::NoBracket, "bisection did not reach the target fraction within tolerance");
  }
  return b0;
}

ScenarioSetup prepare_scenario(const ScenarioConfig& config) {
  config.validate();
  ScenarioSetup s;
  s.generator = default_generator();
  s.columns = predictor_set_columns(config.predictor_set);
  s.slopes = Eigen::Map<const Vector>(config.coefficients.slopes.data(),
                                      static_cast<Index>(config.coefficients.slopes.size()));
  s.intercept = calibrate_intercept(config.coefficients.slopes, s.generator, s.columns, config.event_fraction,
                                    config.calibration_tol, config.calibration_n,
                                    derive_seed(config.master_seed, 0, StreamPurpose::Calibration));
  s.n = config.n();
  return s;
}

Dataset draw_dataset(const ScenarioSetup& setup, Index n, Rng& rng) {
  const Matrix full = sample_predictors(setup.generator, n, rng);
  Matrix x(n, static_cast<Index>(setup.columns.size()));
  std::vector<std::string> names;
  const auto all_names = setup.generator.names();
  for (std::size_t k = 0; k < setup.columns.size(); ++k) {
    x.col(static_cast<Index>(k)) = full.col(setup.columns[k]);
    names.push_back(all_names[static_cast<std::size_t>(setup.columns[k])]);
  }
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const double pi = sigmoid(setup.intercept + x.row(i).dot(setup.slopes));
    y[i] = uniform01(rng) < pi ? 1.0 : 0.0;
  }
  return Dataset(std::move(y), std::move(x), std::move(names));
}

Dataset generate_dataset(const ScenarioConfig& config, const ScenarioSetup& setup, std::size_t replicate_index) {
  constexpr int kMaxAttempts = 100;
  const std::uint64_t key = derive_seed(config.master_seed, replicate_index, StreamPurpose::Derivation);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng = make_stream(key, static_cast<std::uint64_t>(attempt), StreamPurpose::Derivation);
    Dataset d = draw_dataset(setup, setup.n, rng);
    if (d.events() > 0 && d.non_events() > 0) return d;
  }
  throw Error(ErrorCode::DegenerateAfterRetries, "replicate " + std::to_string(replicate_index) +
                                                     " produced a single-class outcome 100 times");
}

// ---------------------------------------------------------------------------
// Scenario runner
// ---------------------------------------------------------------------------

std::vector<Strategy> default_strategies() {
  std::vector<Strategy> out;
  for (auto kind : {StrategyKind::ML, StrategyKind::Firth, StrategyKind::Ridge, StrategyKind::Lasso,
                    StrategyKind::ElasticNet, StrategyKind::StepwiseAIC, StrategyKind::StepwiseP}) {
    Strategy s;
    s.kind = kind;
    s.allow_separation = kind == StrategyKind::ML || kind == StrategyKind::StepwiseAIC || kind == StrategyKind::StepwiseP;
    out.push_back(s);
  }
  return out;
}

std::vector<ScenarioConfig> factorial_grid(const ScenarioConfig& base) {
  std::vector<ScenarioConfig> out;
  for (int set : {8, 17}) {
    for (int scenario : {1, 2}) {
      for (double fraction : {0.5, 0.25, 0.125, 0.0625}) {
        for (double epv : {3.0, 5.0, 10.0, 20.0, 40.0}) {
          ScenarioConfig c = base;
          c.predictor_set = set;
          c.coefficients = default_coefficients(set, scenario);
          c.event_fraction = fraction;
          c.epv = epv;
          out.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& config, unsigned threads) {
  const ScenarioSetup setup = prepare_scenario(config);
  ScenarioResult result;
  result.config = config;
  result.n = setup.n;
  result.intercept = setup.intercept;

  Rng external_rng = make_stream(config.master_seed, 0, StreamPurpose::External);
  const Dataset external = draw_dataset(setup, config.external_n, external_rng);
  if (external.events() == 0 || external.non_events() == 0) {
    throw Error(ErrorCode::DegenerateAfterRetries, "external test set has a single outcome class");
  }
  result.external_event_fraction = static_cast<double>(external.events()) / static_cast<double>(external.n());

  const std::size_t strategies = config.strategies.size();
  result.replicates.resize(config.n_sim * strategies);

  parallel_for(config.n_sim, threads, [&](std::size_t r) {
    const Dataset data = generate_dataset(config, setup, r);
    const std::uint64_t validation_seed = derive_seed(config.master_seed, r, StreamPurpose::Bootstrap);
    for (std::size_t s = 0; s < strategies; ++s) {
      ReplicateOutcome& out = result.replicates[r * strategies + s];
      out.replicate = r;
      out.strategy = s;
      const Pipeline pipeline{config.strategies[s]};
      try {
        const FittedModel model = pipeline.fit(data, derive_seed(validation_seed, 0, StreamPurpose::Pipeline));
        if (model.intercept_only()) {
          out.intercept_only = true;
          continue;
        }
        const ValidationReport rep = bootstrap_optimism(pipeline, data, config.B, validation_seed, 1, &model);
        out.estimates = {rep.theta_app, rep.harrell, rep.est_632, rep.est_632_plus};
        out.overfit_R = rep.overfit_R;
        out.weight_w = rep.weight_w;
        out.skipped_bootstrap = rep.skipped;
        out.external_c = c_statistic(linear_predictor(model, external.predictors()), external.outcomes());
      } catch (const Error& e) {
        out.failure = std::string(to_string(e.code()));
      }
    }
  });

  std::size_t all_failed = 0;
  for (std::size_t r = 0; r < config.n_sim; ++r) {
    bool any_ok = false;
    for (std::size_t s = 0; s < strategies; ++s) any_ok |= !result.replicates[r * strategies + s].failure.has_value();
    if (!any_ok) ++all_failed;
  }
  if (2 * all_failed > config.n_sim) {
    throw Error(ErrorCode::ValidationDegenerate,
                std::to_string(all_failed) + " of " + std::to_string(config.n_sim) + " replicates failed for every strategy");
  }

  for (std::size_t s = 0; s < strategies; ++s) {
    StrategySummary sum;
    sum.strategy = config.strategies[s].tag();
    double external_total = 0.0;
    std::array<double, 4> diff_sum{}, diff_sq{};
    for (std::size_t r = 0; r < config.n_sim; ++r) {
      const ReplicateOutcome& o = result.replicates[r * strategies + s];
      if (o.failure) {
        ++sum.failed;
        continue;
      }
      if (o.intercept_only) {
        ++sum.intercept_only;
        continue;
      }
      ++sum.included;
      external_total += o.external_c;
      for (std::size_t e = 0; e < 4; ++e) {
        const double d = o.estimates[e] - o.external_c;
        diff_sum[e] += d;
        diff_sq[e] += d * d;
      }
    }
    sum.ok = sum.included > 0 && 2 * sum.failed <= config.n_sim;
    const double m = static_cast<double>(sum.included);
    if (sum.included > 0) {
      sum.mean_external_c = external_total / m;
      for (std::size_t e = 0; e < 4; ++e) {
        EstimatorSummary& es = sum.estimators[e];
        es.bias = diff_sum[e] / m;
        es.rmse = std::sqrt(diff_sq[e] / m);
        double var = 0.0, mean_est = 0.0;
        for (std::size_t r = 0; r < config.n_sim; ++r) {
          const ReplicateOutcome& o = result.replicates[r * strategies + s];
          if (o.failure || o.intercept_only) continue;
          const double d = o.estimates[e] - o.external_c - es.bias;
          var += d * d;
          mean_est += o.estimates[e];
        }
        es.variance = var / m;
        es.mean = mean_est / m;
      }
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      sum.mean_external_c = nan;
      for (auto& es : sum.estimators) es = {nan, nan, nan, nan};
    }
    result.summaries.push_back(std::move(sum));
  }
  return result;
}

}  // namespace optimcorr
