// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (default: all of 1-9)
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "optimcorr/estimators.hpp"
#include "optimcorr/metrics.hpp"
#include "optimcorr/report.hpp"
#include "optimcorr/simulation.hpp"
#include "optimcorr/tuning.hpp"
#include "optimcorr/validation.hpp"
#include "../unit/oracles.hpp"

using namespace optimcorr;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

const StrategySummary& summary(const ScenarioResult& r, std::string_view tag) {
  for (const StrategySummary& s : r.summaries) {
    if (s.strategy == tag) return s;
  }
  throw std::runtime_error("strategy missing from result: " + std::string(tag));
}

const EstimatorSummary& est(const StrategySummary& s, std::string_view name) {
  for (std::size_t e = 0; e < kEstimatorNames.size(); ++e) {
    if (name == kEstimatorNames[e]) return s.estimators[e];
  }
  throw std::runtime_error("unknown estimator");
}

std::vector<Strategy> only(StrategyKind kind) {
  std::vector<Strategy> out;
  for (const Strategy& s : default_strategies()) {
    if (s.kind == kind) out.push_back(s);
  }
  return out;
}

// Scenario 2, event fraction 0.5, EPV 3, 8 predictors at desk scale.
ScenarioConfig epv3_cell() {
  ScenarioConfig c;
  c.epv = 3;
  c.event_fraction = 0.5;
  c.predictor_set = 8;
  c.coefficients = default_coefficients(8, 2);
  c.n_sim = 200;
  c.B = 200;
  c.external_n = 50000;
  c.strategies = default_strategies();
  return c;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << std::fixed << v;
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_632 = 0.0, worst_r0 = 0.0, worst_r1 = 0.0;
  double w_min = 1.0, w_max = 0.0;
  int r0_wrong = 0, r1_wrong = 0;
  for (int i = 0; i < 10000; ++i) {
    const double app = u(rng), out = u(rng);
    worst_632 = std::max(worst_632, std::abs(estimator_632(app, out) - (0.368 * app + 0.632 * out)));
    const Estimate632Plus plus = estimator_632_plus(app, out);
    w_min = std::min(w_min, plus.w);
    w_max = std::max(w_max, plus.w);

    // R = 0: apparent above the no-information value, out-of-bag at or above apparent.
    const double a0 = 0.5 + 0.5 * u(rng);
    const double hi = a0 + (1.0 - a0) * u(rng);
    const Estimate632Plus r0 = estimator_632_plus(a0, hi);
    if (r0.R != 0.0) ++r0_wrong;
    worst_r0 = std::max(worst_r0, std::abs(r0.estimate - estimator_632(a0, hi)));

    // R = 1: out-of-bag at or below the no-information value.
    const double a1 = 0.5 + 0.5 * u(rng);
    const double lo = 0.5 * u(rng);
    const Estimate632Plus r1 = estimator_632_plus(a1, lo);
    if (r1.R != 1.0 || a1 == 0.5) ++r1_wrong;
    worst_r1 = std::max(worst_r1, std::abs(r1.estimate - r1.theta_out_clamped));
  }
  const double t = seconds_since(start);
  o.require(worst_632 <= 1e-15, ".632 identity");
  o.require(w_min >= 0.632 && w_max <= 1.0, "w outside [0.632, 1]");
  o.require(r0_wrong == 0, "R != 0 with theta_out >= theta_app");
  o.require(r1_wrong == 0, "R != 1 with theta_out <= gamma");
  o.require(worst_r0 <= 1e-15, "R=0 reduction");
  o.require(worst_r1 <= 1e-15, "R=1 limit");
  o.require(t < 1.0, "runtime >= 1 s");
  o.detail << " max|.632 - formula| " << worst_632 << ", w in [" << w_min << ", " << w_max << "], R=0 err "
           << worst_r0 << ", R=1 err " << worst_r1 << ", " << fmt(t) << " s";
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(2);
  int mismatches = 0, with_ties = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 49);
    const int levels = 2 + static_cast<int>(rng() % 12);
    std::vector<double> score(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    std::set<double> distinct;
    for (int i = 0; i < n; ++i) {
      score[static_cast<std::size_t>(i)] = static_cast<double>(rng() % levels) / levels;
      y[static_cast<std::size_t>(i)] = static_cast<double>(rng() % 2);
      distinct.insert(score[static_cast<std::size_t>(i)]);
    }
    y[0] = 1.0;
    y[1] = 0.0;
    if (static_cast<int>(distinct.size()) < n) ++with_ties;
    if (c_statistic({score, y}) != oracle::c_pairs(score, y)) ++mismatches;
  }
  const double t = seconds_since(start);
  o.require(mismatches == 0, "rank-sum differs from pair enumeration");
  o.require(t < 5.0, "runtime >= 5 s");
  o.detail << " 1000 instances (" << with_ties << " with ties), " << mismatches << " mismatches, " << fmt(t) << " s";
  return o;
}

Dataset two_by_two(int a, int b, int c, int d) {
  const int n = a + b + c + d;
  Vector y(n);
  Matrix x(n, 1);
  int i = 0;
  for (auto [count, xv, yv] : {std::tuple{a, 0.0, 1.0}, {b, 0.0, 0.0}, {c, 1.0, 1.0}, {d, 1.0, 0.0}}) {
    for (int k = 0; k < count; ++k, ++i) {
      x(i, 0) = xv;
      y[i] = yv;
    }
  }
  return Dataset(y, x);
}

Outcome criterion3() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(3);

  // (a) 2x2 tables.
  double err_a = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int a = 3 + static_cast<int>(rng() % 20), b = 3 + static_cast<int>(rng() % 20);
    const int c = 3 + static_cast<int>(rng() % 20), d = 3 + static_cast<int>(rng() % 20);
    const FittedModel m = fit_ml(two_by_two(a, b, c, d));
    err_a = std::max(err_a, std::abs(m.intercept - std::log(double(a) / b)));
    err_a = std::max(err_a, std::abs(m.coefficients[0] - std::log(double(c) * b / (double(d) * a))));
  }
  o.require(err_a <= 1e-6, "(a) 2x2 closed form");

  // (b) lambda = 0.
  double err_b = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const oracle::Toy t = oracle::logistic_data(100 + 20 * rep, {0.8, -0.5, 0.3, 0.0}, -0.3, 300 + rep);
    const Dataset d(t.y, t.x);
    const FittedModel ml = fit_ml(d);
    for (double alpha : {0.0, 1.0, 0.5}) {
      const FittedModel pen = fit_penalized(d, {0.0, alpha});
      err_b = std::max(err_b, std::abs(pen.intercept - ml.intercept));
      err_b = std::max(err_b, (pen.coefficients - ml.coefficients).cwiseAbs().maxCoeff());
    }
  }
  o.require(err_b <= 1e-6, "(b) lambda=0 vs ML");

  // (c) lasso at and above lambda_max.
  double kkt = 0.0;
  bool all_zero = true;
  for (int rep = 0; rep < 10; ++rep) {
    const oracle::Toy t = oracle::logistic_data(60, {1.0, -0.5, 0.25, 0.0, 0.7}, 0.2, 400 + rep);
    const Dataset d(t.y, t.x);
    const double lambda_max = lambda_path(d, 1.0).lambda_max;
    const Eigen::MatrixXd xs = oracle::standardize(t.x);
    for (double scale : {1.0, 1.01, 3.0}) {
      const FittedModel m = fit_penalized(d, {lambda_max * scale, 1.0});
      all_zero = all_zero && m.coefficients.isZero(0.0);
      Eigen::VectorXd resid(t.y.size());
      for (Index i = 0; i < resid.size(); ++i) resid[i] = t.y[i] - sigmoid(m.intercept);
      kkt = std::max(kkt, std::abs(resid.mean()));
      for (Index j = 0; j < xs.cols(); ++j) {
        kkt = std::max(kkt, std::max(0.0, std::abs(xs.col(j).dot(resid) / 60.0) - lambda_max * scale));
      }
    }
  }
  o.require(all_zero, "(c) nonzero slopes at lambda_max");
  o.require(kkt <= 1e-6, "(c) KKT residual");

  // (d) Firth on quasi-separated data.
  int separation = 0, finite = 0;
  double err_d = 0.0;
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 10 + static_cast<int>(rng() % 31);
    Vector y(n);
    Matrix x(n, 1);
    do {
      for (int i = 0; i < n - 2; ++i) x(i, 0) = normal(rng);
      const double cut = normal(rng) * 0.5;
      x(n - 2, 0) = x(n - 1, 0) = cut;
      for (int i = 0; i < n; ++i) y[i] = x(i, 0) > cut ? 1.0 : 0.0;
      y[n - 1] = 1.0;  // the tie at the cut carries both outcomes
    } while (y.sum() < 3 || y.sum() > n - 3);
    const Dataset d(y, x);
    try {
      fit_ml(d);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Separation) ++separation;
    }
    const FittedModel m = fit_firth(d);
    if (std::isfinite(m.intercept) && m.coefficients.allFinite()) ++finite;
    Eigen::MatrixXd z(n, 2);
    z << Eigen::VectorXd::Ones(n), x;
    const Eigen::Vector2d best = oracle::grid_argmax(
        [&](const Eigen::Vector2d& b) { return oracle::firth_objective(z, y, b); }, -20.0, 20.0, 0.25, 1e-6);
    err_d = std::max(err_d, std::max(std::abs(m.intercept - best[0]), std::abs(m.coefficients[0] - best[1])));
  }
  o.require(separation == 50, "(d) ML did not raise Separation on every dataset");
  o.require(finite == 50, "(d) non-finite Firth fit");
  o.require(err_d <= 1e-3, "(d) Firth vs grid oracle");

  const double t = seconds_since(start);
  o.require(t < 60.0, "runtime >= 60 s");
  o.detail << " (a) " << err_a << " (b) " << err_b << " (c) KKT " << kkt << " (d) separation " << separation
           << "/50, finite " << finite << "/50, max|Firth - grid| " << err_d << ", " << fmt(t) << " s";
  return o;
}

Outcome criterion4() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::gamma_distribution<double> g(1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int k = 2 + rep % 7;
    std::vector<double> table(std::size_t{1} << k);
    double total = 0.0;
    for (double& v : table) total += (v = g(rng) + 1e-3);
    JointBernoulli source;
    source.k = k;
    for (double& v : table) v /= total;
    source.table = table;
    const TableMoments target = table_moments(source);
    const std::vector<double> margins(target.marginals.data(), target.marginals.data() + k);
    const JointBernoulli fitted = fit_joint_bernoulli(margins, target.correlations, 1e-10, 20000);
    const TableMoments got = table_moments(fitted);
    worst = std::max(worst, (got.marginals - target.marginals).cwiseAbs().maxCoeff());
    worst = std::max(worst, (got.joint - target.joint).cwiseAbs().maxCoeff());
    worst = std::max(worst, (got.correlations - target.correlations).cwiseAbs().maxCoeff());
  }
  o.require(worst <= 1e-6, "random configurations");

  const PredictorGenModel gen = default_generator();
  auto timed_fit = [&](const std::vector<double>& margins, const Matrix& corr, const std::string& label) {
    const auto start = Clock::now();
    const JointBernoulli jb = fit_joint_bernoulli(margins, corr, 1e-8);
    const double t = seconds_since(start);
    const TableMoments m = table_moments(jb);
    double dev = 0.0;
    for (std::size_t j = 0; j < margins.size(); ++j) {
      dev = std::max(dev, std::abs(m.marginals[static_cast<Index>(j)] - margins[j]));
      for (std::size_t l = 0; l < margins.size(); ++l) {
        const double pj = margins[j], pl = margins[l];
        const double want = j == l ? pj : pj * pl + corr(Index(j), Index(l)) * std::sqrt(pj * (1 - pj) * pl * (1 - pl));
        dev = std::max(dev, std::abs(m.joint(Index(j), Index(l)) - want));
      }
    }
    o.require(jb.converged && dev < 1e-8, label + " margin deviation");
    o.require(t < 10.0, label + " runtime");
    o.detail << " " << label << " max margin dev " << dev << " in " << fmt(t) << " s";
  };
  timed_fit(gen.binary_marginals, gen.binary_correlations, "k=" + std::to_string(gen.binary_marginals.size()));

  // The default block plus the age indicator as a fourteenth binary.
  std::vector<double> margins14 = gen.binary_marginals;
  margins14.push_back(0.384);
  const Index k = static_cast<Index>(margins14.size());
  Matrix corr14 = Matrix::Identity(k, k);
  corr14.topLeftCorner(k - 1, k - 1) = gen.binary_correlations;
  timed_fit(margins14, corr14, "k=14");
  o.detail << "; 20 random k<=8 worst moment error " << worst;
  return o;
}

std::optional<ScenarioResult> epv3_result;

const ScenarioResult& epv3() {
  if (!epv3_result) {
    const auto start = Clock::now();
    epv3_result = run_scenario(epv3_cell(), 0);
    std::cerr << "  EPV 3 cell (7 strategies, n_sim 200, B 200): " << fmt(seconds_since(start)) << " s\n";
  }
  return *epv3_result;
}

Outcome criterion5() {
  Outcome o;
  const ScenarioResult& r = epv3();
  const StrategySummary& ml = summary(r, "ml");
  const double h = est(ml, "harrell").bias, b632 = est(ml, "632").bias, plus = est(ml, "632plus").bias;
  o.require(h >= 0.015 && h <= 0.06, "ML Harrell bias outside [0.015, 0.06]");
  o.require(b632 >= 0.015 && b632 <= 0.06, "ML .632 bias outside [0.015, 0.06]");
  o.require(plus >= -0.03 && plus <= 0.0, "ML .632+ bias outside [-0.03, 0]");
  o.detail << " ML bias harrell " << fmt(h) << ", .632 " << fmt(b632) << ", .632+ " << fmt(plus) << ";";
  for (const char* tag : {"ridge", "lasso", "enet"}) {
    const StrategySummary& s = summary(r, tag);
    const auto& e = est(s, "632plus");
    const double se = std::sqrt(std::max(0.0, e.rmse * e.rmse - e.bias * e.bias) / static_cast<double>(s.included));
    o.detail << " " << tag << " .632+ " << fmt(e.bias) << " (MC se " << fmt(se) << ")";
    o.require(std::abs(e.bias) <= 0.015, std::string(tag) + " |.632+ bias| > 0.015");
  }
  o.detail << "; ML included " << ml.included << "/200";
  return o;
}

Outcome criterion6() {
  Outcome o;
  ScenarioConfig c = epv3_cell();
  c.n_sim = 400;
  c.B = 10;
  c.strategies = only(StrategyKind::Lasso);
  const auto start = Clock::now();
  const ScenarioResult r = run_scenario(c, 0);
  const StrategySummary& s = summary(r, "lasso");
  const double pct = 100.0 * static_cast<double>(s.intercept_only) / 400.0;
  o.require(std::abs(pct - 20.5) <= 5.0, "intercept-only proportion outside 20.5 +/- 5 points");
  o.detail << " lasso intercept-only " << s.intercept_only << "/400 = " << fmt(pct) << "% (failed " << s.failed
           << "), " << fmt(seconds_since(start)) << " s";
  return o;
}

Outcome criterion7() {
  Outcome o;
  const StrategySummary& kfold = summary(epv3(), "lasso");
  ScenarioConfig c = epv3_cell();
  c.strategies = only(StrategyKind::Lasso);
  c.strategies[0].tuning.leave_one_out = true;
  const auto start = Clock::now();
  const ScenarioResult loo_result = run_scenario(c, 0);
  const StrategySummary& loo = summary(loo_result, "lasso");
  const double plus = est(kfold, "632plus").rmse, h = est(kfold, "harrell").rmse, b632 = est(kfold, "632").rmse;
  const double loo_plus = est(loo, "632plus").rmse;
  o.require(plus > h, "RMSE(.632+) <= RMSE(Harrell)");
  o.require(plus > b632, "RMSE(.632+) <= RMSE(.632)");
  o.require(loo_plus < plus, "LOO did not reduce RMSE(.632+)");
  o.detail << " 10-fold RMSE .632+ " << fmt(plus) << ", harrell " << fmt(h) << ", .632 " << fmt(b632)
           << "; LOO .632+ " << fmt(loo_plus) << " (LOO run " << fmt(seconds_since(start)) << " s)";
  return o;
}

Outcome criterion8() {
  Outcome o;
  ScenarioConfig c = epv3_cell();
  c.epv = 40;
  c.event_fraction = 0.125;
  c.B = 5;
  const auto start = Clock::now();
  const ScenarioResult r = run_scenario(c, 0);
  double worst = 0.0;
  std::string worst_at;
  for (const StrategySummary& s : r.summaries) {
    for (const char* e : {"harrell", "632", "632plus"}) {
      const double b = std::abs(est(s, e).bias);
      o.require(b <= 0.01, s.strategy + " " + e + " |bias| " + fmt(b));
      if (b > worst) {
        worst = b;
        worst_at = s.strategy + " " + e;
      }
    }
  }
  o.detail << " n " << r.n << ", B " << c.B << ", max |bias| " << fmt(worst) << " (" << worst_at << "), "
           << fmt(seconds_since(start)) << " s";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(OPTIMCORR_CLI) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome criterion9() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "optimcorr_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // A derivation dataset from the EPV 3 cell as CSV.
  ScenarioConfig c = epv3_cell();
  const ScenarioSetup setup = prepare_scenario(c);
  const Dataset d = generate_dataset(c, setup, 0);
  {
    std::ofstream csv(dir / "data.csv");
    csv.precision(17);
    csv << "y";
    for (const std::string& name : d.names()) csv << "," << name;
    csv << "\n";
    for (Index i = 0; i < d.n(); ++i) {
      csv << d.outcomes()[i];
      for (Index j = 0; j < d.p(); ++j) csv << "," << d.predictors()(i, j);
      csv << "\n";
    }
  }
  std::ofstream(dir / "cell.json") << R"({"epv": 3, "event_fraction": 0.5, "predictor_set": 8, "scenario": 2,
  "n_sim": 6, "B": 8, "external_n": 5000, "seed": 11})";

  int identical = 0, runs = 0;
  auto compare = [&](const std::string& label, const std::string& args, const std::vector<std::string>& files) {
    std::map<std::string, std::string> first;
    for (const char* threads : {"1", "8"}) {
      const std::string suffix = std::string("_t") + threads;
      std::string full = args + " --threads " + threads;
      for (const std::string& f : files) full += " " + f + " " + (dir / (f.substr(2) + suffix)).string();
      const int code = run_cli(full);
      o.require(code == 0, label + " exit code " + std::to_string(code));
    }
    for (const std::string& f : files) {
      ++runs;
      const std::string a = slurp(dir / (f.substr(2) + "_t1")), b = slurp(dir / (f.substr(2) + "_t8"));
      if (!a.empty() && a == b) ++identical;
      else o.require(false, label + " " + f + " differs between 1 and 8 threads");
    }
  };
  const std::string data = (dir / "data.csv").string();
  compare("validate ml", "validate " + data + " --strategy ml --allow-separation --B 200 --seed 5 --verbose", {"--out"});
  compare("validate lasso", "validate " + data + " --strategy lasso --B 50 --seed 5", {"--out"});
  compare("simulate", "simulate " + (dir / "cell.json").string(), {"--out", "--table"});
  o.detail << " " << identical << "/" << runs << " output files byte-identical across --threads 1 and 8";
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9},
  };
  // --strict: exit 1 when any criterion fails. Otherwise only exceptions do.
  bool strict = false;
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    if (std::string_view(argv[i]) == "--strict") {
      strict = true;
    } else {
      wanted.insert(std::atoi(argv[i]));
    }
  }

  int run = 0;
  int failures = 0;
  int errors = 0;
  for (const auto& [id, check] : criteria) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    ++run;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
      ++errors;
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " " << o.detail.str() << std::endl;
  }
  std::cout << (run - failures) << "/" << run << " criteria passed" << std::endl;
  return errors > 0 || (strict && failures > 0) ? 1 : 0;
}
