#include <cmath>
#include <random>

#include <doctest.h>

#include "optimcorr/metrics.hpp"
#include "optimcorr/validation.hpp"
#include "oracles.hpp"

using namespace optimcorr;

TEST_CASE(".632 is the fixed weighted average") {
  CHECK(estimator_632(0.8, 0.7) == 0.368 * 0.8 + 0.632 * 0.7);
  CHECK(harrell_correct(0.8, 0.05) == 0.8 - 0.05);
}

TEST_CASE(".632+ limits") {
  SUBCASE("no overfitting reduces to .632") {
    const Estimate632Plus r = estimator_632_plus(0.8, 0.8);
    CHECK(r.R == 0.0);
    CHECK(r.w == 0.632);
    CHECK(r.estimate == doctest::Approx(estimator_632(0.8, 0.8)).epsilon(1e-15));
  }
  SUBCASE("out-of-bag at the no-information value gives R = 1") {
    const Estimate632Plus r = estimator_632_plus(0.85, 0.5);
    CHECK(r.R == 1.0);
    CHECK(r.w == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.estimate == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("out-of-bag below gamma is floored") {
    const Estimate632Plus r = estimator_632_plus(0.9, 0.4);
    CHECK(r.theta_out_clamped == 0.5);
    CHECK(r.estimate == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("out-of-bag above apparent clamps R to 0") {
    const Estimate632Plus r = estimator_632_plus(0.7, 0.75);
    CHECK(r.R == 0.0);
    CHECK(r.estimate == doctest::Approx(estimator_632(0.7, 0.75)).epsilon(1e-15));
  }
  SUBCASE("apparent equal to gamma") {
    const Estimate632Plus r = estimator_632_plus(0.5, 0.6);
    CHECK(r.R == 0.0);
  }
}

TEST_CASE(".632+ weight stays in range on random inputs") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double app = u(rng), out = u(rng);
    const Estimate632Plus r = estimator_632_plus(app, out);
    CHECK(r.w >= 0.632);
    CHECK(r.w <= 1.0 + 1e-15);
    CHECK(r.R >= 0.0);
    CHECK(r.R <= 1.0);
    CHECK(r.estimate == doctest::Approx((1.0 - r.w) * app + r.w * r.theta_out_clamped).epsilon(1e-15));
  }
}

namespace {

Dataset toy(int n, std::uint64_t seed) {
  const oracle::Toy t = oracle::logistic_data(n, {1.0, -0.7, 0.4}, 0.0, seed);
  return Dataset(t.y, t.x);
}

}  // namespace

TEST_CASE("bootstrap_optimism aggregates replicate records") {
  const Dataset d = toy(80, 3);
  const ValidationReport r = bootstrap_optimism(Pipeline{Strategy{}}, d, 40, 123);
  CHECK(r.B == 40);
  CHECK(r.seed == 123);
  CHECK(r.replicates.size() == 40);
  CHECK(r.theta_app == c_statistic(linear_predictor(r.model, d.predictors()), d.outcomes()));
  double opt = 0.0, out = 0.0;
  std::size_t used = 0, out_used = 0;
  for (const ReplicateRecord& rec : r.replicates) {
    if (rec.skipped_reason) continue;
    opt += *rec.theta_boot - *rec.theta_orig;
    ++used;
    if (rec.theta_out) {
      out += *rec.theta_out;
      ++out_used;
    }
    CHECK(rec.oob_size > 0);
    CHECK(rec.oob_size < 80);
  }
  CHECK(r.optimism == doctest::Approx(opt / static_cast<double>(used)).epsilon(1e-14));
  CHECK(r.theta_out_mean == doctest::Approx(out / static_cast<double>(out_used)).epsilon(1e-14));
  CHECK(r.harrell == r.theta_app - r.optimism);
  CHECK(r.est_632 == estimator_632(r.theta_app, r.theta_out_mean));
  CHECK(r.optimism > 0.0);
}

TEST_CASE("bootstrap_optimism is independent of the thread count") {
  const Dataset d = toy(60, 5);
  Strategy lasso;
  lasso.kind = StrategyKind::Lasso;
  const ValidationReport one = bootstrap_optimism(Pipeline{lasso}, d, 12, 9, 1);
  const ValidationReport four = bootstrap_optimism(Pipeline{lasso}, d, 12, 9, 4);
  CHECK(one.harrell == four.harrell);
  CHECK(one.est_632 == four.est_632);
  CHECK(one.est_632_plus == four.est_632_plus);
  for (std::size_t b = 0; b < 12; ++b) CHECK(one.replicates[b].theta_boot == four.replicates[b].theta_boot);
}

TEST_CASE("bootstrap_optimism with B = 1") {
  const Dataset d = toy(50, 8);
  const ValidationReport r = bootstrap_optimism(Pipeline{Strategy{}}, d, 1, 4);
  CHECK(r.replicates.size() == 1);
  CHECK(std::isfinite(r.est_632_plus));
}

TEST_CASE("bootstrap_optimism on separated data") {
  Matrix x(20, 1);
  Vector y(20);
  for (Index i = 0; i < 20; ++i) {
    x(i, 0) = static_cast<double>(i);
    y[i] = i >= 10 ? 1.0 : 0.0;
  }
  const Dataset d(y, x);
  try {
    bootstrap_optimism(Pipeline{Strategy{}}, d, 10, 1);
    FAIL("expected an Error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Separation);
  }
  Strategy firth;
  firth.kind = StrategyKind::Firth;
  const ValidationReport r = bootstrap_optimism(Pipeline{firth}, d, 10, 1);
  CHECK(r.theta_app == 1.0);
}

TEST_CASE("bootstrap_optimism rejects B = 0 and single-class outcomes") {
  const Dataset d = toy(30, 1);
  CHECK_THROWS_AS(bootstrap_optimism(Pipeline{Strategy{}}, d, 0, 1), Error);
  const Dataset one_class(Vector::Ones(5), Matrix::Random(5, 1));
  CHECK_THROWS_AS(bootstrap_optimism(Pipeline{Strategy{}}, one_class, 5, 1), Error);
}
