#include "optimcorr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace optimcorr {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::ML: return "ml";
    case StrategyKind::Firth: return "firth";
    case StrategyKind::Ridge: return "ridge";
    case StrategyKind::Lasso: return "lasso";
    case StrategyKind::ElasticNet: return "enet";
    case StrategyKind::StepwiseAIC: return "step-aic";
    case StrategyKind::StepwiseBIC: return "step-bic";
    case StrategyKind::StepwiseP: return "step-p";
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  for (auto kind : {StrategyKind::ML, StrategyKind::Firth, StrategyKind::Ridge, StrategyKind::Lasso,
                    StrategyKind::ElasticNet, StrategyKind::StepwiseAIC, StrategyKind::StepwiseBIC,
                    StrategyKind::StepwiseP}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown strategy '" + std::string(name) + "'");
}

bool Strategy::penalized() const noexcept {
  return kind == StrategyKind::Ridge || kind == StrategyKind::Lasso || kind == StrategyKind::ElasticNet;
}

double Strategy::mixing() const noexcept {
  switch (kind) {
    case StrategyKind::Ridge: return 0.0;
    case StrategyKind::Lasso: return 1.0;
    default: return alpha;
  }
}

void Strategy::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  if (!(p_threshold > 0.0 && p_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "p_threshold must lie in (0, 1)");
  }
}

namespace {

constexpr double kWeightFloor = 1e-5;

double logit(double p) { return std::log(p / (1.0 - p)); }

double loglik_from_eta(const Vector& eta, const Vector& y) {
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) ll += y[i] == 1.0 ? log_sigmoid(eta[i]) : log_sigmoid(-eta[i]);
  return ll;
}

void require_both_outcomes(const Dataset& data) {
  if (data.events() == 0 || data.non_events() == 0) {
    throw Error(ErrorCode::AllSameOutcome, "outcome has no events or no non-events");
  }
}

// Standardized non-constant columns with the original-scale bookkeeping.
struct Design {
  Standardized standardized;
  std::vector<Index> active;  // original column index of each design column

  Matrix with_intercept(std::span<const Index> subset) const {
    const Matrix& xs = standardized.values;
    Matrix z(xs.rows(), static_cast<Index>(subset.size()) + 1);
    z.col(0).setOnes();
    for (std::size_t k = 0; k < subset.size(); ++k) z.col(static_cast<Index>(k) + 1) = xs.col(subset[k]);
    return z;
  }

  Matrix active_block() const {
    Matrix x(standardized.values.rows(), static_cast<Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) x.col(static_cast<Index>(k)) = standardized.values.col(active[k]);
    return x;
  }
};

Design make_design(const Dataset& data) {
  Design d{standardize(data.predictors()), {}};
  for (Index j = 0; j < data.p(); ++j) {
    if (!d.standardized.params.is_constant(j)) d.active.push_back(j);
  }
  return d;
}

// beta holds (intercept, slopes of `columns`) on the standardized scale.
FittedModel to_model(const Vector& beta, std::span<const Index> columns, const Design& design, Index p,
                     std::string tag, bool select_nonzero_only) {
  FittedModel m = FittedModel::null_model(p, beta[0], std::move(tag));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const double b = beta[static_cast<Index>(k) + 1];
    m.coefficients[columns[k]] = b;
    m.selected[static_cast<std::size_t>(columns[k])] = !select_nonzero_only || b != 0.0;
  }
  return destandardize(m, design.standardized.params);
}

struct NewtonResult {
  Vector beta;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = true;
};

bool has_extreme_probability(const Vector& eta, double eps) {
  for (Index i = 0; i < eta.size(); ++i) {
    const double pi = sigmoid(eta[i]);
    if (pi < eps || pi > 1.0 - eps) return true;
  }
  return false;
}

// Newton-Raphson with step halving for the logistic log-likelihood.
NewtonResult newton_ml(const Matrix& z, const Vector& y, const FitControls& c) {
  const Index n = z.rows();
  const Index k = z.cols();
  const double ybar = y.mean();
  Vector beta = Vector::Zero(k);
  beta[0] = logit(ybar);
  Vector eta = z * beta;
  double ll = loglik_from_eta(eta, y);
  if (k == 1) return {beta, ll, 0};

  Vector pi(n), w(n);
  for (int it = 1; it <= c.max_iterations; ++it) {
    for (Index i = 0; i < n; ++i) {
      pi[i] = sigmoid(eta[i]);
      w[i] = pi[i] * (1.0 - pi[i]);
    }
    const Vector score = z.transpose() * (y - pi);
    const Matrix info = z.transpose() * w.asDiagonal() * z;
    Eigen::LDLT<Matrix> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-13) {
      if (has_extreme_probability(eta, c.extreme_probability)) {
        if (c.keep_divergent) return {beta, ll, it, false};
        throw Error(ErrorCode::Separation, "fitted probabilities reached 0 or 1");
      }
      throw Error(ErrorCode::SingularInformation, "Fisher information is singular");
    }
    Vector delta = ldlt.solve(score);
    Vector candidate = beta + delta;
    Vector eta_new = z * candidate;
    double ll_new = loglik_from_eta(eta_new, y);
    for (int h = 0; h < 30 && !(ll_new >= ll - 1e-12 * std::max(1.0, std::abs(ll))); ++h) {
      delta *= 0.5;
      candidate = beta + delta;
      eta_new = z * candidate;
      ll_new = loglik_from_eta(eta_new, y);
    }
    beta = candidate;
    eta = eta_new;
    ll = ll_new;
    if (beta.tail(k - 1).cwiseAbs().maxCoeff() > c.separation_bound) {
      if (c.keep_divergent) return {beta, ll, it, false};
      throw Error(ErrorCode::Separation, "standardized coefficient exceeded " + std::to_string(c.separation_bound));
    }
    if (delta.cwiseAbs().maxCoeff() < c.tolerance) return {beta, ll, it};
  }
  if (has_extreme_probability(eta, c.extreme_probability)) {
    if (c.keep_divergent) return {beta, ll, c.max_iterations, false};
    throw Error(ErrorCode::Separation, "no convergence with fitted probabilities at 0 or 1");
  }
  throw Error(ErrorCode::MaxIterations, "ML iterations exhausted");
}

double log_det(const Eigen::LDLT<Matrix>& ldlt) { return ldlt.vectorD().array().log().sum(); }

// Modified-score Newton iterations for Firth's penalized likelihood.
NewtonResult newton_firth(const Matrix& z, const Vector& y, const FitControls& c) {
  const Index n = z.rows();
  const Index k = z.cols();
  constexpr double kMaxStep = 5.0;

  Vector beta = Vector::Zero(k);
  Vector pi(n), w(n);
  auto penalized = [&](const Vector& b, Eigen::LDLT<Matrix>& ldlt, Vector& eta_out) {
    eta_out = z * b;
    for (Index i = 0; i < n; ++i) {
      pi[i] = sigmoid(eta_out[i]);
      w[i] = pi[i] * (1.0 - pi[i]);
    }
    ldlt.compute(z.transpose() * w.asDiagonal() * z);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-13) {
      return -std::numeric_limits<double>::infinity();
    }
    return loglik_from_eta(eta_out, y) + 0.5 * log_det(ldlt);
  };

  Eigen::LDLT<Matrix> ldlt(k);
  Vector eta(n);
  double objective = penalized(beta, ldlt, eta);
  if (!std::isfinite(objective)) throw Error(ErrorCode::SingularInformation, "Fisher information is degenerate");

  for (int it = 1; it <= c.firth_max_iterations; ++it) {
    // pi, w and ldlt describe the current beta here.
    const Matrix solved = ldlt.solve(z.transpose());
    Vector adjusted(n);
    for (Index i = 0; i < n; ++i) {
      const double h = w[i] * z.row(i).dot(solved.col(i));
      adjusted[i] = y[i] - pi[i] + h * (0.5 - pi[i]);
    }
    const Vector score = z.transpose() * adjusted;
    Vector delta = ldlt.solve(score);
    const double largest = delta.cwiseAbs().maxCoeff();
    if (largest > kMaxStep) delta *= kMaxStep / largest;
    if (delta.cwiseAbs().maxCoeff() < c.tolerance) return {beta, loglik_from_eta(eta, y), it};

    // Armijo backtracking.
    Eigen::LDLT<Matrix> ldlt_new(k);
    Vector eta_new(n);
    Vector candidate = beta + delta;
    double obj_new = penalized(candidate, ldlt_new, eta_new);
    int halvings = 0;
    for (; halvings < 40 && !(obj_new >= objective + 1e-4 * score.dot(delta)); ++halvings) {
      delta *= 0.5;
      candidate = beta + delta;
      obj_new = penalized(candidate, ldlt_new, eta_new);
    }
    if (halvings == 40) {
      // No ascent left at working precision.
      penalized(beta, ldlt, eta);
      return {beta, loglik_from_eta(eta, y), it};
    }
    if (!std::isfinite(obj_new)) throw Error(ErrorCode::SingularInformation, "Fisher information is degenerate");
    beta = candidate;
    ldlt = ldlt_new;
    eta = eta_new;
    objective = obj_new;
    if (delta.cwiseAbs().maxCoeff() < c.tolerance) return {beta, loglik_from_eta(eta, y), it};
  }
  throw Error(ErrorCode::MaxIterations, "Firth iterations exhausted");
}

// Cyclic coordinate descent on the IRLS quadratic model of the penalized
// objective, in covariance form, with backtracking on the exact objective.
// Inner loops are written out by hand: the problems are tiny and solved
// hundreds of thousands of times inside bootstrap and CV loops.
class CoordinateDescent {
 public:
  CoordinateDescent(const Matrix& x, const Vector& y, double alpha, const FitControls& controls)
      : x_(x),
        y_(y),
        alpha_(alpha),
        c_(controls),
        n_(x.rows()),
        q_(x.cols()),
        eta_(n_),
        pi_(n_),
        eta_try_(n_),
        pi_try_(n_),
        resp_(n_),
        w_(n_),
        xw_(n_, q_),
        gram_(q_, q_),
        chol_(q_, q_),
        c_vec_(q_),
        gc_(q_),
        xm_(q_),
        g_(q_),
        b_try_(q_),
        rhs_(q_),
        sol_(q_),
        support_(static_cast<std::size_t>(q_)),
        scratch_(n_) {}

  /// Log-likelihood at (b0, b); fills the linear predictor and probabilities.
  double loglik(double b0, const Vector& b, Vector& eta, Vector& pi) {
    double* e = eta.data();
    for (Index i = 0; i < n_; ++i) e[i] = b0;
    for (Index j = 0; j < q_; ++j) {
      const double bj = b[j];
      if (bj == 0.0) continue;
      const double* xj = x_.col(j).data();
      for (Index i = 0; i < n_; ++i) e[i] += bj * xj[i];
    }
    // log sigmoid(eta) = min(eta, 0) - log(1 + exp(-|eta|))
    auto& t = scratch_;
    t = (-eta.array().abs()).exp();
    const auto ea = eta.array();
    const double ll = (y_.array() * ea.min(0.0) - (1.0 - y_.array()) * ea.max(0.0)).sum() - (1.0 + t).log().sum();
    pi.array() = (ea >= 0.0).select(1.0, t) / (1.0 + t);
    return ll;
  }

  double objective(double lambda, double loglik, const Vector& b) const {
    const double penalty = (1.0 - alpha_) * b.squaredNorm() + alpha_ * b.lpNorm<1>();
    return loglik / static_cast<double>(n_) - lambda * penalty;
  }

  /// Updates (b0, b) in place; returns the final log-likelihood.
  double solve(double lambda, double& b0, Vector& b, std::vector<double>* trace) {
    const double l1 = lambda * alpha_;
    const double l2 = 2.0 * lambda * (1.0 - alpha_);

    double ll = loglik(b0, b, eta_, pi_);
    double f_old = objective(lambda, ll, b);
    if (trace) trace->push_back(f_old);
    Vector& c = c_vec_;

    for (int it = 1; it <= c_.max_iterations; ++it) {
      const double zbar = build_quadratic();
      c = b;
      inner_solve(l1, l2, c);
      double c0 = zbar;
      for (Index j = 0; j < q_; ++j) c0 -= xm_[j] * c[j];

      // Backtrack toward the current point until the exact objective does not drop.
      double step = 1.0;
      double b0_try = c0;
      b_try_ = c;
      double ll_try = loglik(b0_try, b_try_, eta_try_, pi_try_);
      double f_try = objective(lambda, ll_try, b_try_);
      int halvings = 0;
      const double slack = 1e-13 * std::max(1.0, std::abs(f_old));
      while (!(f_try >= f_old - slack) && halvings < 40) {
        step *= 0.5;
        b0_try = b0 + step * (c0 - b0);
        b_try_ = b + step * (c - b);
        ll_try = loglik(b0_try, b_try_, eta_try_, pi_try_);
        f_try = objective(lambda, ll_try, b_try_);
        ++halvings;
      }
      if (!(f_try >= f_old - slack)) return ll;  // no ascent left at machine precision

      double change = std::abs(b0_try - b0);
      for (Index j = 0; j < q_; ++j) change = std::max(change, std::abs(b_try_[j] - b[j]));
      b0 = b0_try;
      b = b_try_;
      eta_.swap(eta_try_);
      pi_.swap(pi_try_);
      ll = ll_try;
      f_old = f_try;
      if (trace) trace->push_back(f_try);
      iterations_ = it;
      if (change < c_.tolerance) return ll;
    }
    throw Error(ErrorCode::MaxIterations, "penalized IRLS iterations exhausted");
  }

  int iterations() const noexcept { return iterations_; }

 private:
  // Weighted least-squares quadratic at the current eta/pi with the intercept
  // profiled out: gram_ = X'W X / n (centered), g_ = X'W z / n (centered).
  // Returns the weighted mean working response.
  double build_quadratic() {
    const double nd = static_cast<double>(n_);
    double sw = 0.0, swz = 0.0;
    for (Index i = 0; i < n_; ++i) {
      const double w = std::max(pi_[i] * (1.0 - pi_[i]), kWeightFloor);
      w_[i] = w;
      resp_[i] = eta_[i] + (y_[i] - pi_[i]) / w;
      sw += w;
      swz += w * resp_[i];
    }
    const double zbar = swz / sw;
    xw_.noalias() = w_.asDiagonal() * x_;
    for (Index j = 0; j < q_; ++j) {
      xm_[j] = xw_.col(j).sum() / sw;
      g_[j] = (xw_.col(j).dot(resp_) - sw * zbar * xm_[j]) / nd;
    }
    for (Index j = 0; j < q_; ++j) {
      for (Index k = 0; k <= j; ++k) {
        gram_(j, k) = gram_(k, j) = (xw_.col(j).dot(x_.col(k)) - sw * xm_[j] * xm_[k]) / nd;
      }
    }
    return zbar;
  }

  void inner_solve(double l1, double l2, Vector& c) {
    double* cc = c.data();
    double* gc = gc_.data();
    for (Index j = 0; j < q_; ++j) {
      double s = 0.0;
      for (Index k = 0; k < q_; ++k) s += gram_(j, k) * cc[k];
      gc[j] = s;
    }
    int next_exact = 1;
    for (int sweep = 0; sweep < c_.max_sweeps; ++sweep) {
      double max_change = 0.0;
      for (Index j = 0; j < q_; ++j) {
        const double* gj = gram_.col(j).data();
        const double rho = g_[j] - (gc[j] - gj[j] * cc[j]);
        const double excess = std::abs(rho) - l1;
        const double shrunk = excess > 1e-12 * l1 ? std::copysign(excess, rho) : 0.0;
        const double updated = shrunk / (gj[j] + l2);
        const double d = updated - cc[j];
        if (d != 0.0) {
          for (Index k = 0; k < q_; ++k) gc[k] += gj[k] * d;
          cc[j] = updated;
          max_change = std::max(max_change, std::abs(d));
        }
      }
      if (max_change < 1e-10) return;
      if (sweep == next_exact) {
        if (exact_on_support(l1, l2, c)) return;
        next_exact *= 2;
      }
    }
  }

  // Solves the quadratic subproblem exactly on the current support of c and
  // keeps the solution only if its signs and the KKT conditions off the
  // support agree.
  bool exact_on_support(double l1, double l2, Vector& c) {
    Index s = 0;
    for (Index j = 0; j < q_; ++j) {
      if (c[j] != 0.0) support_[static_cast<std::size_t>(s++)] = j;
    }
    auto at = [&](Index a) { return support_[static_cast<std::size_t>(a)]; };
    // Cholesky of (G + l2 I) restricted to the support, lower triangle in chol_.
    for (Index a = 0; a < s; ++a) {
      for (Index b = 0; b <= a; ++b) {
        double v = gram_(at(a), at(b)) + (a == b ? l2 : 0.0);
        for (Index k = 0; k < b; ++k) v -= chol_(a, k) * chol_(b, k);
        if (a == b) {
          if (!(v > 1e-14)) return false;
          chol_(a, a) = std::sqrt(v);
        } else {
          chol_(a, b) = v / chol_(b, b);
        }
      }
      rhs_[a] = g_[at(a)] - l1 * (c[at(a)] > 0 ? 1.0 : -1.0);
    }
    for (Index a = 0; a < s; ++a) {
      double v = rhs_[a];
      for (Index k = 0; k < a; ++k) v -= chol_(a, k) * sol_[k];
      sol_[a] = v / chol_(a, a);
    }
    for (Index a = s - 1; a >= 0; --a) {
      double v = sol_[a];
      for (Index k = a + 1; k < s; ++k) v -= chol_(k, a) * sol_[k];
      sol_[a] = v / chol_(a, a);
    }
    if (l1 > 0.0) {
      for (Index a = 0; a < s; ++a) {
        if (sol_[a] == 0.0 || (sol_[a] > 0) != (c[at(a)] > 0)) return false;
      }
    }
    // KKT off the support: |g_j - (G c)_j| <= l1.
    Index a = 0;
    for (Index j = 0; j < q_; ++j) {
      if (a < s && at(a) == j) {
        ++a;
        continue;
      }
      double v = g_[j];
      for (Index b = 0; b < s; ++b) v -= gram_(j, at(b)) * sol_[b];
      if (std::abs(v) > l1 * (1.0 + 1e-12)) return false;
    }
    for (Index j = 0; j < q_; ++j) c[j] = 0.0;
    for (Index b = 0; b < s; ++b) c[at(b)] = sol_[b];
    return true;
  }

  const Matrix& x_;
  const Vector& y_;
  double alpha_;
  FitControls c_;
  Index n_, q_;
  Vector eta_, pi_, eta_try_, pi_try_, resp_, w_;
  Matrix xw_, gram_, chol_;
  Vector c_vec_, gc_, xm_, g_, b_try_, rhs_, sol_;
  std::vector<Index> support_;
  Eigen::ArrayXd scratch_;
  int iterations_ = 0;
};

double null_loglik(const Vector& y) {
  const double n = static_cast<double>(y.size());
  const double k = y.sum();
  double ll = 0.0;
  if (k > 0) ll += k * std::log(k / n);
  if (k < n) ll += (n - k) * std::log((n - k) / n);
  return ll;
}

}  // namespace

WorkingState working_state(const Matrix& design, const Vector& beta, bool with_hat) {
  const Index n = design.rows();
  WorkingState s{beta, Vector(n), Matrix(), Vector()};
  const Vector eta = design * beta;
  for (Index i = 0; i < n; ++i) {
    const double pi = sigmoid(eta[i]);
    s.weights[i] = pi * (1.0 - pi);
  }
  s.information = design.transpose() * s.weights.asDiagonal() * design;
  if (with_hat) {
    Eigen::LDLT<Matrix> ldlt(s.information);
    const Matrix solved = ldlt.solve(design.transpose());
    s.hat_diagonal.resize(n);
    for (Index i = 0; i < n; ++i) s.hat_diagonal[i] = s.weights[i] * design.row(i).dot(solved.col(i));
  }
  return s;
}

double log_likelihood(const FittedModel& model, const Dataset& data) {
  return loglik_from_eta(linear_predictor(model, data.predictors()), data.outcomes());
}

FittedModel fit_ml(const Dataset& data, const FitControls& controls) {
  require_both_outcomes(data);
  const Design design = make_design(data);
  const Matrix z = design.with_intercept(design.active);
  const NewtonResult r = newton_ml(z, data.outcomes(), controls);
  FittedModel m = to_model(r.beta, design.active, design, data.p(), "ml", false);
  m.iterations = r.iterations;
  m.converged = r.converged;
  return m;
}

FittedModel fit_firth(const Dataset& data, const FitControls& controls) {
  if (data.n() < 2) throw Error(ErrorCode::SingularInformation, "Firth needs at least two subjects");
  const Design design = make_design(data);
  const Matrix z = design.with_intercept(design.active);
  const NewtonResult r = newton_firth(z, data.outcomes(), controls);
  FittedModel m = to_model(r.beta, design.active, design, data.p(), "firth", false);
  m.iterations = r.iterations;
  return m;
}

FittedModel fit_penalized(const Dataset& data, const PenaltySpec& penalty, const FitControls& controls,
                          std::vector<double>* objective_trace) {
  if (penalty.lambda < 0.0) throw Error(ErrorCode::InvalidArgument, "lambda must be nonnegative");
  if (!(penalty.alpha >= 0.0 && penalty.alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  require_both_outcomes(data);
  const Design design = make_design(data);
  const Matrix x = design.active_block();
  CoordinateDescent cd(x, data.outcomes(), penalty.alpha, controls);
  double b0 = logit(data.outcomes().mean());
  Vector b = Vector::Zero(x.cols());
  cd.solve(penalty.lambda, b0, b, objective_trace);
  Vector beta(x.cols() + 1);
  beta << b0, b;
  FittedModel m = to_model(beta, design.active, design, data.p(), "penalized", true);
  m.iterations = cd.iterations();
  return m;
}

PenalizedPath fit_penalized_path(const Dataset& data, double alpha, std::span<const double> lambdas, bool early_stop,
                                 const FitControls& controls) {
  require_both_outcomes(data);
  const Design design = make_design(data);
  const Matrix x = design.active_block();
  const Vector& y = data.outcomes();
  CoordinateDescent cd(x, y, alpha, controls);
  const double null_ll = null_loglik(y);

  PenalizedPath path;
  double b0 = logit(y.mean());
  Vector b = Vector::Zero(x.cols());
  Vector beta(x.cols() + 1);
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    double ll;
    try {
      ll = cd.solve(lambdas[k], b0, b, nullptr);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MaxIterations && k > 0) break;
      throw;
    }
    beta << b0, b;
    FittedModel m = to_model(beta, design.active, design, data.p(), "penalized", true);
    m.iterations = cd.iterations();
    const double ratio = null_ll < 0.0 ? 1.0 - ll / null_ll : 0.0;
    path.lambdas.push_back(lambdas[k]);
    path.models.push_back(std::move(m));
    path.deviance_ratio.push_back(ratio);
    if (early_stop && k + 1 >= 5) {
      const double previous = path.deviance_ratio[k - 1];
      if (ratio >= 0.999 || ratio - previous < 1e-5 * ratio) break;
    }
  }
  return path;
}

FittedModel backward_stepwise(const Dataset& data, const StepwiseRule& rule, const FitControls& controls) {
  require_both_outcomes(data);
  const Design design = make_design(data);
  const Vector& y = data.outcomes();
  const double log_n = std::log(static_cast<double>(data.n()));

  // Columns refer to standardized-matrix columns (original indices).
  std::vector<Index> current = design.active;
  NewtonResult fit = newton_ml(design.with_intercept(current), y, controls);

  auto criterion = [&](double ll, std::size_t params) {
    const double k = static_cast<double>(params);
    return rule.criterion == StepwiseCriterion::BIC ? -2.0 * ll + k * log_n : -2.0 * ll + 2.0 * k;
  };

  while (!current.empty()) {
    std::size_t best = current.size();
    NewtonResult best_fit;
    double best_score = 0.0;
    for (std::size_t drop = 0; drop < current.size(); ++drop) {
      std::vector<Index> reduced = current;
      reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(drop));
      NewtonResult candidate = newton_ml(design.with_intercept(reduced), y, controls);
      double score;
      if (rule.criterion == StepwiseCriterion::PValue) {
        const double lr = std::max(0.0, 2.0 * (fit.loglik - candidate.loglik));
        score = std::erfc(std::sqrt(lr / 2.0));  // chi-square(1) upper tail
        if (best == current.size() || score > best_score) {
          best = drop;
          best_score = score;
          best_fit = std::move(candidate);
        }
      } else {
        score = criterion(candidate.loglik, reduced.size() + 1);
        if (best == current.size() || score < best_score) {
          best = drop;
          best_score = score;
          best_fit = std::move(candidate);
        }
      }
    }
    const bool drop_it = rule.criterion == StepwiseCriterion::PValue
                             ? best_score > rule.p_threshold
                             : best_score < criterion(fit.loglik, current.size() + 1);
    if (!drop_it) break;
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(best));
    fit = std::move(best_fit);
  }

  std::string tag = rule.criterion == StepwiseCriterion::AIC   ? "step-aic"
                    : rule.criterion == StepwiseCriterion::BIC ? "step-bic"
                                                               : "step-p";
  FittedModel m = to_model(fit.beta, current, design, data.p(), std::move(tag), false);
  m.iterations = fit.iterations;
  m.converged = fit.converged;
  return m;
}

FittedModel fit_strategy(const Strategy& strategy, const Dataset& data, std::uint64_t seed) {
  FitControls ml_controls;
  ml_controls.keep_divergent = strategy.allow_separation;
  FittedModel m;
  switch (strategy.kind) {
    case StrategyKind::ML: m = fit_ml(data, ml_controls); break;
    case StrategyKind::Firth: m = fit_firth(data); break;
    case StrategyKind::Ridge:
    case StrategyKind::Lasso:
    case StrategyKind::ElasticNet: {
      CvPlan plan = strategy.tuning;
      plan.seed = seed;
      m = cv_select_lambda(data, strategy.mixing(), plan).model;
      break;
    }
    case StrategyKind::StepwiseAIC: m = backward_stepwise(data, {StepwiseCriterion::AIC, strategy.p_threshold}, ml_controls);
      break;
    case StrategyKind::StepwiseBIC: m = backward_stepwise(data, {StepwiseCriterion::BIC, strategy.p_threshold}, ml_controls);
      break;
    case StrategyKind::StepwiseP: m = backward_stepwise(data, {StepwiseCriterion::PValue, strategy.p_threshold}, ml_controls);
      break;
  }
  m.strategy_tag = strategy.tag();
  return m;
}

}  // namespace optimcorr
