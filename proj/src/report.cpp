#include "optimcorr/report.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>

namespace optimcorr {

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ConfigError, field + ": " + why);
}

template <class T>
T field_as(const Json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(field, "has the wrong type");
  }
}

// Non-finite doubles become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json folds_json(const CvPlan& plan) { return plan.leave_one_out ? Json("loo") : Json(plan.folds); }

void read_folds(const Json& j, CvPlan& plan, const std::string& field) {
  if (j.is_string()) {
    if (j.get<std::string>() != "loo") config_error(field, "must be an integer or \"loo\"");
    plan.leave_one_out = true;
    return;
  }
  const int k = field_as<int>(j, field);
  if (k < 2) config_error(field, "must be at least 2");
  plan.folds = k;
  plan.leave_one_out = false;
}

}  // namespace

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json to_json(const Strategy& s) {
  Json j;
  j["name"] = s.tag();
  if (s.kind == StrategyKind::ElasticNet) j["alpha"] = s.alpha;
  if (s.kind == StrategyKind::StepwiseP) j["p_threshold"] = s.p_threshold;
  if (!s.penalized() && s.kind != StrategyKind::Firth) j["allow_separation"] = s.allow_separation;
  if (s.penalized()) {
    j["folds"] = folds_json(s.tuning);
    j["stratified"] = s.tuning.stratified;
    j["path_length"] = s.tuning.path_length;
    j["path_ratio"] = s.tuning.path_ratio;
    j["early_stop"] = s.tuning.early_stop;
  }
  return j;
}

Strategy strategy_from_json(const Json& j, const Strategy& defaults) {
  Strategy s = defaults;
  if (j.is_string()) {
    try {
      s.kind = parse_strategy_kind(j.get<std::string>());
    } catch (const Error& e) {
      config_error("strategies", e.what());
    }
    return s;
  }
  if (!j.is_object() || !j.contains("name")) config_error("strategies", "each entry needs a name");
  for (const auto& [key, value] : j.items()) {
    const std::string field = "strategies." + key;
    if (key == "name") {
      try {
        s.kind = parse_strategy_kind(field_as<std::string>(value, field));
      } catch (const Error& e) {
        config_error(field, e.what());
      }
    } else if (key == "alpha") {
      s.alpha = field_as<double>(value, field);
    } else if (key == "p_threshold") {
      s.p_threshold = field_as<double>(value, field);
    } else if (key == "allow_separation") {
      s.allow_separation = field_as<bool>(value, field);
    } else if (key == "folds") {
      read_folds(value, s.tuning, field);
    } else if (key == "stratified") {
      s.tuning.stratified = field_as<bool>(value, field);
    } else if (key == "path_length") {
      s.tuning.path_length = field_as<int>(value, field);
    } else if (key == "path_ratio") {
      s.tuning.path_ratio = field_as<double>(value, field);
    } else if (key == "early_stop") {
      s.tuning.early_stop = field_as<bool>(value, field);
    } else {
      config_error(field, "unknown field");
    }
  }
  try {
    s.validate();
  } catch (const Error& e) {
    config_error("strategies", e.what());
  }
  return s;
}

Json to_json(const FittedModel& model, const std::vector<std::string>& names) {
  Json j;
  j["strategy"] = model.strategy_tag;
  j["intercept"] = model.intercept;
  Json coefs = Json::array();
  for (Index k = 0; k < model.p(); ++k) {
    Json c;
    c["name"] = static_cast<std::size_t>(k) < names.size() ? names[static_cast<std::size_t>(k)]
                                                          : "x" + std::to_string(k + 1);
    c["estimate"] = model.coefficients[k];
    c["selected"] = static_cast<bool>(model.selected[static_cast<std::size_t>(k)]);
    coefs.push_back(std::move(c));
  }
  j["coefficients"] = std::move(coefs);
  j["intercept_only"] = model.intercept_only();
  j["converged"] = model.converged;
  j["iterations"] = model.iterations;
  return j;
}

Json to_json(const ValidationReport& r, const std::vector<std::string>& names, bool verbose) {
  Json j;
  Json c;
  c["apparent"] = r.theta_app;
  c["harrell"] = r.harrell;
  c["632"] = r.est_632;
  c["632plus"] = r.est_632_plus;
  j["c_statistic"] = std::move(c);
  j["optimism"] = r.optimism;
  j["theta_out"] = r.theta_out_mean;
  j["overfit_R"] = r.overfit_R;
  j["weight_w"] = r.weight_w;
  j["gamma"] = r.gamma;
  j["B"] = r.B;
  j["seed"] = r.seed;
  Json acct;
  acct["used"] = r.B - r.skipped;
  acct["skipped"] = r.skipped;
  acct["skipped_oob_only"] = r.skipped_oob;
  std::size_t fit_failures = 0, undefined_c = 0, intercept_only = 0;
  for (const auto& rec : r.replicates) {
    if (rec.skipped_reason == "fit_failure") ++fit_failures;
    if (rec.skipped_reason == "undefined_boot_c") ++undefined_c;
    if (rec.intercept_only) ++intercept_only;
  }
  acct["fit_failure"] = fit_failures;
  acct["undefined_boot_c"] = undefined_c;
  acct["intercept_only_models"] = intercept_only;
  j["replicates_accounting"] = std::move(acct);
  j["model"] = to_json(r.model, names);
  if (verbose) {
    Json reps = Json::array();
    for (const auto& rec : r.replicates) {
      Json e;
      e["index"] = rec.index;
      e["theta_boot"] = rec.theta_boot ? Json(*rec.theta_boot) : Json(nullptr);
      e["theta_orig"] = rec.theta_orig ? Json(*rec.theta_orig) : Json(nullptr);
      e["theta_out"] = rec.theta_out ? Json(*rec.theta_out) : Json(nullptr);
      e["oob_size"] = rec.oob_size;
      e["oob_events"] = rec.oob_events;
      e["intercept_only"] = rec.intercept_only;
      e["skipped_reason"] = rec.skipped_reason ? Json(*rec.skipped_reason) : Json(nullptr);
      reps.push_back(std::move(e));
    }
    j["replicates"] = std::move(reps);
  }
  return j;
}

Json to_json(const ScenarioConfig& c) {
  Json j;
  j["epv"] = c.epv;
  j["event_fraction"] = c.event_fraction;
  j["predictor_set"] = c.predictor_set;
  const int scenario = c.scenario_number();
  j["scenario"] = scenario == 0 ? Json("custom") : Json(scenario);
  j["coefficients"] = c.coefficients.slopes;
  j["n"] = c.n();
  j["n_sim"] = c.n_sim;
  j["B"] = c.B;
  j["external_n"] = c.external_n;
  j["seed"] = c.master_seed;
  j["calibration_n"] = c.calibration_n;
  j["calibration_tol"] = c.calibration_tol;
  Json strategies = Json::array();
  for (const auto& s : c.strategies) strategies.push_back(to_json(s));
  j["strategies"] = std::move(strategies);
  return j;
}

ScenarioConfig scenario_config_from_json(const Json& j, const ScenarioConfig& defaults) {
  if (!j.is_object()) config_error("config", "must be a JSON object");
  static const std::set<std::string> known{"epv",       "event_fraction", "predictor_set", "scenario",
                                           "coefficients", "n",          "n_sim",         "B",
                                           "external_n", "seed",          "calibration_n", "calibration_tol",
                                           "strategies", "alpha",         "p_threshold",   "folds"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) config_error(key, "unknown field");
  }
  ScenarioConfig c = defaults;
  if (j.contains("epv")) c.epv = field_as<double>(j["epv"], "epv");
  if (j.contains("event_fraction")) c.event_fraction = field_as<double>(j["event_fraction"], "event_fraction");
  if (j.contains("predictor_set")) {
    c.predictor_set = field_as<int>(j["predictor_set"], "predictor_set");
    if (c.predictor_set != 8 && c.predictor_set != 17) config_error("predictor_set", "must be 8 or 17");
  }
  if (j.contains("coefficients")) {
    c.coefficients.slopes = field_as<std::vector<double>>(j["coefficients"], "coefficients");
    c.coefficients.label = ScenarioLabel::Custom;
    if (j.contains("scenario")) config_error("scenario", "cannot be combined with explicit coefficients");
  } else {
    int scenario = defaults.scenario_number();
    if (j.contains("scenario")) {
      scenario = field_as<int>(j["scenario"], "scenario");
      if (scenario != 1 && scenario != 2) config_error("scenario", "must be 1 or 2");
    }
    if (scenario == 0) {
      if (c.coefficients.slopes.size() != predictor_set_columns(c.predictor_set).size()) {
        config_error("coefficients", "custom coefficients do not match predictor_set");
      }
    } else {
      c.coefficients = default_coefficients(c.predictor_set, scenario);
    }
  }
  if (j.contains("n_sim")) c.n_sim = field_as<std::size_t>(j["n_sim"], "n_sim");
  if (j.contains("B")) c.B = field_as<std::size_t>(j["B"], "B");
  if (j.contains("external_n")) c.external_n = field_as<Index>(j["external_n"], "external_n");
  if (j.contains("seed")) c.master_seed = field_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("calibration_n")) c.calibration_n = field_as<Index>(j["calibration_n"], "calibration_n");
  if (j.contains("calibration_tol")) c.calibration_tol = field_as<double>(j["calibration_tol"], "calibration_tol");

  Strategy base;
  base.allow_separation = true;
  if (j.contains("alpha")) base.alpha = field_as<double>(j["alpha"], "alpha");
  if (j.contains("p_threshold")) base.p_threshold = field_as<double>(j["p_threshold"], "p_threshold");
  if (j.contains("folds")) read_folds(j["folds"], base.tuning, "folds");
  if (j.contains("strategies")) {
    if (!j["strategies"].is_array()) config_error("strategies", "must be an array");
    c.strategies.clear();
    for (const auto& s : j["strategies"]) c.strategies.push_back(strategy_from_json(s, base));
  } else if (c.strategies.empty() || j.contains("alpha") || j.contains("p_threshold") || j.contains("folds")) {
    if (c.strategies.empty()) c.strategies = default_strategies();
    for (auto& s : c.strategies) {
      if (j.contains("alpha")) s.alpha = base.alpha;
      if (j.contains("p_threshold")) s.p_threshold = base.p_threshold;
      if (j.contains("folds")) s.tuning = base.tuning;
    }
  }
  if (j.contains("n")) {
    const Index n = field_as<Index>(j["n"], "n");
    if (n != c.n()) config_error("n", "does not equal round(predictor_set * epv / event_fraction)");
  }
  c.validate();
  return c;
}

Json to_json(const ScenarioResult& r, bool verbose) {
  Json j;
  j["config"] = to_json(r.config);
  j["n"] = r.n;
  j["intercept"] = r.intercept;
  j["external_event_fraction"] = r.external_event_fraction;
  const double n_sim = static_cast<double>(r.config.n_sim);
  Json strategies = Json::array();
  for (const auto& s : r.summaries) {
    Json e;
    e["strategy"] = s.strategy;
    e["status"] = s.ok ? "ok" : "failed";
    e["included"] = s.included;
    e["intercept_only"] = s.intercept_only;
    e["intercept_only_proportion"] = static_cast<double>(s.intercept_only) / n_sim;
    e["failed"] = s.failed;
    e["failed_proportion"] = static_cast<double>(s.failed) / n_sim;
    e["mean_external_c"] = number(s.mean_external_c);
    Json est;
    for (std::size_t k = 0; k < kEstimatorNames.size(); ++k) {
      Json m;
      m["bias"] = number(s.estimators[k].bias);
      m["rmse"] = number(s.estimators[k].rmse);
      m["variance"] = number(s.estimators[k].variance);
      m["mean"] = number(s.estimators[k].mean);
      est[kEstimatorNames[k]] = std::move(m);
    }
    e["estimators"] = std::move(est);
    strategies.push_back(std::move(e));
  }
  j["strategies"] = std::move(strategies);
  if (verbose) {
    Json reps = Json::array();
    for (const auto& o : r.replicates) {
      Json e;
      e["replicate"] = o.replicate;
      e["strategy"] = r.config.strategies[o.strategy].tag();
      if (o.failure) {
        e["status"] = "failed";
        e["error"] = *o.failure;
      } else if (o.intercept_only) {
        e["status"] = "intercept_only";
      } else {
        e["status"] = "ok";
        for (std::size_t k = 0; k < kEstimatorNames.size(); ++k) e[kEstimatorNames[k]] = o.estimates[k];
        e["external_c"] = o.external_c;
        e["overfit_R"] = o.overfit_R;
        e["weight_w"] = o.weight_w;
        e["skipped_bootstrap"] = o.skipped_bootstrap;
      }
      reps.push_back(std::move(e));
    }
    j["replicates"] = std::move(reps);
  }
  return j;
}

void write_bias_table(std::ostream& out, const std::vector<ScenarioResult>& cells) {
  out << "epv,event_fraction,predictor_set,scenario,n,strategy,estimator,bias,rmse,variance,included,"
         "intercept_only,failed\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(10);
  for (const auto& cell : cells) {
    const int scenario = cell.config.scenario_number();
    for (const auto& s : cell.summaries) {
      for (std::size_t k = 0; k < kEstimatorNames.size(); ++k) {
        out << cell.config.epv << ',' << cell.config.event_fraction << ',' << cell.config.predictor_set << ','
            << (scenario == 0 ? std::string("custom") : std::to_string(scenario)) << ',' << cell.n << ','
            << s.strategy << ',' << kEstimatorNames[k] << ',' << s.estimators[k].bias << ',' << s.estimators[k].rmse
            << ',' << s.estimators[k].variance << ',' << s.included << ',' << s.intercept_only << ',' << s.failed
            << '\n';
      }
    }
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace optimcorr
