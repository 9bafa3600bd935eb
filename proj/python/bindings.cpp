#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "optimcorr/app.hpp"
#include "optimcorr/metrics.hpp"
#include "optimcorr/report.hpp"
#include "optimcorr/simulation.hpp"
#include "optimcorr/validation.hpp"

namespace py = pybind11;
using namespace optimcorr;

namespace {

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_python(const py::object& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Strategy make_strategy(const std::string& name, double alpha, double p_threshold, int folds, bool loo,
                       bool allow_separation) {
  Strategy s;
  s.kind = parse_strategy_kind(name);
  s.alpha = alpha;
  s.p_threshold = p_threshold;
  s.tuning.folds = folds;
  s.tuning.leave_one_out = loo;
  s.allow_separation = allow_separation;
  s.validate();
  return s;
}

Dataset make_dataset(const Matrix& x, const Vector& y, std::vector<std::string> names) {
  return Dataset(y, x, std::move(names));
}

}  // namespace

PYBIND11_MODULE(optimcorr, m) {
  m.doc() = "Optimism-corrected C-statistics for binary-outcome prediction models";

  py::register_exception<Error>(m, "OptimcorrError", PyExc_RuntimeError);

  m.attr("DEFAULT_SEED") = kDefaultSeed;

  m.def(
      "c_statistic", [](const Vector& scores, const Vector& outcomes) { return c_statistic(scores, outcomes); },
      py::arg("scores"), py::arg("outcomes"));

  m.def(
      "fit",
      [](const Matrix& x, const Vector& y, const std::string& strategy, double alpha, double p_threshold, int folds,
         bool loo, bool allow_separation, std::uint64_t seed, std::vector<std::string> names) {
        const Dataset data = make_dataset(x, y, std::move(names));
        const Strategy s = make_strategy(strategy, alpha, p_threshold, folds, loo, allow_separation);
        FittedModel model;
        {
          py::gil_scoped_release release;
          model = fit_strategy(s, data, derive_seed(seed, 0, StreamPurpose::Pipeline));
        }
        py::dict out = to_python(to_json(model, data.names()));
        out["apparent_c"] = c_statistic(linear_predictor(model, data.predictors()), data.outcomes());
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("strategy") = "ml", py::arg("alpha") = 0.5, py::arg("p_threshold") = 0.05,
      py::arg("folds") = 10, py::arg("loo") = false, py::arg("allow_separation") = false,
      py::arg("seed") = kDefaultSeed, py::arg("names") = std::vector<std::string>{});

  m.def(
      "validate",
      [](const Matrix& x, const Vector& y, const std::string& strategy, std::size_t B, std::uint64_t seed,
         unsigned threads, double alpha, double p_threshold, int folds, bool loo, bool allow_separation,
         bool verbose, std::vector<std::string> names) {
        const Dataset data = make_dataset(x, y, std::move(names));
        const Strategy s = make_strategy(strategy, alpha, p_threshold, folds, loo, allow_separation);
        ValidationReport report;
        {
          py::gil_scoped_release release;
          report = bootstrap_optimism(Pipeline{s}, data, B, seed, threads);
        }
        return to_python(to_json(report, data.names(), verbose));
      },
      py::arg("x"), py::arg("y"), py::arg("strategy") = "ml", py::arg("B") = kDefaultBootstrapReplicates,
      py::arg("seed") = kDefaultSeed, py::arg("threads") = 0, py::arg("alpha") = 0.5, py::arg("p_threshold") = 0.05,
      py::arg("folds") = 10, py::arg("loo") = false, py::arg("allow_separation") = false, py::arg("verbose") = false,
      py::arg("names") = std::vector<std::string>{});

  m.def(
      "simulate",
      [](const py::object& config, unsigned threads, bool verbose) {
        const ScenarioConfig cell = scenario_config_from_json(from_python(config));
        ScenarioResult result;
        {
          py::gil_scoped_release release;
          result = run_scenario(cell, threads);
        }
        return to_python(to_json(result, verbose));
      },
      py::arg("config"), py::arg("threads") = 0, py::arg("verbose") = false);

  m.def("estimator_632", &estimator_632, py::arg("theta_app"), py::arg("theta_out"));
  m.def(
      "estimator_632_plus",
      [](double theta_app, double theta_out, double gamma) {
        const Estimate632Plus r = estimator_632_plus(theta_app, theta_out, gamma);
        py::dict out;
        out["estimate"] = r.estimate;
        out["R"] = r.R;
        out["w"] = r.w;
        out["theta_out"] = r.theta_out_clamped;
        return out;
      },
      py::arg("theta_app"), py::arg("theta_out"), py::arg("gamma") = kNoInformationC);
}
