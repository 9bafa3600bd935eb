// optimcorr: fit, bootstrap-validate and simulate binary-outcome prediction models.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "optimcorr/app.hpp"

namespace {

struct Options {
  std::string input;
  std::string outcome = "y";
  std::string strategy = "ml";
  double alpha = 0.5;
  double p_threshold = 0.05;
  std::size_t B = 0;
  std::string folds = "10";
  std::uint64_t seed = 0;
  std::string threads;
  std::string out;
  std::string table;
  bool grid = false;
  bool verbose = false;
  bool allow_separation = false;
};

void add_model_options(CLI::App* cmd, Options& o) {
  cmd->add_option("input", o.input, "CSV file with a header row")->required();
  cmd->add_option("--outcome", o.outcome, "Name of the 0/1 outcome column")->capture_default_str();
  cmd->add_option("--strategy", o.strategy, "ml, firth, ridge, lasso, enet, step-aic, step-bic or step-p")
      ->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "Elastic-net mixing weight")->capture_default_str();
  cmd->add_option("--p-threshold", o.p_threshold, "Removal threshold for step-p")->capture_default_str();
  cmd->add_option("--folds", o.folds, "CV folds for penalized strategies: k or loo")->capture_default_str();
  cmd->add_flag("--allow-separation", o.allow_separation,
                "ml/step-*: keep the diverging fit instead of failing on separation");
}

void add_common_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--threads", o.threads, "Worker threads (count or auto; default OPTIMCORR_THREADS or auto)");
  cmd->add_option("--out", o.out, "Output file (default stdout)");
  cmd->add_flag("--verbose", o.verbose, "Include per-replicate detail");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimism-corrected C-statistics for binary-outcome prediction models"};
  app.require_subcommand(1);
  Options o;

  auto* fit = app.add_subcommand("fit", "Fit a model and report its apparent C-statistic");
  add_model_options(fit, o);
  add_common_options(fit, o);

  auto* validate = app.add_subcommand("validate", "Bootstrap optimism correction with full pipeline replay");
  add_model_options(validate, o);
  add_common_options(validate, o);
  validate->add_option("--B", o.B, "Bootstrap replicates (default 2000)");

  auto* simulate = app.add_subcommand("simulate", "Run simulation cells from a JSON config");
  simulate->add_option("input", o.input, "JSON scenario config")->required();
  add_common_options(simulate, o);
  simulate->add_option("--B", o.B, "Override bootstrap replicates per derivation dataset");
  simulate->add_flag("--grid", o.grid, "Expand the 5 x 4 x 2 x 2 factorial around the config");
  simulate->add_option("--table", o.table, "Write the bias/RMSE table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : optimcorr::kExitInput;
  }

  optimcorr::RunConfig config;
  config.command = fit->parsed() ? optimcorr::Command::Fit
                   : validate->parsed() ? optimcorr::Command::Validate
                                        : optimcorr::Command::Simulate;
  config.input_path = o.input;
  config.outcome_column = o.outcome;
  config.output_path = o.out;
  config.table_path = o.table;
  config.grid = o.grid;
  config.verbose = o.verbose;
  CLI::App* active = fit->parsed() ? fit : validate->parsed() ? validate : simulate;
  if (active->count("--seed") > 0) config.seed = o.seed;
  if (active->get_option_no_throw("--B") != nullptr && active->count("--B") > 0) {
    if (o.B < 1) {
      std::cerr << "error: --B must be at least 1\n";
      return optimcorr::kExitInput;
    }
    config.B = o.B;
  }

  try {
    config.strategy.kind = optimcorr::parse_strategy_kind(o.strategy);
    config.strategy.alpha = o.alpha;
    config.strategy.p_threshold = o.p_threshold;
    config.strategy.allow_separation = o.allow_separation;
    if (o.folds == "loo") {
      config.strategy.tuning.leave_one_out = true;
    } else {
      std::size_t used = 0;
      config.strategy.tuning.folds = std::stoi(o.folds, &used);
      if (used != o.folds.size() || config.strategy.tuning.folds < 2) throw std::invalid_argument("folds");
    }
  } catch (const optimcorr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return optimcorr::kExitInput;
  } catch (const std::exception&) {
    std::cerr << "error: --folds must be an integer >= 2 or 'loo'\n";
    return optimcorr::kExitInput;
  }

  if (o.threads.empty()) {
    config.threads = optimcorr::threads_from_environment();
  } else if (o.threads != "auto") {
    try {
      std::size_t used = 0;
      const int t = std::stoi(o.threads, &used);
      if (used != o.threads.size() || t < 1) throw std::invalid_argument("threads");
      config.threads = static_cast<unsigned>(t);
    } catch (const std::exception&) {
      std::cerr << "error: --threads must be a positive integer or 'auto'\n";
      return optimcorr::kExitInput;
    }
  }

  return optimcorr::run(config, std::cerr);
}
