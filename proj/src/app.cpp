#include "optimcorr/app.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "optimcorr/metrics.hpp"
#include "optimcorr/simulation.hpp"
#include "optimcorr/validation.hpp"

namespace optimcorr {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Separation:
    case ErrorCode::SingularInformation:
    case ErrorCode::MaxIterations:
    case ErrorCode::NonConvergence:
    case ErrorCode::DegeneratePath:
      return kExitFit;
    case ErrorCode::ValidationDegenerate:
    case ErrorCode::UndefinedC:
      return kExitValidation;
    default:
      return kExitInput;
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

Dataset parse_dataset_csv(std::istream& in, const std::string& outcome_column) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!blank(line)) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw Error(ErrorCode::EmptyFile, "input has no header row");
  const std::vector<std::string> header = split_row(line);
  std::size_t outcome = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == outcome_column) outcome = c;
  }
  if (outcome == header.size()) {
    throw Error(ErrorCode::MissingColumn, "outcome column '" + outcome_column + "' not found in header");
  }

  std::vector<double> y;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::NonNumericCell, "row " + std::to_string(line_no) + " has " +
                                                 std::to_string(cells.size()) + " cells, header has " +
                                                 std::to_string(header.size()));
    }
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v)) {
        throw Error(ErrorCode::NonNumericCell, "row " + std::to_string(line_no) + ", column '" + header[c] +
                                                   "': '" + cell + "' is not a finite number");
      }
      if (c == outcome) {
        if (v != 0.0 && v != 1.0) {
          throw Error(ErrorCode::NonBinaryOutcome, "row " + std::to_string(line_no) + ", column '" + header[c] +
                                                       "': outcome must be 0 or 1, got '" + cell + "'");
        }
        y.push_back(v);
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyFile, "input has a header but no data rows");

  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(header.size() - 1);
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != outcome) names.push_back(header[c]);
  }
  return Dataset(Eigen::Map<Vector>(y.data(), n), std::move(x), std::move(names));
}

Dataset parse_dataset_csv(const std::string& path, const std::string& outcome_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  return parse_dataset_csv(in, outcome_column);
}

unsigned threads_from_environment() {
  const char* v = std::getenv("OPTIMCORR_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const unsigned long t = std::strtoul(v, &end, 10);
  if (*end != '\0' || t > 1024) return 0;
  return static_cast<unsigned>(t);
}

namespace {

void write_output(const RunConfig& config, const std::string& text) {
  if (config.output_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(config.output_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + config.output_path);
  out << text;
}

Json run_header(const RunConfig& config, std::string_view command) {
  Json j;
  j["command"] = command;
  Json c;
  c["input"] = config.input_path;
  if (config.command != Command::Simulate) {
    c["outcome"] = config.outcome_column;
    c["strategy"] = to_json(config.strategy);
    if (config.command == Command::Validate) c["B"] = config.B.value_or(kDefaultBootstrapReplicates);
  }
  c["seed"] = config.seed.value_or(kDefaultSeed);
  j["config"] = std::move(c);
  return j;
}

Json data_summary(const Dataset& d) {
  Json j;
  j["n"] = d.n();
  j["p"] = d.p();
  j["events"] = d.events();
  j["non_events"] = d.non_events();
  return j;
}

int report_error(const Error& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (e.code() == ErrorCode::Separation) {
    err << "hint: maximum likelihood does not exist for separated data; try --strategy firth\n";
  }
  return exit_code_for(e.code());
}

}  // namespace

int run_fit(const RunConfig& config, std::ostream& err) {
  try {
    config.strategy.validate();
    const Dataset data = parse_dataset_csv(config.input_path, config.outcome_column);
    const std::uint64_t seed = config.seed.value_or(kDefaultSeed);
    const FittedModel model = fit_strategy(config.strategy, data, derive_seed(seed, 0, StreamPurpose::Pipeline));
    Json j = run_header(config, "fit");
    j["data"] = data_summary(data);
    j["apparent_c"] = c_statistic(linear_predictor(model, data.predictors()), data.outcomes());
    j["model"] = to_json(model, data.names());
    write_output(config, dump(j));
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

int run_validate(const RunConfig& config, std::ostream& err) {
  try {
    config.strategy.validate();
    const std::size_t B = config.B.value_or(kDefaultBootstrapReplicates);
    if (B < 1) throw Error(ErrorCode::InvalidArgument, "--B must be at least 1");
    const Dataset data = parse_dataset_csv(config.input_path, config.outcome_column);
    const std::uint64_t seed = config.seed.value_or(kDefaultSeed);
    const ValidationReport report = bootstrap_optimism(Pipeline{config.strategy}, data, B, seed, config.threads);
    Json j = run_header(config, "validate");
    j["data"] = data_summary(data);
    const Json body = to_json(report, data.names(), config.verbose);
    for (const auto& [key, value] : body.items()) j[key] = value;
    write_output(config, dump(j));
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

int run_simulate(const RunConfig& config, std::ostream& err) {
  std::vector<ScenarioConfig> cells;
  ScenarioConfig base;
  try {
    std::ifstream in(config.input_path);
    if (!in) throw Error(ErrorCode::ConfigError, "config: cannot open " + config.input_path);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError, std::string("config: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config: must be a JSON object");
    Json cell_list;
    if (j.contains("cells")) {
      cell_list = j["cells"];
      j.erase("cells");
      if (!cell_list.is_array() || cell_list.empty()) {
        throw Error(ErrorCode::ConfigError, "cells: must be a non-empty array");
      }
    }
    if (config.B) j["B"] = *config.B;
    if (config.seed) j["seed"] = *config.seed;
    if (cell_list.is_null() || config.grid) {
      base = scenario_config_from_json(j);
    } else {
      // Top-level keys are defaults for each cell.
      Json partial = j;
      base = ScenarioConfig{};
      for (const auto& cell : cell_list) {
        Json merged = partial;
        for (const auto& [key, value] : cell.items()) merged[key] = value;
        cells.push_back(scenario_config_from_json(merged));
      }
      base = cells.front();
    }
    if (config.grid) {
      cells = factorial_grid(base);
    } else if (cells.empty()) {
      cells.push_back(base);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  err << "simulate: " << cells.size() << " cell(s); n_sim " << base.n_sim << ", B " << base.B << ", external_n "
      << base.external_n << " (desk-scale defaults 200 / 200 / 50000)\n";

  Json out;
  out["command"] = "simulate";
  out["config"] = run_header(config, "simulate")["config"];
  out["config"]["grid"] = config.grid;
  Json manifest = Json::array();
  Json results = Json::array();
  std::vector<ScenarioResult> completed;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const ScenarioConfig& cell = cells[c];
    Json entry;
    entry["cell"] = c;
    entry["epv"] = cell.epv;
    entry["event_fraction"] = cell.event_fraction;
    entry["predictor_set"] = cell.predictor_set;
    const int scenario = cell.scenario_number();
    entry["scenario"] = scenario == 0 ? Json("custom") : Json(scenario);
    entry["n"] = cell.n();
    try {
      ScenarioResult r = run_scenario(cell, config.threads);
      entry["status"] = "ok";
      Json rj = to_json(r, config.verbose);
      rj["cell"] = c;
      results.push_back(std::move(rj));
      completed.push_back(std::move(r));
    } catch (const Error& e) {
      entry["status"] = "failed";
      entry["error"] = e.what();
      Json rj;
      rj["cell"] = c;
      rj["config"] = to_json(cell);
      rj["status"] = "failed";
      rj["error"] = e.what();
      results.push_back(std::move(rj));
      err << "cell " << c << " failed: " << e.what() << "\n";
    }
    manifest.push_back(std::move(entry));
  }
  out["manifest"] = std::move(manifest);
  out["cells"] = std::move(results);
  try {
    write_output(config, dump(out));
    if (!config.table_path.empty()) {
      std::ofstream table(config.table_path, std::ios::binary);
      if (!table) throw Error(ErrorCode::InvalidArgument, "cannot write " + config.table_path);
      write_bias_table(table, completed);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return completed.empty() ? kExitValidation : kExitOk;
}

int run(const RunConfig& config, std::ostream& err) {
  switch (config.command) {
    case Command::Fit: return run_fit(config, err);
    case Command::Validate: return run_validate(config, err);
    case Command::Simulate: return run_simulate(config, err);
  }
  return kExitInput;
}

}  // namespace optimcorr
