#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "optimcorr/core.hpp"
#include "optimcorr/estimators.hpp"
#include "optimcorr/simulation.hpp"
#include "optimcorr/validation.hpp"

namespace optimcorr {

using Json = nlohmann::ordered_json;

Json to_json(const Strategy& strategy);
/// Reads {"name", "alpha", "p_threshold", "folds", ...}; a bare string is a name.
/// Missing fields take the values in `defaults`.
Strategy strategy_from_json(const Json& j, const Strategy& defaults = {});

Json to_json(const FittedModel& model, const std::vector<std::string>& names);

/// Estimates first (apparent, harrell, 632, 632plus), then the pieces they are
/// built from and replicate accounting; per-replicate records only if verbose.
Json to_json(const ValidationReport& report, const std::vector<std::string>& names, bool verbose);

Json to_json(const ScenarioConfig& config);
/// Unknown or invalid fields raise Error(ConfigError) naming the field.
ScenarioConfig scenario_config_from_json(const Json& j, const ScenarioConfig& defaults = {});

Json to_json(const ScenarioResult& result, bool verbose);

/// One row per (cell, strategy, estimator) with bias, RMSE and variance.
void write_bias_table(std::ostream& out, const std::vector<ScenarioResult>& cells);

/// Two-space indented JSON followed by a newline.
std::string dump(const Json& j);

}  // namespace optimcorr
