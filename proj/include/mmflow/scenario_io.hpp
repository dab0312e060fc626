#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mmflow/scenario.hpp"

namespace mmflow {

// Scenario JSON. Schema errors are SchemaError with a JSON-pointer-style
// location, e.g. "/links/3/price: expected a number".
Scenario parse_scenario(const nlohmann::json& doc);
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json scenario_to_json(const Scenario& scenario);
void save_scenario(const std::filesystem::path& path, const Scenario& scenario);

// Merges a {"solver": {...}} or bare solver object over the given settings.
void apply_solver_overrides(SolverSettings& settings, const nlohmann::json& overrides);

nlohmann::json solver_to_json(const SolverSettings& settings);

}  // namespace mmflow
