#pragma once

#include <string>

#include "vrusim/config.hpp"

namespace vrusim {

// Strict JSON form of ScenarioConfig: unknown keys are rejected at every
// level, enums are lowercase strings, vectors are [x, y] pairs. Actor motion
// accepts either explicit constant-velocity segments or timed waypoints
// (converted to segments on load: between consecutive waypoints the velocity
// is the straight-line displacement over the time delta; after the last
// waypoint the actor holds position).
ScenarioConfig parse_scenario_json(const std::string& text);

// indent < 0 gives the compact single-line form (used in trace headers).
std::string scenario_to_json(const ScenarioConfig& config, int indent = 2);

ScenarioConfig load_scenario(const std::string& path);
void save_scenario(const ScenarioConfig& config, const std::string& path);

} // namespace vrusim
