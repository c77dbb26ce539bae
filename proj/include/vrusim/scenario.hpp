#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrusim/config.hpp"
#include "vrusim/rng.hpp"
#include "vrusim/trace.hpp"

namespace vrusim {

// Scripted ground-truth state of one actor at an absolute scenario time.
// Each segment contributes its exact closed-form displacement, so any
// sequence of step() calls lands on the same coordinates as a single
// evaluation (no accumulation drift).
RoadUserState state_at(const ActorSpec& actor, std::uint32_t actor_id, std::uint64_t t_ms);

// First-order update along the active script segment; motion state and
// velocity switch at segment boundaries. dt_s >= 0, quantized to whole
// milliseconds.
RoadUserState step(const RoadUserState& s, const ActorSpec& actor, double dt_s);

// Positioning noise: independent zero-mean per-axis normal displacement.
// Velocity and heading pass through; sigma_m records the noise level.
RoadUserState observe(const RoadUserState& s, double noise_sigma_m, CounterRng& rng);

struct GtCollision {
  std::uint32_t actor_a = 0; // actor_a < actor_b
  std::uint32_t actor_b = 0;
  double time_s = 0.0; // first instant true distance drops below the pair radius
};

// Noise-free collision oracle over the scripted world: subdivides time at
// script boundaries (velocities are constant between them) and solves each
// pair's quadratic in closed form. Sorted by time, then actor pair.
std::vector<GtCollision> detect_ground_truth_collisions(const ScenarioConfig& config);

// Canonical templates. Unknown name throws ConfigError.
ScenarioConfig builtin_scenario(const std::string& name);
const std::vector<std::string>& builtin_scenario_names();

// Discrete-event simulation: actors step per tick, publish awareness
// messages from noisy self-observations, stations assess and send warnings
// back along the configured pipeline. Ground-truth collisions are recorded
// independently of the communication path. Pure function of the config.
SimulationTrace run(const ScenarioConfig& config);

} // namespace vrusim
