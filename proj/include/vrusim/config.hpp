#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrusim/geocast.hpp"
#include "vrusim/netsim.hpp"
#include "vrusim/risk.hpp"
#include "vrusim/types.hpp"
#include "vrusim/vec2.hpp"

namespace vrusim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One constant-velocity leg of an actor's motion script. The segment is
// active from start_ms until the next segment's start (or scenario end).
struct ActorSegment {
  std::uint64_t start_ms = 0;
  Vec2 velocity_ms{};
  MotionState motion = MotionState::Standing;
};

struct ActorSpec {
  VruProfile profile = VruProfile::Pedestrian;
  Vec2 start_position_m{};
  std::vector<ActorSegment> segments;
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  double duration_s = 10.0;
  std::uint32_t tick_ms = 100; // must divide 1000
  std::uint64_t seed = 1;
  GeoOrigin origin{};
  double noise_sigma_m = 0.0;
  PipelineMode pipeline = PipelineMode::Central;
  LatencyConfig latency{};
  WarningPolicy policy{};
  std::uint32_t cell_size_m = 100;
  std::uint32_t vam_interval_ms = 0; // 0 = every tick; else multiple of tick_ms
  bool record_states = true;
  // Epochs shorter than the run make stations briefly track an actor under
  // both its old and new pseudonym (until staleness eviction); stations
  // cannot link the two, so the overlap can grade as a coincident pair.
  std::uint32_t pseudonym_epoch_s = 300;
  double relevance_distance_m = kDefaultRelevanceDistanceM;
  std::uint32_t staleness_ms = 1500;
  // Max |velocity| per profile, indexed by VruProfile. Infrastructure is
  // fixed plant, so its cap is zero.
  std::array<double, 5> speed_caps_ms{3.0, 15.0, 50.0, 60.0, 0.0};
  std::vector<ActorSpec> actors;

  std::uint32_t effective_vam_interval_ms() const {
    return vam_interval_ms == 0 ? tick_ms : vam_interval_ms;
  }
  std::uint64_t duration_ms() const;

  // Throws ConfigError naming the offending field/actor.
  void validate() const;
};

} // namespace vrusim
