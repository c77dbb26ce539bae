#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "vrusim/vec2.hpp"

namespace vrusim {

// Rotating short-lived identity broadcast on the wire instead of a stable
// device id. Uniform over the full 32-bit range per rotation epoch.
struct PseudonymId {
  std::uint32_t value = 0;
  constexpr auto operator<=>(const PseudonymId&) const = default;
};

enum class VruProfile : std::uint8_t {
  Pedestrian = 0,
  Cyclist = 1,
  Motorcyclist = 2,
  Vehicle = 3,
  Infrastructure = 4,
};

enum class MotionState : std::uint8_t {
  Standing = 0,
  Walking = 1,
  Running = 2,
  Cycling = 3,
  Riding = 4,
  Driving = 5,
  Idle = 6,
};

// Total order: None < Awareness < Warning < Imminent.
enum class DangerLevel : std::uint8_t {
  None = 0,
  Awareness = 1,
  Warning = 2,
  Imminent = 3,
};

constexpr bool is_valid_profile(std::uint8_t v) { return v <= 4; }
constexpr bool is_valid_motion(std::uint8_t v) { return v <= 6; }
constexpr bool is_valid_danger(std::uint8_t v) { return v <= 3; }

const char* to_string(VruProfile p);
const char* to_string(MotionState m);
const char* to_string(DangerLevel d);
VruProfile profile_from_string(const std::string& s);
MotionState motion_from_string(const std::string& s);
DangerLevel danger_from_string(const std::string& s);

// Kinematic snapshot of one road user, in local planar meters. sigma_m is the
// positioning noise the snapshot was observed under (0 = ground truth).
struct RoadUserState {
  std::uint32_t actor_id = 0;
  PseudonymId pseudonym{};
  VruProfile profile = VruProfile::Pedestrian;
  MotionState motion_state = MotionState::Standing;
  Vec2 position_m{};
  Vec2 velocity_ms{};
  std::uint64_t timestamp_ms = 0;
  double sigma_m = 0.0;
};

// Standing and Idle report velocity over the air but are treated as
// stationary for prediction purposes.
constexpr Vec2 effective_velocity(const RoadUserState& s) {
  if (s.motion_state == MotionState::Standing || s.motion_state == MotionState::Idle)
    return {0.0, 0.0};
  return s.velocity_ms;
}

} // namespace vrusim
