#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>

#include "vrusim/types.hpp"

// Collision risk math over constant-velocity trajectory predictions: closest
// point of approach, time-to-collision against a pair-dependent collision
// radius, and a graded danger verdict driven by the warning-time budget.

namespace vrusim {

struct WarningPolicy {
  double reaction_s = 1.5;        // human reaction time
  double latency_budget_s = 0.3;  // communication budget folded into the lead time
  double maneuver_s = 2.0;        // time to brake / step aside
  double margin_s = 0.5;          // safety margin
  double awareness_factor = 2.0;  // awareness horizon = factor * warning threshold
  double imminent_s = 1.5;        // at or below this TTC the danger is Imminent
  std::uint32_t denm_validity_ms = 5000;

  // Collision radius per profile pair = sum of per-profile half-widths,
  // overridable per pair. Defaults give vehicle-pedestrian 1.5 m,
  // vehicle-cyclist 1.8 m, vehicle-motorcyclist 2.0 m.
  std::array<double, 5> half_width_m = {0.5, 0.8, 1.0, 1.0, 1.0};
  // 15 unordered pairs over 5 profiles; negative = use half-width sum.
  std::array<double, 15> radius_override_m = {-1, -1, -1, -1, -1, -1, -1, -1,
                                              -1, -1, -1, -1, -1, -1, -1};

  double collision_radius_m(VruProfile a, VruProfile b) const;
  void set_radius_override(VruProfile a, VruProfile b, double radius_m);
};

// reaction + latency budget + maneuver + margin; 4.3 s with the defaults.
double warning_threshold(const WarningPolicy& policy);

struct CpaResult {
  double t_cpa_s = 0.0;
  double d_min_m = 0.0;
};

// Closest approach of the two constant-velocity states (raw velocities, no
// motion-state override): r = p_b - p_a, v = v_b - v_a; if |v| = 0 the
// distance is constant, otherwise t = max(0, -(r.v)/|v|^2), d = |r + t v|.
CpaResult closest_approach(const RoadUserState& a, const RoadUserState& b);

// Smallest t >= 0 with |r + t v| = radius: the smaller nonnegative root of
// |v|^2 t^2 + 2 (r.v) t + |r|^2 - radius^2 = 0. Zero if already within the
// radius, empty if the trajectories never close to it.
std::optional<double> time_to_collision(const RoadUserState& a, const RoadUserState& b,
                                        double radius_m);

// Constant-velocity prediction p(t) = start + velocity * t for t in
// [0, horizon]; Standing and Idle force velocity to zero.
struct TrajectorySegment {
  Vec2 start{};
  Vec2 velocity{};
  double horizon_s = 0.0;
  Vec2 at(double t_s) const { return start + velocity * t_s; }
};
TrajectorySegment predict_trajectory(const RoadUserState& state, double horizon_s);

struct CollisionAssessment {
  std::pair<PseudonymId, PseudonymId> pair{}; // smaller pseudonym first
  double t_cpa_s = 0.0;
  double d_min_m = 0.0;
  std::optional<double> ttc_s;
  DangerLevel danger = DangerLevel::None;
};

// Danger grading (motion-state overrides applied before the math):
//   Imminent   TTC <= imminent_s
//   Warning    TTC <= warning_threshold
//   Awareness  TTC <= awareness_factor * warning_threshold, or no TTC but
//              d_min < radius * awareness_factor reached within that horizon
//   None       otherwise
CollisionAssessment assess_pair(const RoadUserState& a, const RoadUserState& b,
                                const WarningPolicy& policy);

// Communication requirement profile the grader checks runs against.
struct RequirementProfile {
  double range_infrastructure_m = 25.0;
  double range_pedestrian_m = 75.0;
  double range_cyclist_m = 150.0;
  double range_motorcyclist_m = 300.0;
  double positioning_sigma_max_m = 0.5;
  double latency_max_ms = 300.0;
  double latency_target_ms = 100.0;
  double max_frequency_hz = 10.0;
  std::uint32_t max_users_per_zone = 5000;
  double zone_radius_m = 300.0;
  std::size_t vam_max_bytes = 300;
  std::size_t denm_max_bytes = 1200;
};

// Required communication range by profile. Vehicles use the motorcyclist
// figure (the largest) so their subscriptions cover every VRU class.
double required_range(VruProfile profile, const RequirementProfile& req = {});

} // namespace vrusim
