#include "vrusim/risk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vrusim {
namespace {

// Index of the unordered profile pair (a, b) into the 15-entry table.
std::size_t pair_index(VruProfile a, VruProfile b) {
  auto i = static_cast<std::size_t>(a);
  auto j = static_cast<std::size_t>(b);
  if (i > j) std::swap(i, j);
  return i * 5 - i * (i + 1) / 2 + j; // row-major upper triangle incl. diagonal
}

} // namespace

double WarningPolicy::collision_radius_m(VruProfile a, VruProfile b) const {
  const double o = radius_override_m[pair_index(a, b)];
  if (o > 0.0) return o;
  return half_width_m[static_cast<std::size_t>(a)] + half_width_m[static_cast<std::size_t>(b)];
}

void WarningPolicy::set_radius_override(VruProfile a, VruProfile b, double radius_m) {
  if (!(radius_m > 0.0)) throw std::invalid_argument("collision radius must be positive");
  radius_override_m[pair_index(a, b)] = radius_m;
}

double warning_threshold(const WarningPolicy& policy) {
  return policy.reaction_s + policy.latency_budget_s + policy.maneuver_s + policy.margin_s;
}

CpaResult closest_approach(const RoadUserState& a, const RoadUserState& b) {
  const Vec2 r = b.position_m - a.position_m;
  const Vec2 v = b.velocity_ms - a.velocity_ms;
  const double v2 = v.norm2();
  if (v2 == 0.0) return {0.0, r.norm()};
  const double t = std::max(0.0, -r.dot(v) / v2);
  return {t, (r + v * t).norm()};
}

std::optional<double> time_to_collision(const RoadUserState& a, const RoadUserState& b,
                                        double radius_m) {
  if (!(radius_m > 0.0)) throw std::invalid_argument("collision radius must be positive");
  const Vec2 r = b.position_m - a.position_m;
  const Vec2 v = b.velocity_ms - a.velocity_ms;
  const double r2 = r.norm2();
  if (r2 <= radius_m * radius_m) return 0.0; // already in contact
  const double v2 = v.norm2();
  if (v2 == 0.0) return std::nullopt;
  const double rv = r.dot(v);
  const double disc = rv * rv - v2 * (r2 - radius_m * radius_m);
  if (disc < 0.0) return std::nullopt;
  const double t = (-rv - std::sqrt(disc)) / v2;
  if (t < 0.0) return std::nullopt; // receding; both roots negative when outside
  return t;
}

TrajectorySegment predict_trajectory(const RoadUserState& state, double horizon_s) {
  if (!(horizon_s >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
  return {state.position_m, effective_velocity(state), horizon_s};
}

CollisionAssessment assess_pair(const RoadUserState& a, const RoadUserState& b,
                                const WarningPolicy& policy) {
  RoadUserState ea = a;
  RoadUserState eb = b;
  ea.velocity_ms = effective_velocity(a);
  eb.velocity_ms = effective_velocity(b);

  const double radius = policy.collision_radius_m(a.profile, b.profile);
  const double t_warn = warning_threshold(policy);
  const double horizon = policy.awareness_factor * t_warn;

  CollisionAssessment out;
  out.pair = a.pseudonym <= b.pseudonym ? std::pair{a.pseudonym, b.pseudonym}
                                        : std::pair{b.pseudonym, a.pseudonym};
  const CpaResult cpa = closest_approach(ea, eb);
  out.t_cpa_s = cpa.t_cpa_s;
  out.d_min_m = cpa.d_min_m;
  out.ttc_s = time_to_collision(ea, eb, radius);

  if (out.ttc_s) {
    const double ttc = *out.ttc_s;
    if (ttc <= policy.imminent_s) out.danger = DangerLevel::Imminent;
    else if (ttc <= t_warn) out.danger = DangerLevel::Warning;
    else if (ttc <= horizon) out.danger = DangerLevel::Awareness;
  } else if (out.d_min_m < radius * policy.awareness_factor && out.t_cpa_s <= horizon) {
    out.danger = DangerLevel::Awareness;
  }
  return out;
}

double required_range(VruProfile profile, const RequirementProfile& req) {
  switch (profile) {
    case VruProfile::Pedestrian: return req.range_pedestrian_m;
    case VruProfile::Cyclist: return req.range_cyclist_m;
    case VruProfile::Motorcyclist: return req.range_motorcyclist_m;
    case VruProfile::Vehicle: return req.range_motorcyclist_m;
    case VruProfile::Infrastructure: return req.range_infrastructure_m;
  }
  return req.range_motorcyclist_m;
}

} // namespace vrusim
