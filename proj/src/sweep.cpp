#include "vrusim/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vrusim {
namespace {

struct Soa {
  std::vector<double> x, y, reach; // reach = effective speed * awareness horizon
  std::vector<VruProfile> profile;

  Soa(std::span<const RoadUserState> states, double horizon_s) {
    const std::size_t n = states.size();
    x.resize(n);
    y.resize(n);
    reach.resize(n);
    profile.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = states[i].position_m.x;
      y[i] = states[i].position_m.y;
      reach[i] = effective_velocity(states[i]).norm() * horizon_s;
      profile[i] = states[i].profile;
    }
  }
};

// Any pair reaching Awareness or above satisfies |r| <= reach_a + reach_b +
// radius * awareness_factor: a finite TTC within the awareness horizon bounds
// the gap by closing speed * horizon + radius, and the no-TTC awareness
// branch bounds it by closing speed * horizon + radius * factor.
bool prunable(const Soa& s, std::size_t i, std::size_t j, const WarningPolicy& policy) {
  const double dx = s.x[i] - s.x[j];
  const double dy = s.y[i] - s.y[j];
  const double radius = policy.collision_radius_m(s.profile[i], s.profile[j]);
  const double bound = s.reach[i] + s.reach[j] + radius * policy.awareness_factor;
  return dx * dx + dy * dy > bound * bound;
}

bool pair_less(const CollisionAssessment& a, const CollisionAssessment& b) {
  return a.pair < b.pair;
}

template <typename Emit>
void scan_batch_row(std::span<const RoadUserState> states, std::span<const std::uint32_t> batch,
                    const std::vector<char>& in_batch, const Soa& soa,
                    const WarningPolicy& policy, DangerLevel min_danger, std::size_t row,
                    Emit&& emit) {
  const std::uint32_t b = batch[row];
  const bool prune = min_danger > DangerLevel::None;
  for (std::uint32_t j = 0; j < states.size(); ++j) {
    if (j == b) continue;
    // Each unordered pair exactly once: when both ends sit in the batch the
    // lower index owns the pair.
    if (in_batch[j] && j < b) continue;
    if (prune && prunable(soa, b, j, policy)) continue;
    CollisionAssessment a = assess_pair(states[b], states[j], policy);
    if (a.danger >= min_danger) emit(std::move(a));
  }
}

std::vector<char> batch_mask(std::size_t n, std::span<const std::uint32_t> batch) {
  std::vector<char> mask(n, 0);
  for (auto b : batch) mask[b] = 1;
  return mask;
}

template <typename Emit>
void scan_interval_row(std::span<const RoadUserState> states, const WarningPolicy& policy,
                       double dt_s, std::size_t i, Emit&& emit) {
  for (std::size_t j = i + 1; j < states.size(); ++j) {
    const Vec2 r = states[j].position_m - states[i].position_m;
    const Vec2 v = states[j].velocity_ms - states[i].velocity_ms;
    const double radius =
        policy.collision_radius_m(states[i].profile, states[j].profile);
    const double approach =
        (states[i].velocity_ms.norm() + states[j].velocity_ms.norm()) * dt_s + radius;
    const double r2 = r.norm2();
    if (r2 > approach * approach) continue;
    if (r2 < radius * radius) {
      emit({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 0.0});
      continue;
    }
    const double v2 = v.norm2();
    if (v2 == 0.0) continue;
    const double rv = r.dot(v);
    const double disc = rv * rv - v2 * (r2 - radius * radius);
    if (disc <= 0.0) continue; // tangency never goes strictly below
    const double tc = (-rv - std::sqrt(disc)) / v2;
    const double tout = (-rv + std::sqrt(disc)) / v2;
    if (tc > dt_s || tout <= 0.0) continue;
    emit({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), std::max(tc, 0.0)});
  }
}

bool interval_less(const IntervalCollision& a, const IntervalCollision& b) {
  return std::tie(a.index_a, a.index_b) < std::tie(b.index_a, b.index_b);
}

} // namespace

std::vector<CollisionAssessment> assess_batch_serial(std::span<const RoadUserState> states,
                                                     std::span<const std::uint32_t> batch,
                                                     const WarningPolicy& policy,
                                                     DangerLevel min_danger) {
  const Soa soa(states, policy.awareness_factor * warning_threshold(policy));
  const auto mask = batch_mask(states.size(), batch);
  std::vector<CollisionAssessment> out;
  for (std::size_t row = 0; row < batch.size(); ++row)
    scan_batch_row(states, batch, mask, soa, policy, min_danger, row,
                   [&out](CollisionAssessment a) { out.push_back(std::move(a)); });
  std::sort(out.begin(), out.end(), pair_less);
  return out;
}

std::vector<CollisionAssessment> assess_batch_parallel(std::span<const RoadUserState> states,
                                                       std::span<const std::uint32_t> batch,
                                                       const WarningPolicy& policy,
                                                       DangerLevel min_danger) {
#ifndef _OPENMP
  return assess_batch_serial(states, batch, policy, min_danger);
#else
  const Soa soa(states, policy.awareness_factor * warning_threshold(policy));
  const auto mask = batch_mask(states.size(), batch);
  std::vector<std::vector<CollisionAssessment>> per_thread(omp_get_max_threads());
#pragma omp parallel
  {
    auto& local = per_thread[omp_get_thread_num()];
#pragma omp for schedule(dynamic, 64) nowait
    for (std::int64_t row = 0; row < static_cast<std::int64_t>(batch.size()); ++row)
      scan_batch_row(states, batch, mask, soa, policy, min_danger,
                     static_cast<std::size_t>(row),
                     [&local](CollisionAssessment a) { local.push_back(std::move(a)); });
  }
  std::vector<CollisionAssessment> out;
  for (auto& v : per_thread) out.insert(out.end(), std::make_move_iterator(v.begin()),
                                        std::make_move_iterator(v.end()));
  std::sort(out.begin(), out.end(), pair_less);
  return out;
#endif
}

namespace {

std::vector<std::uint32_t> all_indices(std::size_t n) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  return idx;
}

} // namespace

std::vector<CollisionAssessment> assess_all_serial(std::span<const RoadUserState> states,
                                                   const WarningPolicy& policy,
                                                   DangerLevel min_danger) {
  return assess_batch_serial(states, all_indices(states.size()), policy, min_danger);
}

std::vector<CollisionAssessment> assess_all_parallel(std::span<const RoadUserState> states,
                                                     const WarningPolicy& policy,
                                                     DangerLevel min_danger) {
  return assess_batch_parallel(states, all_indices(states.size()), policy, min_danger);
}

std::vector<IntervalCollision> interval_collisions_serial(std::span<const RoadUserState> states,
                                                          const WarningPolicy& policy,
                                                          double dt_s) {
  std::vector<IntervalCollision> out;
  for (std::size_t i = 0; i < states.size(); ++i)
    scan_interval_row(states, policy, dt_s, i,
                      [&out](IntervalCollision c) { out.push_back(c); });
  std::sort(out.begin(), out.end(), interval_less);
  return out;
}

std::vector<IntervalCollision> interval_collisions_parallel(std::span<const RoadUserState> states,
                                                            const WarningPolicy& policy,
                                                            double dt_s) {
#ifndef _OPENMP
  return interval_collisions_serial(states, policy, dt_s);
#else
  std::vector<std::vector<IntervalCollision>> per_thread(omp_get_max_threads());
#pragma omp parallel
  {
    auto& local = per_thread[omp_get_thread_num()];
#pragma omp for schedule(dynamic, 64) nowait
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(states.size()); ++i)
      scan_interval_row(states, policy, dt_s, static_cast<std::size_t>(i),
                        [&local](IntervalCollision c) { local.push_back(c); });
  }
  std::vector<IntervalCollision> out;
  for (auto& v : per_thread) out.insert(out.end(), v.begin(), v.end());
  std::sort(out.begin(), out.end(), interval_less);
  return out;
#endif
}

int sweep_thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

} // namespace vrusim
