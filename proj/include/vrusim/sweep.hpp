#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vrusim/risk.hpp"

// Batch kernels over road-user populations. Each has a straightforward
// serial reference implementation and an OpenMP variant that partitions the
// outer loop across threads with per-thread result buffers; results are
// merged and sorted, so both variants return bit-identical output (every
// per-pair computation is independent, no accumulation-order effects).
// bench/sweep_bench.cpp compares their throughput.

namespace vrusim {

// Assess the unordered pairs {(b, j) : b in batch, j any state}, each pair
// once, and return assessments with danger >= min_danger sorted by pseudonym
// pair. batch holds indices into states. Pairs that provably cannot reach
// min_danger are skipped via a closing-speed bound whenever min_danger is
// above None; with min_danger == None every pair is materialized.
std::vector<CollisionAssessment> assess_batch_serial(std::span<const RoadUserState> states,
                                                     std::span<const std::uint32_t> batch,
                                                     const WarningPolicy& policy,
                                                     DangerLevel min_danger);
std::vector<CollisionAssessment> assess_batch_parallel(std::span<const RoadUserState> states,
                                                       std::span<const std::uint32_t> batch,
                                                       const WarningPolicy& policy,
                                                       DangerLevel min_danger);

// All-pairs convenience wrappers (batch = every index).
std::vector<CollisionAssessment> assess_all_serial(std::span<const RoadUserState> states,
                                                   const WarningPolicy& policy,
                                                   DangerLevel min_danger);
std::vector<CollisionAssessment> assess_all_parallel(std::span<const RoadUserState> states,
                                                     const WarningPolicy& policy,
                                                     DangerLevel min_danger);

// First strict dip of a pair's distance below its collision radius within
// (start of interval, dt_s], constant velocities over the interval. time_s is
// relative to the interval start; pairs already inside the radius at the
// interval start report time 0 (caller deduplicates across intervals).
struct IntervalCollision {
  std::uint32_t index_a = 0; // indices into states, a < b
  std::uint32_t index_b = 0;
  double time_s = 0.0;
};
std::vector<IntervalCollision> interval_collisions_serial(std::span<const RoadUserState> states,
                                                          const WarningPolicy& policy,
                                                          double dt_s);
std::vector<IntervalCollision> interval_collisions_parallel(std::span<const RoadUserState> states,
                                                            const WarningPolicy& policy,
                                                            double dt_s);

int sweep_thread_count(); // 1 without OpenMP

} // namespace vrusim
