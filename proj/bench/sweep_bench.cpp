#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "vrusim/rng.hpp"
#include "vrusim/sweep.hpp"

// Throughput comparison of the serial reference kernels against the OpenMP
// variants on synthetic populations. Outputs a fixed-width table; run with
// OMP_NUM_THREADS to vary the parallel side.

using namespace vrusim;

namespace {

std::vector<RoadUserState> population(std::size_t n, std::uint64_t seed) {
  CounterRng rng(mix(seed, kStreamLayout, 1));
  std::vector<RoadUserState> states(n);
  for (std::size_t i = 0; i < n; ++i) {
    RoadUserState& s = states[i];
    s.actor_id = static_cast<std::uint32_t>(i);
    s.pseudonym = {static_cast<std::uint32_t>(rng.next_u64() >> 32)};
    const int kind = static_cast<int>(rng.next_uniform(0.0, 4.0));
    s.profile = static_cast<VruProfile>(kind);
    s.motion_state = kind == 0   ? MotionState::Walking
                     : kind == 1 ? MotionState::Cycling
                     : kind == 2 ? MotionState::Riding
                                 : MotionState::Driving;
    s.position_m = {rng.next_uniform(-400.0, 400.0), rng.next_uniform(-400.0, 400.0)};
    const double speed = rng.next_uniform(0.5, kind == 0 ? 2.5 : 14.0);
    const double dir = rng.next_uniform(0.0, 6.283185307179586);
    s.velocity_ms = {speed * std::cos(dir), speed * std::sin(dir)};
  }
  return states;
}

template <typename F>
double time_ms(F&& f, int reps) {
  // One warm-up, then best-of-reps to damp scheduler noise.
  f();
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

} // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 3;
  const WarningPolicy policy{};
  std::printf("sweep kernels, %d thread(s), best of %d\n", sweep_thread_count(), reps);
  std::printf("%-22s %8s %12s %12s %8s\n", "kernel", "n", "serial_ms", "parallel_ms",
              "speedup");
  for (std::size_t n : {500, 2000, 5000}) {
    const auto states = population(n, 7);
    std::vector<std::uint32_t> batch(states.size());
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = static_cast<std::uint32_t>(i);

    volatile std::size_t sink = 0;
    const double s1 = time_ms(
        [&] { sink = sink + assess_batch_serial(states, batch, policy, DangerLevel::None).size(); },
        reps);
    const double p1 = time_ms(
        [&] {
          sink = sink + assess_batch_parallel(states, batch, policy, DangerLevel::None).size();
        },
        reps);
    std::printf("%-22s %8zu %12.2f %12.2f %7.2fx\n", "assess_batch", n, s1, p1, s1 / p1);

    const double s2 = time_ms(
        [&] { sink = sink + interval_collisions_serial(states, policy, 0.1).size(); }, reps);
    const double p2 = time_ms(
        [&] { sink = sink + interval_collisions_parallel(states, policy, 0.1).size(); }, reps);
    std::printf("%-22s %8zu %12.2f %12.2f %7.2fx\n", "interval_collisions", n, s2, p2,
                s2 / p2);
    (void)sink;
  }
  return 0;
}
