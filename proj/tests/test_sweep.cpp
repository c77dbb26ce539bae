#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vrusim/rng.hpp"
#include "vrusim/sweep.hpp"

using namespace vrusim;

namespace {

std::vector<RoadUserState> random_population(std::size_t n, std::uint64_t seed) {
  CounterRng rng(mix(seed, kStreamLayout, 77));
  std::vector<RoadUserState> states(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = states[i];
    s.actor_id = static_cast<std::uint32_t>(i);
    s.pseudonym = {static_cast<std::uint32_t>(1000 + i)};
    const int kind = static_cast<int>(rng.next_uniform(0.0, 4.0));
    s.profile = static_cast<VruProfile>(kind);
    s.motion_state = kind == 0   ? MotionState::Walking
                     : kind == 1 ? MotionState::Cycling
                     : kind == 2 ? MotionState::Riding
                                 : MotionState::Driving;
    s.position_m = {rng.next_uniform(-150.0, 150.0), rng.next_uniform(-150.0, 150.0)};
    const double speed = rng.next_uniform(0.0, kind == 0 ? 2.5 : 13.0);
    const double dir = rng.next_uniform(0.0, 6.283185307179586);
    s.velocity_ms = {speed * std::cos(dir), speed * std::sin(dir)};
  }
  return states;
}

bool same_assessment(const CollisionAssessment& x, const CollisionAssessment& y) {
  return x.pair == y.pair && x.danger == y.danger && x.t_cpa_s == y.t_cpa_s &&
         x.d_min_m == y.d_min_m && x.ttc_s == y.ttc_s;
}

} // namespace

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
#ifdef _OPENMP
  omp_set_num_threads(4);
#endif
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto states = random_population(400, seed);
    for (auto min_danger : {DangerLevel::None, DangerLevel::Warning}) {
      const auto s = assess_all_serial(states, WarningPolicy{}, min_danger);
      const auto p = assess_all_parallel(states, WarningPolicy{}, min_danger);
      REQUIRE(s.size() == p.size());
      for (std::size_t i = 0; i < s.size(); ++i) REQUIRE(same_assessment(s[i], p[i]));
    }
    const auto cs = interval_collisions_serial(states, WarningPolicy{}, 1.0);
    const auto cp = interval_collisions_parallel(states, WarningPolicy{}, 1.0);
    REQUIRE(cs.size() == cp.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
      CHECK(cs[i].index_a == cp[i].index_a);
      CHECK(cs[i].index_b == cp[i].index_b);
      CHECK(cs[i].time_s == cp[i].time_s);
    }
  }
}

TEST_CASE("assess_all equals the brute-force pair loop") {
  const auto states = random_population(120, 9);
  const WarningPolicy policy;
  for (auto min_danger : {DangerLevel::None, DangerLevel::Awareness}) {
    std::vector<CollisionAssessment> brute;
    for (std::size_t i = 0; i < states.size(); ++i)
      for (std::size_t j = i + 1; j < states.size(); ++j) {
        auto a = assess_pair(states[i], states[j], policy);
        if (a.danger >= min_danger) brute.push_back(a);
      }
    std::sort(brute.begin(), brute.end(),
              [](const auto& x, const auto& y) { return x.pair < y.pair; });
    const auto got = assess_all_serial(states, policy, min_danger);
    REQUIRE(got.size() == brute.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(same_assessment(got[i], brute[i]));
  }
}

TEST_CASE("batch sweeps assess only pairs touching the batch, each once") {
  const auto states = random_population(80, 4);
  const WarningPolicy policy;
  const std::vector<std::uint32_t> batch = {3, 10, 11, 42};

  std::set<std::pair<std::uint32_t, std::uint32_t>> expected_pairs;
  for (std::uint32_t b : batch)
    for (std::uint32_t j = 0; j < states.size(); ++j) {
      if (j == b) continue;
      expected_pairs.insert({std::min(b, j), std::max(b, j)});
    }

  const auto got = assess_batch_serial(states, batch, policy, DangerLevel::None);
  CHECK(got.size() == expected_pairs.size());
  std::set<std::pair<std::uint32_t, std::uint32_t>> got_pairs;
  for (const auto& a : got) {
    // Map pseudonyms back to indices (pseudonym = 1000 + index).
    got_pairs.insert({a.pair.first.value - 1000, a.pair.second.value - 1000});
    CHECK(a.pair.first.value < a.pair.second.value);
  }
  CHECK(got_pairs == expected_pairs);

  const auto par = assess_batch_parallel(states, batch, policy, DangerLevel::None);
  REQUIRE(par.size() == got.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(same_assessment(got[i], par[i]));
}

TEST_CASE("pruned sweeps lose nothing above the danger floor") {
  const auto states = random_population(200, 12);
  const WarningPolicy policy;
  const auto all = assess_all_serial(states, policy, DangerLevel::None);
  const auto pruned = assess_all_serial(states, policy, DangerLevel::Warning);
  std::size_t expected = 0;
  for (const auto& a : all)
    if (a.danger >= DangerLevel::Warning) ++expected;
  CHECK(pruned.size() == expected);
  for (const auto& a : pruned) CHECK(a.danger >= DangerLevel::Warning);
}

TEST_CASE("interval collisions: closed form against per-pair quadratics") {
  const auto states = random_population(150, 21);
  const WarningPolicy policy;
  const double dt = 2.0;
  const auto got = interval_collisions_serial(states, policy, dt);

  std::vector<IntervalCollision> brute;
  for (std::uint32_t i = 0; i < states.size(); ++i)
    for (std::uint32_t j = i + 1; j < states.size(); ++j) {
      const double radius =
          policy.collision_radius_m(states[i].profile, states[j].profile);
      const Vec2 r0 = states[j].position_m - states[i].position_m;
      const Vec2 v = effective_velocity(states[j]) - effective_velocity(states[i]);
      if (r0.norm() < radius) {
        brute.push_back({i, j, 0.0});
        continue;
      }
      const double a = v.dot(v);
      if (a == 0.0) continue;
      const double b = 2.0 * r0.dot(v);
      const double c = r0.dot(r0) - radius * radius;
      const double disc = b * b - 4.0 * a * c;
      if (disc <= 0.0) continue; // tangency never dips strictly below
      const double t = (-b - std::sqrt(disc)) / (2.0 * a);
      if (t > 0.0 && t <= dt) brute.push_back({i, j, t});
    }
  std::sort(brute.begin(), brute.end(), [](const auto& x, const auto& y) {
    return std::tie(x.index_a, x.index_b) < std::tie(y.index_a, y.index_b);
  });
  REQUIRE(got.size() == brute.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].index_a == brute[i].index_a);
    CHECK(got[i].index_b == brute[i].index_b);
    CHECK(got[i].time_s == doctest::Approx(brute[i].time_s).epsilon(1e-12));
  }
}

TEST_CASE("interval collisions: already-overlapping pairs report time zero") {
  std::vector<RoadUserState> states(2);
  states[0].pseudonym = {1};
  states[0].position_m = {0.0, 0.0};
  states[1].pseudonym = {2};
  states[1].position_m = {0.5, 0.0};
  states[0].profile = states[1].profile = VruProfile::Pedestrian;
  const auto got = interval_collisions_serial(states, WarningPolicy{}, 1.0);
  REQUIRE(got.size() == 1);
  CHECK(got[0].time_s == 0.0);
}

TEST_CASE("thread count reports the parallel width") {
  CHECK(sweep_thread_count() >= 1);
}
