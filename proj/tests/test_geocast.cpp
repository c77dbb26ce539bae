#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "vrusim/geocast.hpp"
#include "vrusim/risk.hpp"
#include "vrusim/rng.hpp"

using namespace vrusim;

namespace {

RoadUserState user_at(std::uint32_t pseud, Vec2 pos, Vec2 vel,
                      MotionState motion = MotionState::Walking) {
  RoadUserState s;
  s.pseudonym = {pseud};
  s.position_m = pos;
  s.velocity_ms = vel;
  s.motion_state = motion;
  return s;
}

} // namespace

TEST_CASE("projection matches the spherical arc length near the origin") {
  const GeoOrigin origin{-27.4698, 153.0251};
  // One degree of latitude on the reference sphere: 2*pi*R / 360.
  const double meridian_deg = 2.0 * 3.14159265358979323846 * kEarthRadiusM / 360.0;
  const Vec2 north = project_to_local(origin.lat_deg + 1.0, origin.lon_deg, origin);
  CHECK(north.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(north.y == doctest::Approx(meridian_deg).epsilon(1e-9));
  CHECK(north.y == doctest::Approx(111194.93).epsilon(1e-7));

  const Vec2 small = project_to_local(origin.lat_deg + 0.001, origin.lon_deg, origin);
  CHECK(small.y == doctest::Approx(111.19).epsilon(1e-4));

  // Longitude arcs shrink with cos(latitude).
  const Vec2 east = project_to_local(origin.lat_deg, origin.lon_deg + 1.0, origin);
  CHECK(east.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(east.x ==
        doctest::Approx(meridian_deg * std::cos(origin.lat_deg * 3.14159265358979323846 /
                                                180.0))
            .epsilon(1e-9));

  CHECK_THROWS(project_to_local(-27.4698, 154.2, origin)); // > 1 degree away
  CHECK_THROWS(project_to_local(86.0, 0.0, GeoOrigin{86.0, 0.0}));
}

TEST_CASE("grid cells partition the plane with half-open edges") {
  CHECK(cell_of({0.0, 0.0}, 100) == GridCell{0, 0, 100});
  CHECK(cell_of({99.99, 0.0}, 100) == GridCell{0, 0, 100});
  CHECK(cell_of({100.0, 0.0}, 100) == GridCell{1, 0, 100});
  CHECK(cell_of({-0.01, 99.99}, 100) == GridCell{-1, 0, 100});
  CHECK(cell_of({-50.0, -50.0}, 50) == GridCell{-1, -1, 50});

  CounterRng rng(mix(11, 22));
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p{rng.next_uniform(-5000.0, 5000.0), rng.next_uniform(-5000.0, 5000.0)};
    const std::uint32_t size = i % 2 ? 100u : 37u;
    const GridCell c = cell_of(p, size);
    CHECK(static_cast<double>(c.ix) * size <= p.x);
    CHECK(p.x < static_cast<double>(c.ix + 1) * size);
    CHECK(static_cast<double>(c.iy) * size <= p.y);
    CHECK(p.y < static_cast<double>(c.iy + 1) * size);
  }
}

TEST_CASE("topics are canonical and reversible") {
  const GridCell c{-3, 17, 100};
  CHECK(topic_of(c) == "geo/100/-3/17");
  CHECK(parse_topic(topic_of(c)) == c);
  CHECK_THROWS(parse_topic("geo/100/-3"));
  CHECK_THROWS(parse_topic("geo/0/1/2"));
  CHECK_THROWS(parse_topic("pos/100/1/2"));
  CHECK_THROWS(parse_topic("geo/100/a/2"));
}

TEST_CASE("subscription rings cover the required range from any in-cell position") {
  CHECK(ring_for_range(75.0, 100) == 1);
  CHECK(ring_for_range(100.0, 100) == 1);
  CHECK(ring_for_range(150.0, 100) == 2);
  CHECK(ring_for_range(300.0, 100) == 3);
  CHECK(ring_for_range(25.0, 100) == 1);

  CounterRng rng(mix(3, 14));
  const RequirementProfile req;
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint32_t cell_size = trial % 2 ? 100u : 50u;
    const Vec2 center{rng.next_uniform(-1000.0, 1000.0), rng.next_uniform(-1000.0, 1000.0)};
    const auto profile = static_cast<VruProfile>(trial % 5);
    const double range = required_range(profile, req);
    const std::uint32_t ring = ring_for_range(range, cell_size);
    std::vector<GridCell> cells = subscription_cells(center, cell_size, ring);
    CHECK(cells.size() == (2 * ring + 1) * (2 * ring + 1));
    std::sort(cells.begin(), cells.end());
    for (int k = 0; k < 50; ++k) {
      const double ang = rng.next_uniform(0.0, 6.283185307179586);
      const double r = range * std::sqrt(rng.next_unit());
      const Vec2 p{center.x + r * std::cos(ang), center.y + r * std::sin(ang)};
      const GridCell pc = cell_of(p, cell_size);
      CHECK(std::binary_search(cells.begin(), cells.end(), pc));
    }
  }
}

TEST_CASE("relevance filter matches a fine-sampled trajectory oracle") {
  CounterRng rng(mix(8, 15));
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 event{rng.next_uniform(-50.0, 50.0), rng.next_uniform(-50.0, 50.0)};
    const double horizon = rng.next_uniform(1.0, 10.0);
    const double dist = rng.next_uniform(5.0, 40.0);
    std::vector<RoadUserState> users;
    for (std::uint32_t u = 0; u < 20; ++u)
      users.push_back(user_at(u + 10,
                              {rng.next_uniform(-150.0, 150.0), rng.next_uniform(-150.0, 150.0)},
                              {rng.next_uniform(-15.0, 15.0), rng.next_uniform(-15.0, 15.0)}));
    const auto picked = relevance_filter(event, horizon, users, dist);
    CHECK(std::is_sorted(picked.begin(), picked.end()));
    for (const auto& u : users) {
      bool oracle = false;
      for (double t = 0.0; t <= horizon && !oracle; t += 0.001)
        if ((u.position_m + u.velocity_ms * t - event).norm() <= dist) oracle = true;
      const bool in =
          std::binary_search(picked.begin(), picked.end(), u.pseudonym);
      if (oracle) CHECK(in); // sampled hit must be analytically included
      if (!in) CHECK_FALSE(oracle);
    }
  }
}

TEST_CASE("relevance filter honors motion-state overrides") {
  // A Standing user reporting residual velocity must be treated as fixed.
  auto u = user_at(5, {100.0, 0.0}, {-20.0, 0.0}, MotionState::Standing);
  CHECK(relevance_filter({0.0, 0.0}, 10.0, std::span{&u, 1}, 25.0).empty());
  u.motion_state = MotionState::Walking;
  CHECK(relevance_filter({0.0, 0.0}, 10.0, std::span{&u, 1}, 25.0).size() == 1);
}

TEST_CASE("circular zones are boundary-inclusive and sorted") {
  std::vector<RoadUserState> users = {
      user_at(3, {10.0, 0.0}, {}),
      user_at(1, {0.0, 25.0}, {}),
      user_at(2, {0.0, 25.001}, {}),
  };
  const auto picked = circular_zone_recipients({0.0, 0.0}, 25.0, users);
  REQUIRE(picked.size() == 2);
  CHECK(picked[0].value == 1);
  CHECK(picked[1].value == 3);
}

TEST_CASE("clusters are transitive closures, independent of input order") {
  CounterRng rng(mix(21, 9));
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RoadUserState> users;
    for (std::uint32_t u = 0; u < 15; ++u) {
      auto s = user_at(u + 1,
                       {rng.next_uniform(0.0, 40.0), rng.next_uniform(0.0, 40.0)},
                       {1.0, 0.0}, MotionState::Walking);
      s.profile = u % 2 ? VruProfile::Pedestrian : VruProfile::Cyclist;
      s.velocity_ms = {std::cos(rng.next_uniform(0.0, 6.28)),
                       std::sin(rng.next_uniform(0.0, 6.28))};
      users.push_back(s);
    }
    const auto a = form_clusters(users, 10.0, 30.0);
    auto shuffled = users;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng.next_u64() % i]);
    const auto b = form_clusters(shuffled, 10.0, 30.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].head == b[i].head);
      CHECK(a[i].members == b[i].members);
    }
    // Every member appears exactly once across clusters.
    std::vector<PseudonymId> all;
    for (const auto& c : a) {
      CHECK(std::is_sorted(c.members.begin(), c.members.end()));
      CHECK(c.head == c.members.front());
      all.insert(all.end(), c.members.begin(), c.members.end());
    }
    std::sort(all.begin(), all.end());
    CHECK(all.size() == users.size());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
  }
}

TEST_CASE("cluster membership is the brute-force transitive closure") {
  std::vector<RoadUserState> users = {
      user_at(1, {0.0, 0.0}, {1.0, 0.0}),
      user_at(2, {5.0, 0.0}, {1.0, 0.1}),   // chained to 1
      user_at(3, {10.0, 0.0}, {1.0, 0.0}),  // chained to 2, transitively to 1
      user_at(4, {30.0, 0.0}, {1.0, 0.0}),  // too far from everyone
      user_at(5, {6.0, 1.0}, {-1.0, 0.0}),  // close but opposite heading
  };
  const auto clusters = form_clusters(users, 6.0, 20.0);
  REQUIRE(clusters.size() == 3);
  CHECK(clusters[0].head.value == 1);
  CHECK(clusters[0].members.size() == 3);
  CHECK(clusters[1].head.value == 4);
  CHECK(clusters[2].head.value == 5);
}

TEST_CASE("heading is degrees counterclockwise from +x") {
  CHECK(heading_deg(user_at(1, {}, {1.0, 0.0})) == doctest::Approx(0.0));
  CHECK(heading_deg(user_at(1, {}, {0.0, 1.0})) == doctest::Approx(90.0));
  CHECK(heading_deg(user_at(1, {}, {-1.0, 0.0})) == doctest::Approx(180.0));
  CHECK(heading_deg(user_at(1, {}, {0.0, -1.0})) == doctest::Approx(270.0));
  CHECK(heading_deg(user_at(1, {}, {0.0, 0.0})) == doctest::Approx(0.0));
}
