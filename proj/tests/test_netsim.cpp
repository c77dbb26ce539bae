#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "vrusim/netsim.hpp"
#include "vrusim/rng.hpp"

using namespace vrusim;

namespace {

VamMessage vam_at(std::uint32_t pseud, double x_m, double y_m, double speed_mps,
                  double heading, std::uint64_t t_ms, VruProfile profile,
                  MotionState motion) {
  VamMessage m;
  m.pseudonym = {pseud};
  m.timestamp_ms = t_ms;
  m.pos_x_cm = to_cm(x_m);
  m.pos_y_cm = to_cm(y_m);
  m.speed_cms = to_speed_cms(speed_mps);
  m.heading_cdeg = to_heading_cdeg(heading);
  m.profile = profile;
  m.motion_state = motion;
  return m;
}

MessageEnvelope envelope_for(PseudonymId sender, const GridCell& cell, double t,
                             MessageKind kind = MessageKind::Vam) {
  MessageEnvelope env;
  env.kind = kind;
  env.sender = sender;
  env.topic = topic_of(cell);
  env.publish_time_ms = t;
  if (kind == MessageKind::Vam) {
    env.payload = encode_vam(vam_at(sender.value, 0, 0, 1.0, 0.0,
                                    static_cast<std::uint64_t>(t), VruProfile::Pedestrian,
                                    MotionState::Walking));
  } else {
    DenmMessage d;
    d.event_id = 1;
    d.danger = DangerLevel::Warning;
    d.ttc_ms = 1000;
    d.validity_ms = 5000;
    env.payload = encode_denm(d);
  }
  return env;
}

} // namespace

TEST_CASE("latency models sample within their stated envelopes") {
  CounterRng rng(mix(4, 4));
  LinkLatencyModel fixed{LatencyKind::Fixed, 50.0, 0.0, 0.0, 0.0};
  CHECK(fixed.sample_ms(rng) == 50.0);
  CHECK_FALSE(fixed.sample_drop(rng));

  LinkLatencyModel jitter{LatencyKind::UniformJitter, 20.0, 15.0, 0.0, 0.0};
  for (int i = 0; i < 200; ++i) {
    const double v = jitter.sample_ms(rng);
    CHECK(v >= 20.0);
    CHECK(v < 35.0);
  }

  LinkLatencyModel lognorm{LatencyKind::LogNormal, 30.0, 0.0, 0.5, 0.0};
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double v = lognorm.sample_ms(rng);
    CHECK(v > 0.0);
    sum += v;
  }
  CHECK(sum / 20000.0 == doctest::Approx(30.0).epsilon(0.03)); // mean-preserving sigma term

  LinkLatencyModel dropper{LatencyKind::Fixed, 5.0, 0.0, 0.0, 1.0};
  CHECK(dropper.sample_drop(rng));

  LinkLatencyModel bad{LatencyKind::Fixed, -1.0, 0.0, 0.0, 0.0};
  CHECK_THROWS(bad.validate());
  bad = {LatencyKind::Fixed, 5.0, 0.0, 0.0, 1.5};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("hop chains per pipeline mode") {
  using enum HopKind;
  CHECK(upstream_chain(PipelineMode::Central) == std::vector{ClientEdge, EdgeServer});
  CHECK(downstream_chain(PipelineMode::Central) == std::vector{ServerEdge, EdgeClient});
  CHECK(upstream_chain(PipelineMode::Edge) == std::vector{ClientEdge});
  CHECK(downstream_chain(PipelineMode::Edge) == std::vector{EdgeClient});
  CHECK(upstream_chain(PipelineMode::DirectLink) == std::vector{Direct});
  CHECK(downstream_chain(PipelineMode::DirectLink) == std::vector{Direct});

  const LatencyConfig lat;
  CHECK(lat.model_for(ClientEdge).base_ms == 50.0);
  CHECK(lat.model_for(EdgeClient).base_ms == 50.0);
  CHECK(lat.model_for(EdgeServer).base_ms == 20.0);
  CHECK(lat.model_for(ServerEdge).base_ms == 20.0);
  CHECK(lat.model_for(Direct).base_ms == 5.0);
}

TEST_CASE("frequency window: half-open sliding second sustains exactly the cap") {
  FrequencyWindow w;
  for (int i = 0; i < 10; ++i) {
    CHECK(w.admissible(i * 100.0, 10));
    w.record(i * 100.0);
  }
  CHECK_FALSE(w.admissible(950.0, 10)); // ten in (-50, 950]
  CHECK(w.admissible(1000.0, 10));      // the send at t=0 has aged out of (0, 1000]
  w.record(1000.0);
  CHECK_FALSE(w.admissible(1050.0, 10));
}

TEST_CASE("broker: registration, subscription set operations") {
  Broker broker(PipelineMode::DirectLink, {}, 1);
  const PseudonymId a{100};
  CHECK_FALSE(broker.is_registered(a));
  CHECK_THROWS_AS(broker.subscribe(a, std::vector<GridCell>{{0, 0, 100}}),
                  std::invalid_argument);
  broker.register_client(a);
  const std::vector<GridCell> cells = {{0, 0, 100}, {1, 0, 100}};
  broker.subscribe(a, cells);
  broker.subscribe(a, cells); // idempotent
  CHECK(broker.subscriptions_of(a).size() == 2);
  CHECK(broker.subscribers_of({0, 0, 100}) == std::vector{a});
  broker.unsubscribe(a, std::vector<GridCell>{{0, 0, 100}});
  CHECK(broker.subscribers_of({0, 0, 100}).empty());
  broker.unregister_client(a);
  CHECK(broker.subscribers_of({1, 0, 100}).empty());

  // Unregister must clear a whole multi-cell ring, not just the first entry.
  const PseudonymId b{200};
  broker.register_client(b);
  const std::vector<GridCell> ring = {{-1, -1, 100}, {-1, 0, 100}, {0, -1, 100},
                                      {0, 0, 100},   {0, 1, 100},  {1, 1, 100}};
  broker.subscribe(b, ring);
  broker.unregister_client(b);
  CHECK_FALSE(broker.is_registered(b));
  for (const auto& cell : ring) CHECK(broker.subscribers_of(cell).empty());
}

TEST_CASE("broker: fan-out excludes the sender and samples per-recipient hops") {
  Broker broker(PipelineMode::DirectLink, {}, 7);
  const GridCell cell{0, 0, 100};
  for (std::uint32_t v : {100u, 200u, 300u}) {
    broker.register_client({v});
    broker.subscribe({v}, std::vector<GridCell>{cell});
  }
  const auto deliveries = broker.publish(envelope_for({100}, cell, 500.0), 500.0,
                                         upstream_chain(PipelineMode::DirectLink));
  REQUIRE(deliveries.size() == 2);
  CHECK(deliveries[0].recipient.value == 200);
  CHECK(deliveries[1].recipient.value == 300);
  for (const auto& d : deliveries) {
    CHECK(d.delivery_time_ms == 505.0); // fixed 5 ms direct hop
    CHECK(d.hops.count == 1);
    CHECK(d.hops.total_ms() == 5.0);
  }
}

TEST_CASE("broker: full central chain sums access and backbone latencies") {
  Broker broker(PipelineMode::Central, {}, 7);
  broker.mark_station(kServerStationId);
  const GridCell cell{2, 3, 100};
  const auto up = broker.send_to_station(envelope_for({100}, cell, 1000.0), 1000.0,
                                         kServerStationId, upstream_chain(PipelineMode::Central));
  REQUIRE(up.has_value());
  CHECK(up->delivery_time_ms == 1070.0); // 50 + 20
  CHECK(up->hops.count == 2);

  broker.register_client({200});
  broker.subscribe({200}, std::vector<GridCell>{cell});
  const auto down =
      broker.publish(envelope_for(kServerStationId, cell, 1070.0, MessageKind::Denm), 1070.0,
                     downstream_chain(PipelineMode::Central));
  REQUIRE(down.size() == 1);
  CHECK(down[0].delivery_time_ms == 1140.0); // publish + 20 + 50
}

TEST_CASE("broker: per-sender frequency gates, stations exempt") {
  Broker broker(PipelineMode::DirectLink, {}, 3);
  broker.mark_station(kServerStationId);
  const GridCell cell{0, 0, 100};
  broker.register_client({50});

  for (int i = 0; i < 10; ++i) {
    CHECK(broker.enforce_frequency({50}, MessageKind::Vam, i * 10.0));
    broker.publish(envelope_for({50}, cell, i * 10.0), i * 10.0,
                   upstream_chain(PipelineMode::DirectLink));
  }
  CHECK_FALSE(broker.enforce_frequency({50}, MessageKind::Vam, 100.0));
  CHECK_THROWS_AS(broker.publish(envelope_for({50}, cell, 100.0), 100.0,
                                 upstream_chain(PipelineMode::DirectLink)),
                  PublishError);
  // The warning budget is separate from the awareness budget.
  CHECK(broker.enforce_frequency({50}, MessageKind::Denm, 100.0));
  // Stations bypass the gates entirely.
  for (int i = 0; i < 40; ++i)
    CHECK(broker.enforce_frequency(kServerStationId, MessageKind::Denm, 100.0 + i));
}

TEST_CASE("broker: deliveries are a pure function of the seed") {
  LatencyConfig jittery;
  jittery.access = {LatencyKind::UniformJitter, 30.0, 40.0, 0.0, 0.0};
  const GridCell cell{0, 0, 100};
  std::vector<double> first;
  for (int round = 0; round < 2; ++round) {
    Broker broker(PipelineMode::Edge, jittery, 99);
    broker.register_client({10});
    broker.register_client({20});
    broker.subscribe({20}, std::vector<GridCell>{cell});
    std::vector<double> times;
    for (int i = 0; i < 5; ++i)
      for (const auto& d : broker.publish(envelope_for({10}, cell, i * 200.0), i * 200.0,
                                          upstream_chain(PipelineMode::Edge)))
        times.push_back(d.delivery_time_ms);
    if (round == 0)
      first = times;
    else
      CHECK(first == times);
  }
}

TEST_CASE("station: converging pair yields one warning targeting both") {
  StationState station(kServerStationId, WarningPolicy{}, 1500, 100);
  // Vehicle 30 m out closing at 10 m/s on a standing pedestrian: ttc 2.85 s.
  std::vector<VamMessage> batch = {
      vam_at(500, -30.0, 0.0, 10.0, 0.0, 1000, VruProfile::Vehicle, MotionState::Driving),
      vam_at(400, 0.0, 0.0, 0.0, 0.0, 1000, VruProfile::Pedestrian, MotionState::Standing),
  };
  const auto emissions = station.process_batch(batch);
  REQUIRE(emissions.size() == 1);
  const DenmMessage& d = emissions[0].denm;
  CHECK(d.danger == DangerLevel::Warning);
  CHECK(d.event_type == EventType::CollisionRisk);
  REQUIRE(d.target_pseudonyms.size() == 2);
  CHECK(d.target_pseudonyms[0].value == 400);
  CHECK(d.target_pseudonyms[1].value == 500);
  CHECK(d.ttc_ms == doctest::Approx(2850).epsilon(0.001));
  // Conflict point sits on the pedestrian (the vehicle reaches it).
  CHECK(cm_to_m(d.pos_x_cm) == doctest::Approx(0.0).epsilon(0.2));
  CHECK(emissions[0].topic_cell == cell_of({cm_to_m(d.pos_x_cm), cm_to_m(d.pos_y_cm)}, 100));

  // Same batch again at the same data time: state unchanged, fresh warning
  // with a new event id.
  const auto again = station.process_batch(batch);
  REQUIRE(again.size() == 1);
  CHECK(again[0].denm.event_id != d.event_id);
}

TEST_CASE("station: keeps the newest state per sender and evicts stale entries") {
  StationState station(kServerStationId, WarningPolicy{}, 1500, 100);
  std::vector<VamMessage> first = {
      vam_at(400, 0.0, 0.0, 0.0, 0.0, 0, VruProfile::Pedestrian, MotionState::Standing),
  };
  CHECK(station.process_batch(first).empty());
  CHECK(station.table_size() == 1);

  // 2 s later only the vehicle reports; the pedestrian entry (age 2 s) is
  // outside the 1.5 s staleness window, so no pair is assessed.
  std::vector<VamMessage> second = {
      vam_at(500, -30.0, 0.0, 10.0, 0.0, 2000, VruProfile::Vehicle, MotionState::Driving),
  };
  CHECK(station.process_batch(second).empty());
  CHECK(station.table_size() == 1);

  // Out-of-order arrivals never roll a state backwards.
  StationState s2(kServerStationId, WarningPolicy{}, 1500, 100);
  std::vector<VamMessage> newer = {
      vam_at(400, 5.0, 0.0, 0.0, 0.0, 500, VruProfile::Pedestrian, MotionState::Standing)};
  std::vector<VamMessage> older = {
      vam_at(400, 9.0, 0.0, 0.0, 0.0, 400, VruProfile::Pedestrian, MotionState::Standing)};
  s2.process_batch(newer);
  s2.process_batch(older);
  std::vector<VamMessage> probe = {
      vam_at(500, -28.5, 0.0, 10.0, 0.0, 500, VruProfile::Vehicle, MotionState::Driving)};
  const auto emissions = s2.process_batch(probe);
  REQUIRE(emissions.size() == 1);
  // Conflict at the *newest* pedestrian position (x = 5), not the stale x = 9.
  CHECK(cm_to_m(emissions[0].denm.pos_x_cm) == doctest::Approx(5.0).epsilon(0.05));
}

TEST_CASE("station: assessment runs in the data timebase, not arrival time") {
  // Two batches with identical world history must emit identical warnings
  // regardless of which station instance (server vs edge) processes them.
  StationState server(kServerStationId, WarningPolicy{}, 1500, 100);
  StationState edge(kEdgeStationId, WarningPolicy{}, 1500, 100);
  const std::vector<VamMessage> batch = {
      vam_at(500, -30.0, 0.0, 10.0, 0.0, 7000, VruProfile::Vehicle, MotionState::Driving),
      vam_at(400, 0.0, 0.0, 0.0, 0.0, 7000, VruProfile::Pedestrian, MotionState::Standing),
  };
  const auto via_server = server_step(server, batch);
  const auto via_edge = edge_step(edge, batch);
  REQUIRE(via_server.size() == 1);
  REQUIRE(via_edge.size() == 1);
  CHECK(via_server[0].denm == via_edge[0].denm);
  CHECK(via_server[0].topic_cell == via_edge[0].topic_cell);
}

TEST_CASE("station: below-warning pairs stay silent") {
  StationState station(kServerStationId, WarningPolicy{}, 1500, 100);
  // Passing 5 m to the side: awareness-grade proximity, no warning emission.
  std::vector<VamMessage> batch = {
      vam_at(500, -20.0, 5.0, 10.0, 0.0, 1000, VruProfile::Vehicle, MotionState::Driving),
      vam_at(400, 0.0, 0.0, 0.0, 0.0, 1000, VruProfile::Pedestrian, MotionState::Standing),
  };
  CHECK(station.process_batch(batch).empty());
}

TEST_CASE("decoded awareness turns back into kinematic state") {
  const VamMessage m =
      vam_at(77, 15.0, -2.5, 12.5, 90.0, 1234, VruProfile::Cyclist, MotionState::Cycling);
  const RoadUserState s = state_from_vam(m);
  CHECK(s.pseudonym.value == 77);
  CHECK(s.position_m.x == doctest::Approx(15.0));
  CHECK(s.position_m.y == doctest::Approx(-2.5));
  CHECK(s.velocity_ms.x == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(s.velocity_ms.y == doctest::Approx(12.5));
  CHECK(s.timestamp_ms == 1234);
  CHECK(s.profile == VruProfile::Cyclist);
}

TEST_CASE("oversized payloads are refused at the broker") {
  Broker broker(PipelineMode::DirectLink, {}, 1);
  broker.register_client({9});
  MessageEnvelope env = envelope_for({9}, {0, 0, 100}, 0.0);
  env.payload.resize(kVamMaxBytes + 1);
  CHECK_THROWS_AS(broker.publish(env, 0.0, upstream_chain(PipelineMode::DirectLink)),
                  PublishError);
}
