#include "vrusim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "vrusim/messages.hpp"
#include "vrusim/netsim.hpp"
#include "vrusim/sweep.hpp"

namespace vrusim {
namespace {

constexpr std::uint64_t kActorSeedSalt = 0x616374; // "act"
constexpr std::uint64_t kMaxDurationMs = 86'400'000;

bool finite(double v) { return std::isfinite(v); }
bool finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

} // namespace

std::uint64_t ScenarioConfig::duration_ms() const {
  return static_cast<std::uint64_t>(std::llround(duration_s * 1000.0));
}

void ScenarioConfig::validate() const {
  if (name.empty()) bad("name must not be empty");
  if (!finite(duration_s) || duration_s <= 0.0) bad("duration_s must be positive");
  if (duration_ms() > kMaxDurationMs) bad("duration_s exceeds 24 h");
  if (tick_ms == 0 || tick_ms > 1000 || 1000 % tick_ms != 0) bad("tick_ms must divide 1000");
  if (vam_interval_ms != 0 && vam_interval_ms % tick_ms != 0)
    bad("vam_interval_ms must be a multiple of tick_ms");
  if (std::abs(origin.lat_deg) > 85.0) bad("origin latitude outside +-85 deg");
  if (std::abs(origin.lon_deg) > 180.0) bad("origin longitude outside +-180 deg");
  if (!finite(noise_sigma_m) || noise_sigma_m < 0.0) bad("noise_sigma_m must be >= 0");
  try {
    latency.validate();
  } catch (const std::exception& e) {
    bad(std::string("latency: ") + e.what());
  }
  for (double v : {policy.reaction_s, policy.latency_budget_s, policy.maneuver_s,
                   policy.margin_s})
    if (!finite(v) || v < 0.0) bad("policy time components must be >= 0");
  if (warning_threshold(policy) <= 0.0) bad("warning threshold must be positive");
  if (!finite(policy.awareness_factor) || policy.awareness_factor < 1.0)
    bad("policy.awareness_factor must be >= 1");
  if (!finite(policy.imminent_s) || policy.imminent_s <= 0.0)
    bad("policy.imminent_s must be positive");
  if (policy.denm_validity_ms == 0) bad("policy.denm_validity_ms must be positive");
  for (double w : policy.half_width_m)
    if (!finite(w) || w <= 0.0) bad("policy.half_width_m entries must be positive");
  for (double r : policy.radius_override_m)
    if (r >= 0.0 && (!finite(r) || r == 0.0)) bad("policy radius overrides must be positive");
  if (cell_size_m == 0) bad("cell_size_m must be positive");
  if (pseudonym_epoch_s == 0) bad("pseudonym_epoch_s must be positive");
  if (!finite(relevance_distance_m) || relevance_distance_m <= 0.0)
    bad("relevance_distance_m must be positive");
  if (staleness_ms == 0) bad("staleness_ms must be positive");
  for (double cap : speed_caps_ms)
    if (!finite(cap) || cap < 0.0) bad("speed_caps_ms entries must be >= 0");

  for (std::size_t i = 0; i < actors.size(); ++i) {
    const ActorSpec& a = actors[i];
    const std::string who = "actors[" + std::to_string(i) + "]";
    if (!finite(a.start_position_m)) bad(who + ": start position must be finite");
    if (a.segments.empty()) bad(who + ": needs at least one segment");
    if (a.segments.front().start_ms != 0) bad(who + ": first segment must start at 0");
    const double cap = speed_caps_ms[static_cast<std::size_t>(a.profile)];
    for (std::size_t s = 0; s < a.segments.size(); ++s) {
      const ActorSegment& seg = a.segments[s];
      if (s > 0 && seg.start_ms <= a.segments[s - 1].start_ms)
        bad(who + ": segment starts must strictly increase");
      if (!finite(seg.velocity_ms)) bad(who + ": segment velocity must be finite");
      const bool stationary =
          seg.motion == MotionState::Standing || seg.motion == MotionState::Idle;
      if (stationary && (seg.velocity_ms.x != 0.0 || seg.velocity_ms.y != 0.0))
        bad(who + ": standing/idle segments must have zero velocity");
      if (seg.velocity_ms.norm() > cap + 1e-9)
        bad(who + ": segment speed exceeds the " + to_string(a.profile) + " cap");
    }
  }
}

RoadUserState state_at(const ActorSpec& actor, std::uint32_t actor_id, std::uint64_t t_ms) {
  RoadUserState s;
  s.actor_id = actor_id;
  s.profile = actor.profile;
  s.timestamp_ms = t_ms;
  Vec2 pos = actor.start_position_m;
  const auto& segs = actor.segments;
  std::size_t active = 0;
  for (std::size_t i = 0; i < segs.size() && segs[i].start_ms <= t_ms; ++i) {
    const std::uint64_t seg_end =
        (i + 1 < segs.size()) ? std::min(segs[i + 1].start_ms, t_ms) : t_ms;
    pos += segs[i].velocity_ms * (static_cast<double>(seg_end - segs[i].start_ms) / 1000.0);
    active = i;
  }
  s.position_m = pos;
  s.velocity_ms = segs[active].velocity_ms;
  s.motion_state = segs[active].motion;
  return s;
}

RoadUserState step(const RoadUserState& s, const ActorSpec& actor, double dt_s) {
  if (!(dt_s >= 0.0)) throw std::invalid_argument("step: dt_s must be >= 0");
  RoadUserState out =
      state_at(actor, s.actor_id,
               s.timestamp_ms + static_cast<std::uint64_t>(std::llround(dt_s * 1000.0)));
  out.pseudonym = s.pseudonym;
  out.sigma_m = s.sigma_m;
  return out;
}

RoadUserState observe(const RoadUserState& s, double noise_sigma_m, CounterRng& rng) {
  if (!(noise_sigma_m >= 0.0)) throw std::invalid_argument("observe: sigma must be >= 0");
  RoadUserState o = s;
  if (noise_sigma_m > 0.0) {
    o.position_m.x += noise_sigma_m * rng.next_normal();
    o.position_m.y += noise_sigma_m * rng.next_normal();
  }
  o.sigma_m = noise_sigma_m;
  return o;
}

std::vector<GtCollision> detect_ground_truth_collisions(const ScenarioConfig& config) {
  config.validate();
  const std::uint64_t end_ms = config.duration_ms();
  std::vector<std::uint64_t> bounds{0, end_ms};
  for (const auto& a : config.actors)
    for (const auto& seg : a.segments)
      if (seg.start_ms > 0 && seg.start_ms < end_ms) bounds.push_back(seg.start_ms);
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

  const std::size_t n = config.actors.size();
  std::vector<RoadUserState> states(n);
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  std::vector<GtCollision> out;
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    const std::uint64_t t0 = bounds[k];
    const double dt_s = static_cast<double>(bounds[k + 1] - t0) / 1000.0;
    for (std::size_t i = 0; i < n; ++i)
      states[i] = state_at(config.actors[i], static_cast<std::uint32_t>(i), t0);
    for (const auto& hit : interval_collisions_parallel(states, config.policy, dt_s)) {
      if (!seen.insert({hit.index_a, hit.index_b}).second) continue;
      out.push_back({hit.index_a, hit.index_b, static_cast<double>(t0) / 1000.0 + hit.time_s});
    }
  }
  std::sort(out.begin(), out.end(), [](const GtCollision& a, const GtCollision& b) {
    return std::tie(a.time_s, a.actor_a, a.actor_b) < std::tie(b.time_s, b.actor_a, b.actor_b);
  });
  return out;
}

// ---- builtin templates ----

namespace {

ScenarioConfig base_template(const char* name, const char* description, double duration_s) {
  ScenarioConfig c;
  c.name = name;
  c.description = description;
  c.duration_s = duration_s;
  c.seed = 42;
  c.origin = {-27.4698, 153.0251};
  return c;
}

ActorSpec constant_actor(VruProfile profile, Vec2 start, Vec2 velocity, MotionState motion) {
  ActorSpec a;
  a.profile = profile;
  a.start_position_m = start;
  a.segments.push_back({0, velocity, motion});
  return a;
}

ScenarioConfig make_los_crossing() {
  auto c = base_template("los_crossing",
                         "Vehicle at 45 km/h approaches a marked crossing while a pedestrian "
                         "steps onto it in clear line of sight.",
                         10.0);
  c.actors.push_back(
      constant_actor(VruProfile::Vehicle, {-62.5, 0.0}, {12.5, 0.0}, MotionState::Driving));
  c.actors.push_back(
      constant_actor(VruProfile::Pedestrian, {0.0, -7.0}, {0.0, 1.4}, MotionState::Walking));
  return c;
}

ScenarioConfig make_nlos_parked_cars() {
  auto c = base_template("nlos_parked_cars",
                         "Pedestrian waits hidden behind a row of parked cars, then crosses; "
                         "the approaching driver has no line of sight until very late.",
                         9.0);
  c.noise_sigma_m = 0.25;
  c.actors.push_back(
      constant_actor(VruProfile::Vehicle, {-80.0, 0.0}, {13.9, 0.0}, MotionState::Driving));
  ActorSpec ped;
  ped.profile = VruProfile::Pedestrian;
  ped.start_position_m = {10.0, -4.0};
  ped.segments.push_back({0, {0.0, 0.0}, MotionState::Standing});
  ped.segments.push_back({2000, {0.0, 0.9}, MotionState::Walking});
  c.actors.push_back(ped);
  return c;
}

ScenarioConfig make_distracted_pedestrian() {
  auto c = base_template("distracted_pedestrian",
                         "Pedestrian walks along the kerb absorbed in a phone, then veers "
                         "onto the road without checking for the overtaking vehicle.",
                         8.0);
  c.noise_sigma_m = 0.25;
  c.actors.push_back(
      constant_actor(VruProfile::Vehicle, {-50.0, 0.0}, {13.9, 0.0}, MotionState::Driving));
  ActorSpec ped;
  ped.profile = VruProfile::Pedestrian;
  ped.start_position_m = {20.0, -3.0};
  ped.segments.push_back({0, {1.2, 0.0}, MotionState::Walking});
  ped.segments.push_back({3000, {0.0, 1.2}, MotionState::Walking});
  c.actors.push_back(ped);
  return c;
}

ScenarioConfig make_shared_road() {
  auto c = base_template("shared_road",
                         "Cyclist rides in-lane on a shared road; a faster vehicle closes in "
                         "from behind in the same lane.",
                         14.0);
  c.noise_sigma_m = 0.25;
  c.actors.push_back(
      constant_actor(VruProfile::Cyclist, {0.0, 0.0}, {6.0, 0.0}, MotionState::Cycling));
  c.actors.push_back(
      constant_actor(VruProfile::Vehicle, {-120.0, 0.0}, {16.7, 0.0}, MotionState::Driving));
  return c;
}

ScenarioConfig make_intersection_load() {
  auto c = base_template("intersection_load",
                         "Crowded intersection: eight vehicles cross on two perpendicular "
                         "roads while thousands of bystanders fill the surrounding zone.",
                         30.0);
  c.noise_sigma_m = 0.25;
  c.record_states = false;
  const double v = 10.0;
  auto vehicle = [&](Vec2 start, Vec2 vel) {
    c.actors.push_back(constant_actor(VruProfile::Vehicle, start, vel, MotionState::Driving));
  };
  // Two lanes per direction on each road, entries staggered so no two
  // vehicles ever close below the awareness radius.
  vehicle({-280.0, -2.5}, {v, 0.0});
  vehicle({-130.0, -2.5}, {v, 0.0});
  vehicle({280.0, 2.5}, {-v, 0.0});
  vehicle({130.0, 2.5}, {-v, 0.0});
  vehicle({2.5, -255.0}, {0.0, v});
  vehicle({2.5, -105.0}, {0.0, v});
  vehicle({-2.5, 255.0}, {0.0, -v});
  vehicle({-2.5, 105.0}, {0.0, -v});
  // 4992 standing bystanders fill the zone to exactly 5000 users, kept off
  // both carriageways and at least 3 m apart: bodies cannot overlap, and the
  // spacing leaves a >5-sigma noise margin so a standing crowd never reads
  // as overlapping to the assessor.
  CounterRng layout(mix(42, kStreamLayout, 0));
  constexpr double kMinSep = 3.0;
  std::unordered_map<std::uint64_t, std::vector<Vec2>> occupied; // kMinSep grid buckets
  const auto bucket = [](int bx, int by) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(bx)) << 32) |
           static_cast<std::uint32_t>(by);
  };
  int placed = 0;
  while (placed < 4992) {
    const double x = layout.next_uniform(-295.0, 295.0);
    const double y = layout.next_uniform(-295.0, 295.0);
    if (x * x + y * y > 295.0 * 295.0) continue;
    if (std::abs(x) < 8.0 || std::abs(y) < 8.0) continue;
    const int bx = static_cast<int>(std::floor(x / kMinSep));
    const int by = static_cast<int>(std::floor(y / kMinSep));
    bool crowded = false;
    for (int dx = -1; dx <= 1 && !crowded; ++dx)
      for (int dy = -1; dy <= 1 && !crowded; ++dy) {
        const auto it = occupied.find(bucket(bx + dx, by + dy));
        if (it == occupied.end()) continue;
        for (const Vec2& p : it->second)
          if ((Vec2{x, y} - p).norm2() < kMinSep * kMinSep) {
            crowded = true;
            break;
          }
      }
    if (crowded) continue;
    occupied[bucket(bx, by)].push_back({x, y});
    c.actors.push_back(constant_actor(VruProfile::Pedestrian, {x, y}, {}, MotionState::Standing));
    ++placed;
  }
  return c;
}

} // namespace

const std::vector<std::string>& builtin_scenario_names() {
  static const std::vector<std::string> names = {"los_crossing", "nlos_parked_cars",
                                                 "distracted_pedestrian", "shared_road",
                                                 "intersection_load"};
  return names;
}

ScenarioConfig builtin_scenario(const std::string& name) {
  ScenarioConfig c;
  if (name == "los_crossing")
    c = make_los_crossing();
  else if (name == "nlos_parked_cars")
    c = make_nlos_parked_cars();
  else if (name == "distracted_pedestrian")
    c = make_distracted_pedestrian();
  else if (name == "shared_road")
    c = make_shared_road();
  else if (name == "intersection_load")
    c = make_intersection_load();
  else
    bad("unknown builtin scenario: " + name);
  c.validate();
  return c;
}

// ---- simulation engine ----

namespace {

struct Pending {
  double t = 0.0;
  std::uint64_t seq = 0;
  DeliveryEvent delivery;
};

struct PendingAfter {
  bool operator()(const Pending& a, const Pending& b) const {
    return std::tie(a.t, a.seq) > std::tie(b.t, b.seq);
  }
};

struct ActorRuntime {
  PseudonymId pseudonym{};
  RoadUserState observed;
  std::vector<GridCell> subs;
  GridCell sub_center{};
  bool subscribed = false;
};

class Engine {
 public:
  explicit Engine(const ScenarioConfig& cfg)
      : cfg_(cfg), broker_(cfg.pipeline, cfg.latency, cfg.seed) {
    if (cfg_.pipeline != PipelineMode::DirectLink) {
      station_id_ = cfg_.pipeline == PipelineMode::Central ? kServerStationId : kEdgeStationId;
      station_.emplace(station_id_, cfg_.policy, cfg_.staleness_ms, cfg_.cell_size_m, req_);
      broker_.mark_station(station_id_);
    }
    upstream_ = upstream_chain(cfg_.pipeline);
    downstream_ = downstream_chain(cfg_.pipeline);
    actors_.resize(cfg_.actors.size());
    make_schedule();
  }

  SimulationTrace run() {
    const std::uint64_t dur = cfg_.duration_ms();
    events_.reserve(64 + cfg_.actors.size() * (dur / epoch_ms() + 1) +
                    cfg_.actors.size() * (dur / cfg_.tick_ms + 1) *
                        (cfg_.record_states ? 3 : 2));
    emit(0.0, RunStarted{cfg_.name, static_cast<std::uint32_t>(cfg_.actors.size())});
    for (std::uint64_t t = 0; t <= dur; t += cfg_.tick_ms) {
      drain(static_cast<double>(t));
      tick(t);
    }
    drain_all();
    record_ground_truth();
    double t_end = static_cast<double>(dur);
    for (const auto& ev : events_) t_end = std::max(t_end, ev.t_ms);
    emit(t_end, RunEnded{peak_zone_, pseudonym_collisions_});
    std::stable_sort(events_.begin(), events_.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.t_ms < b.t_ms; });
    SimulationTrace trace;
    trace.config = cfg_;
    trace.events = std::move(events_);
    return trace;
  }

 private:
  void emit(double t, TraceBody body) { events_.push_back({t, std::move(body)}); }

  std::uint64_t epoch_ms() const { return std::uint64_t{cfg_.pseudonym_epoch_s} * 1000; }

  // Per-actor pseudonym schedule for every epoch the run can touch. Values 0
  // and 1 are reserved for stations; an actor never reuses its own past
  // value (cross-actor collisions are possible and are counted).
  void make_schedule() {
    const std::uint64_t epochs = cfg_.duration_ms() / epoch_ms() + 1;
    schedule_.resize(cfg_.actors.size());
    for (std::size_t i = 0; i < cfg_.actors.size(); ++i) {
      const std::uint64_t actor_seed = mix(cfg_.seed, kActorSeedSalt, i);
      std::set<std::uint32_t> used{0u, 1u};
      for (std::uint64_t e = 0; e < epochs; ++e) {
        std::uint64_t salt = 0;
        std::uint32_t v;
        do {
          v = rotate_pseudonym(mix(actor_seed, salt++), e).value;
        } while (used.contains(v));
        used.insert(v);
        schedule_[i].push_back(PseudonymId{v});
      }
    }
  }

  PseudonymId pseudonym_at(std::uint32_t actor, double t_ms) const {
    const auto& sched = schedule_[actor];
    const std::uint64_t e =
        std::min<std::uint64_t>(static_cast<std::uint64_t>(t_ms) / epoch_ms(),
                                sched.size() - 1);
    return sched[e];
  }

  void rotate_all(std::uint64_t t, std::uint64_t epoch) {
    for (std::size_t i = 0; i < actors_.size(); ++i) {
      ActorRuntime& a = actors_[i];
      if (a.pseudonym.value != 0) broker_.unregister_client(a.pseudonym);
      a.pseudonym = schedule_[i][epoch];
      a.subscribed = false;
      a.subs.clear();
      broker_.register_client(a.pseudonym);
      const auto [it, fresh] = pseud_owner_.try_emplace(a.pseudonym.value,
                                                        static_cast<std::uint32_t>(i));
      if (!fresh && it->second != i) {
        ++pseudonym_collisions_;
        it->second = static_cast<std::uint32_t>(i);
      }
      emit(static_cast<double>(t),
           PseudonymAssigned{static_cast<std::uint32_t>(i), a.pseudonym,
                             static_cast<std::uint32_t>(epoch)});
    }
  }

  void tick(std::uint64_t t) {
    if (t % epoch_ms() == 0) rotate_all(t, t / epoch_ms());
    const std::uint64_t tick_index = t / cfg_.tick_ms;

    std::uint32_t in_zone = 0;
    for (std::size_t i = 0; i < actors_.size(); ++i) {
      RoadUserState truth = state_at(cfg_.actors[i], static_cast<std::uint32_t>(i), t);
      truth.pseudonym = actors_[i].pseudonym;
      if (truth.position_m.norm() <= req_.zone_radius_m) ++in_zone;
      if (cfg_.record_states)
        emit(static_cast<double>(t),
             StateSample{truth.actor_id, truth.pseudonym, truth.profile, truth.motion_state,
                         truth.position_m, truth.velocity_ms, truth.sigma_m});
      CounterRng noise(mix(cfg_.seed, kStreamNoise, i, tick_index));
      actors_[i].observed = observe(truth, cfg_.noise_sigma_m, noise);
    }
    peak_zone_ = std::max(peak_zone_, in_zone);

    const bool vam_tick = t % cfg_.effective_vam_interval_ms() == 0;
    for (std::size_t i = 0; i < actors_.size(); ++i) {
      refresh_subscriptions(static_cast<std::uint32_t>(i));
      if (vam_tick) publish_vam(static_cast<std::uint32_t>(i), t);
    }
  }

  void refresh_subscriptions(std::uint32_t i) {
    ActorRuntime& a = actors_[i];
    const GridCell center = cell_of(a.observed.position_m, cfg_.cell_size_m);
    if (a.subscribed && center == a.sub_center) return;
    const std::uint32_t ring =
        ring_for_range(required_range(cfg_.actors[i].profile, req_), cfg_.cell_size_m);
    std::vector<GridCell> cells =
        subscription_cells(a.observed.position_m, cfg_.cell_size_m, ring);
    std::sort(cells.begin(), cells.end());
    std::vector<GridCell> add, remove;
    std::set_difference(cells.begin(), cells.end(), a.subs.begin(), a.subs.end(),
                        std::back_inserter(add));
    std::set_difference(a.subs.begin(), a.subs.end(), cells.begin(), cells.end(),
                        std::back_inserter(remove));
    if (!add.empty()) broker_.subscribe(a.pseudonym, add);
    if (!remove.empty()) broker_.unsubscribe(a.pseudonym, remove);
    a.subs = std::move(cells);
    a.sub_center = center;
    a.subscribed = true;
  }

  void publish_vam(std::uint32_t i, std::uint64_t t) {
    const ActorRuntime& a = actors_[i];
    const RoadUserState& obs = a.observed;
    VamMessage m;
    m.pseudonym = a.pseudonym;
    m.timestamp_ms = t;
    m.pos_x_cm = to_cm(obs.position_m.x);
    m.pos_y_cm = to_cm(obs.position_m.y);
    m.speed_cms = to_speed_cms(obs.velocity_ms.norm());
    m.heading_cdeg = to_heading_cdeg(heading_deg(obs));
    m.profile = obs.profile;
    m.motion_state = obs.motion_state;
    m.position_accuracy_dm = static_cast<std::uint8_t>(
        std::min(255.0, std::round(obs.sigma_m * 10.0)));
    const Vec2 v_eff = effective_velocity(obs);
    if (v_eff.x != 0.0 || v_eff.y != 0.0) {
      m.path_points.push_back({to_cm(v_eff.x), to_cm(v_eff.y)});
      m.path_points.push_back({to_cm(v_eff.x * 2.0), to_cm(v_eff.y * 2.0)});
    }
    if (!broker_.enforce_frequency(a.pseudonym, MessageKind::Vam, static_cast<double>(t)))
      return; // rate-capped: drop silently, next interval retries

    const GridCell cell = cell_of(obs.position_m, cfg_.cell_size_m);
    MessageEnvelope env{MessageKind::Vam, a.pseudonym, topic_of(cell), encode_vam(m),
                        static_cast<double>(t)};
    if (station_) {
      emit(static_cast<double>(t),
           VamPublished{i, a.pseudonym, cell, static_cast<std::uint32_t>(env.payload.size()), 1});
      if (auto d = broker_.send_to_station(env, static_cast<double>(t), station_id_, upstream_))
        push(*d);
    } else {
      std::uint32_t intended = 0;
      for (PseudonymId p : broker_.subscribers_of(cell))
        if (p != a.pseudonym) ++intended;
      emit(static_cast<double>(t),
           VamPublished{i, a.pseudonym, cell, static_cast<std::uint32_t>(env.payload.size()),
                        intended});
      for (auto& d : broker_.publish(env, static_cast<double>(t), upstream_)) push(d);
    }
  }

  void push(DeliveryEvent d) {
    const double t = d.delivery_time_ms;
    heap_.push({t, seq_++, std::move(d)});
  }

  void drain(double until_ms) {
    while (!heap_.empty() && heap_.top().t <= until_ms) process_slice();
  }

  void drain_all() {
    while (!heap_.empty()) process_slice();
  }

  // Pop every arrival at the earliest pending instant and handle it: VAMs
  // bound for the station form one batch (their data timebase is shared),
  // everything else is handled per delivery in arrival order.
  void process_slice() {
    const double t = heap_.top().t;
    std::vector<DeliveryEvent> slice;
    while (!heap_.empty() && heap_.top().t == t) {
      slice.push_back(heap_.top().delivery);
      heap_.pop();
    }
    for (const auto& d : slice)
      emit(t, Delivered{d.envelope.kind, d.envelope.sender, d.recipient,
                        parse_topic(d.envelope.topic), d.envelope.publish_time_ms, d.hops,
                        d.envelope.kind == MessageKind::Denm
                            ? decode_denm(d.envelope.payload).event_id
                            : 0});

    if (station_) {
      std::vector<VamMessage> batch;
      for (const auto& d : slice)
        if (d.envelope.kind == MessageKind::Vam && d.recipient == station_id_)
          batch.push_back(decode_vam(d.envelope.payload));
      if (!batch.empty())
        for (const auto& e : station_->process_batch(batch))
          publish_denm(station_id_, e.denm, e.topic_cell, t);
    }
    for (const auto& d : slice) {
      if (d.recipient == station_id_ && station_) continue;
      if (d.envelope.kind == MessageKind::Denm)
        denm_arrival(d, t);
      else
        direct_vam_arrival(d, t);
    }
  }

  void publish_denm(PseudonymId sender, const DenmMessage& denm, const GridCell& cell,
                    double t) {
    MessageEnvelope env{MessageKind::Denm, sender, topic_of(cell), encode_denm(denm), t};
    std::uint32_t intended = 0;
    for (PseudonymId p : broker_.subscribers_of(cell))
      if (p != sender) ++intended;
    emit(t, DenmPublished{sender, cell, static_cast<std::uint32_t>(env.payload.size()),
                          intended, denm.event_id, denm.event_type, denm.danger, denm.ttc_ms,
                          denm.validity_ms, denm.relevance_radius_m,
                          {cm_to_m(denm.pos_x_cm), cm_to_m(denm.pos_y_cm)},
                          denm.target_pseudonyms});
    for (auto& d : broker_.publish(env, t, downstream_)) push(d);
  }

  void denm_arrival(const DeliveryEvent& d, double t) {
    const DenmMessage denm = decode_denm(d.envelope.payload);
    const bool targeted = std::find(denm.target_pseudonyms.begin(),
                                    denm.target_pseudonyms.end(),
                                    d.recipient) != denm.target_pseudonyms.end();
    if (!targeted) return; // situational broadcast, no direct warning
    const auto owner = pseud_owner_.find(d.recipient.value);
    if (owner == pseud_owner_.end()) return; // recipient rotated away mid-flight
    emit(t, WarningPresented{owner->second, d.recipient, denm.danger, denm.ttc_ms,
                             denm.event_id});
  }

  // Peer-to-peer mode: the receiving client assesses (self, sender) itself.
  void direct_vam_arrival(const DeliveryEvent& d, double t) {
    const auto owner = pseud_owner_.find(d.recipient.value);
    if (owner == pseud_owner_.end()) return;
    const std::uint32_t self_idx = owner->second;
    if (actors_[self_idx].pseudonym != d.recipient) return; // stale pseudonym
    RoadUserState self = actors_[self_idx].observed;
    RoadUserState sender = state_from_vam(decode_vam(d.envelope.payload));

    // Relevance gate: skip senders whose predicted path stays far away.
    const double horizon = warning_threshold(cfg_.policy) * cfg_.policy.awareness_factor;
    if (relevance_filter(self.position_m, horizon, std::span{&sender, 1},
                         cfg_.relevance_distance_m)
            .empty())
      return;

    const std::uint64_t data_ms = std::max(self.timestamp_ms, sender.timestamp_ms);
    for (RoadUserState* s : {&self, &sender}) {
      const double dt = static_cast<double>(data_ms - s->timestamp_ms) / 1000.0;
      s->position_m += effective_velocity(*s) * dt;
      s->timestamp_ms = data_ms;
    }
    const CollisionAssessment a = assess_pair(self, sender, cfg_.policy);
    if (a.danger < DangerLevel::Warning) return;

    const std::uint32_t ttc_ms =
        a.ttc_s ? std::max<std::uint32_t>(
                      1, static_cast<std::uint32_t>(std::llround(*a.ttc_s * 1000.0)))
                : 0;
    const bool admitted =
        broker_.enforce_frequency(d.recipient, MessageKind::Denm, t);
    const std::uint32_t event_id = admitted ? next_client_event_id_++ : 0;
    // The assessing client warns itself locally either way; the cap only
    // limits what goes out on the air.
    emit(t, WarningPresented{self_idx, d.recipient, a.danger, ttc_ms, event_id});
    if (!admitted) return;

    const Vec2 conflict = (self.position_m + effective_velocity(self) * a.t_cpa_s +
                           sender.position_m + effective_velocity(sender) * a.t_cpa_s) *
                          0.5;
    DenmMessage denm;
    denm.event_id = event_id;
    denm.event_type = EventType::CollisionRisk;
    denm.pos_x_cm = to_cm(conflict.x);
    denm.pos_y_cm = to_cm(conflict.y);
    denm.danger = a.danger;
    denm.ttc_ms = ttc_ms;
    denm.validity_ms = cfg_.policy.denm_validity_ms;
    const double radius =
        std::max(required_range(self.profile, req_), required_range(sender.profile, req_));
    denm.relevance_radius_m = static_cast<std::uint16_t>(std::min(radius, 65535.0));
    denm.target_pseudonyms = {std::min(d.recipient, sender.pseudonym),
                              std::max(d.recipient, sender.pseudonym)};
    publish_denm(d.recipient, denm, cell_of(conflict, cfg_.cell_size_m), t);
  }

  void record_ground_truth() {
    for (const auto& gt : detect_ground_truth_collisions(cfg_)) {
      const double t_ms = gt.time_s * 1000.0;
      emit(t_ms, GroundTruthCollision{gt.actor_a, gt.actor_b, pseudonym_at(gt.actor_a, t_ms),
                                      pseudonym_at(gt.actor_b, t_ms)});
    }
  }

  const ScenarioConfig& cfg_;
  RequirementProfile req_{};
  Broker broker_;
  std::optional<StationState> station_;
  PseudonymId station_id_{};
  std::vector<HopKind> upstream_, downstream_;
  std::vector<ActorRuntime> actors_;
  std::vector<std::vector<PseudonymId>> schedule_;
  std::map<std::uint32_t, std::uint32_t> pseud_owner_; // value -> latest actor
  std::priority_queue<Pending, std::vector<Pending>, PendingAfter> heap_;
  std::vector<TraceEvent> events_;
  std::uint64_t seq_ = 0;
  std::uint32_t peak_zone_ = 0;
  std::uint64_t pseudonym_collisions_ = 0;
  std::uint32_t next_client_event_id_ = 1;
};

} // namespace

SimulationTrace run(const ScenarioConfig& config) {
  config.validate();
  Engine engine(config);
  return engine.run();
}

} // namespace vrusim
