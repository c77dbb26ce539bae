#include "vrusim/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vrusim/sweep.hpp"

namespace vrusim {

const char* to_string(PipelineMode m) {
  switch (m) {
    case PipelineMode::Central: return "central";
    case PipelineMode::Edge: return "edge";
    case PipelineMode::DirectLink: return "direct";
  }
  return "unknown";
}

PipelineMode pipeline_from_string(const std::string& s) {
  if (s == "central") return PipelineMode::Central;
  if (s == "edge") return PipelineMode::Edge;
  if (s == "direct") return PipelineMode::DirectLink;
  throw std::invalid_argument("unknown pipeline mode: " + s);
}

const char* to_string(HopKind h) {
  switch (h) {
    case HopKind::ClientEdge: return "client_edge";
    case HopKind::EdgeServer: return "edge_server";
    case HopKind::ServerEdge: return "server_edge";
    case HopKind::EdgeClient: return "edge_client";
    case HopKind::Direct: return "direct";
  }
  return "unknown";
}

double LinkLatencyModel::sample_ms(CounterRng& rng) const {
  switch (kind) {
    case LatencyKind::Fixed: return base_ms;
    case LatencyKind::UniformJitter: return base_ms + rng.next_uniform(0.0, jitter_ms);
    case LatencyKind::LogNormal:
      return base_ms * std::exp(sigma * rng.next_normal() - 0.5 * sigma * sigma);
  }
  return base_ms;
}

bool LinkLatencyModel::sample_drop(CounterRng& rng) const {
  if (drop_probability <= 0.0) return false;
  return rng.next_unit() < drop_probability;
}

void LinkLatencyModel::validate() const {
  if (!(base_ms > 0.0)) throw std::invalid_argument("latency base_ms must be positive");
  if (!(jitter_ms >= 0.0)) throw std::invalid_argument("jitter_ms must be nonnegative");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0))
    throw std::invalid_argument("drop_probability must be in [0, 1]");
}

double HopList::total_ms() const {
  double sum = 0.0;
  for (std::uint8_t i = 0; i < count; ++i) sum += hops[i].latency_ms;
  return sum;
}

const LinkLatencyModel& LatencyConfig::model_for(HopKind h) const {
  switch (h) {
    case HopKind::ClientEdge:
    case HopKind::EdgeClient: return access;
    case HopKind::EdgeServer:
    case HopKind::ServerEdge: return backbone;
    case HopKind::Direct: return direct;
  }
  return access;
}

void LatencyConfig::validate() const {
  access.validate();
  backbone.validate();
  direct.validate();
}

std::vector<HopKind> upstream_chain(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::Central: return {HopKind::ClientEdge, HopKind::EdgeServer};
    case PipelineMode::Edge: return {HopKind::ClientEdge};
    case PipelineMode::DirectLink: return {HopKind::Direct};
  }
  return {};
}

std::vector<HopKind> downstream_chain(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::Central: return {HopKind::ServerEdge, HopKind::EdgeClient};
    case PipelineMode::Edge: return {HopKind::EdgeClient};
    case PipelineMode::DirectLink: return {HopKind::Direct};
  }
  return {};
}

bool FrequencyWindow::admissible(double now_ms, std::uint32_t max_hz) const {
  std::size_t live = 0;
  for (auto it = accepted_.rbegin(); it != accepted_.rend(); ++it) {
    if (*it <= now_ms - 1000.0) break;
    ++live;
  }
  return live < max_hz;
}

void FrequencyWindow::record(double now_ms) {
  accepted_.push_back(now_ms);
  while (!accepted_.empty() && accepted_.front() <= now_ms - 1000.0) accepted_.pop_front();
}

Broker::Broker(PipelineMode mode, LatencyConfig latency, std::uint64_t rng_seed,
               std::uint32_t vam_max_hz, std::uint32_t denm_max_hz)
    : mode_(mode), latency_(latency), rng_seed_(rng_seed), vam_max_hz_(vam_max_hz),
      denm_max_hz_(denm_max_hz) {
  latency_.validate();
  if (vam_max_hz_ == 0 || denm_max_hz_ == 0)
    throw std::invalid_argument("frequency caps must be positive");
}

void Broker::register_client(PseudonymId client) {
  gates_.try_emplace(client);
  client_subs_.try_emplace(client);
}

void Broker::unregister_client(PseudonymId client) {
  if (auto it = client_subs_.find(client); it != client_subs_.end()) {
    const auto cells = std::move(it->second); // unsubscribe mutates the live list
    unsubscribe(client, cells);
    client_subs_.erase(client);
  }
  gates_.erase(client);
}

bool Broker::is_registered(PseudonymId client) const { return client_subs_.contains(client); }

void Broker::subscribe(PseudonymId client, std::span<const GridCell> cells) {
  auto it = client_subs_.find(client);
  if (it == client_subs_.end()) throw std::invalid_argument("subscribe: unknown client");
  for (const auto& cell : cells) {
    auto& subs = topic_subs_[cell];
    auto pos = std::lower_bound(subs.begin(), subs.end(), client);
    if (pos != subs.end() && *pos == client) continue;
    subs.insert(pos, client);
    auto cpos = std::lower_bound(it->second.begin(), it->second.end(), cell);
    it->second.insert(cpos, cell);
  }
}

void Broker::unsubscribe(PseudonymId client, std::span<const GridCell> cells) {
  auto it = client_subs_.find(client);
  if (it == client_subs_.end()) throw std::invalid_argument("unsubscribe: unknown client");
  for (const auto& cell : cells) {
    if (auto t = topic_subs_.find(cell); t != topic_subs_.end()) {
      auto pos = std::lower_bound(t->second.begin(), t->second.end(), client);
      if (pos != t->second.end() && *pos == client) t->second.erase(pos);
      if (t->second.empty()) topic_subs_.erase(t);
    }
    auto cpos = std::lower_bound(it->second.begin(), it->second.end(), cell);
    if (cpos != it->second.end() && *cpos == cell) it->second.erase(cpos);
  }
}

std::vector<PseudonymId> Broker::subscribers_of(const GridCell& cell) const {
  if (auto it = topic_subs_.find(cell); it != topic_subs_.end()) return it->second;
  return {};
}

std::vector<GridCell> Broker::subscriptions_of(PseudonymId client) const {
  if (auto it = client_subs_.find(client); it != client_subs_.end()) return it->second;
  return {};
}

bool Broker::is_station(PseudonymId id) const {
  return std::find(stations_.begin(), stations_.end(), id) != stations_.end();
}

bool Broker::enforce_frequency(PseudonymId sender, MessageKind kind, double now_ms) const {
  if (is_station(sender)) return true;
  const auto it = gates_.find(sender);
  if (it == gates_.end()) return true; // no history yet
  const bool is_vam = kind == MessageKind::Vam;
  return it->second[is_vam ? 0 : 1].admissible(now_ms, is_vam ? vam_max_hz_ : denm_max_hz_);
}

void Broker::check_and_record(const MessageEnvelope& envelope, double now_ms) {
  const std::size_t cap =
      envelope.kind == MessageKind::Vam ? kVamMaxBytes : kDenmMaxBytes;
  if (envelope.payload.size() > cap) throw PublishError("oversized payload");
  if (is_station(envelope.sender)) return;
  if (!enforce_frequency(envelope.sender, envelope.kind, now_ms))
    throw PublishError("sender frequency cap exceeded");
  auto& gate = gates_[envelope.sender];
  gate[envelope.kind == MessageKind::Vam ? 0 : 1].record(now_ms);
}

std::optional<HopList> Broker::sample_chain(std::span<const HopKind> chain) {
  CounterRng rng(mix(rng_seed_, kStreamLatency, ++draw_counter_));
  HopList hops;
  for (HopKind h : chain) {
    const auto& model = latency_.model_for(h);
    if (model.sample_drop(rng)) return std::nullopt;
    hops.push({h, model.sample_ms(rng)});
  }
  return hops;
}

std::vector<DeliveryEvent> Broker::publish(const MessageEnvelope& envelope, double now_ms,
                                           std::span<const HopKind> chain) {
  check_and_record(envelope, now_ms);
  const GridCell cell = parse_topic(envelope.topic);
  std::vector<DeliveryEvent> out;
  for (PseudonymId recipient : subscribers_of(cell)) {
    if (recipient == envelope.sender) continue;
    auto hops = sample_chain(chain);
    if (!hops) continue; // dropped en route
    out.push_back({envelope, recipient, now_ms + hops->total_ms(), *hops});
  }
  return out;
}

std::optional<DeliveryEvent> Broker::send_to_station(const MessageEnvelope& envelope,
                                                     double now_ms, PseudonymId station,
                                                     std::span<const HopKind> chain) {
  check_and_record(envelope, now_ms);
  auto hops = sample_chain(chain);
  if (!hops) return std::nullopt;
  return DeliveryEvent{envelope, station, now_ms + hops->total_ms(), *hops};
}

RoadUserState state_from_vam(const VamMessage& m) {
  RoadUserState s;
  s.pseudonym = m.pseudonym;
  s.profile = m.profile;
  s.motion_state = m.motion_state;
  s.position_m = {cm_to_m(m.pos_x_cm), cm_to_m(m.pos_y_cm)};
  const double speed = cms_to_mps(m.speed_cms);
  const double heading_rad = cdeg_to_deg(m.heading_cdeg) * 0.017453292519943295;
  s.velocity_ms = {speed * std::cos(heading_rad), speed * std::sin(heading_rad)};
  s.timestamp_ms = m.timestamp_ms;
  s.sigma_m = m.position_accuracy_dm / 10.0;
  return s;
}

StationState::StationState(PseudonymId station_id, WarningPolicy policy,
                           std::uint32_t staleness_ms, std::uint32_t cell_size_m,
                           RequirementProfile req)
    : id_(station_id), policy_(policy), staleness_ms_(staleness_ms), cell_size_m_(cell_size_m),
      req_(req) {}

std::vector<StationState::Emission> StationState::process_batch(
    std::span<const VamMessage> batch) {
  if (batch.empty()) return {};

  std::uint64_t data_time_ms = 0;
  for (const auto& m : batch) data_time_ms = std::max(data_time_ms, m.timestamp_ms);

  for (const auto& m : batch) {
    auto [it, inserted] = table_.try_emplace(m.pseudonym.value, state_from_vam(m));
    if (!inserted && it->second.timestamp_ms <= m.timestamp_ms) it->second = state_from_vam(m);
  }
  // Staleness eviction in the data timebase.
  for (auto it = table_.begin(); it != table_.end();) {
    if (data_time_ms > it->second.timestamp_ms &&
        data_time_ms - it->second.timestamp_ms > staleness_ms_)
      it = table_.erase(it);
    else
      ++it;
  }

  // Snapshot propagated to the data time: constant-velocity prediction from
  // each entry's own message timestamp.
  std::vector<RoadUserState> snapshot;
  snapshot.reserve(table_.size());
  std::vector<std::uint32_t> batch_idx;
  for (const auto& [pseud, entry] : table_) {
    RoadUserState s = entry;
    const double dt = (data_time_ms - entry.timestamp_ms) / 1000.0;
    s.position_m = s.position_m + effective_velocity(s) * dt;
    s.timestamp_ms = data_time_ms;
    snapshot.push_back(s);
  }
  // Snapshot is in table (pseudonym) order, so batch members can be located
  // by binary search. An entry may hold a newer message than the batch member
  // that named it; the assessment uses whatever the table currently knows.
  const auto by_pseudonym = [](const RoadUserState& s, PseudonymId p) {
    return s.pseudonym < p;
  };
  for (const auto& m : batch) {
    const auto it =
        std::lower_bound(snapshot.begin(), snapshot.end(), m.pseudonym, by_pseudonym);
    if (it == snapshot.end() || it->pseudonym != m.pseudonym) continue;
    batch_idx.push_back(static_cast<std::uint32_t>(it - snapshot.begin()));
  }
  std::sort(batch_idx.begin(), batch_idx.end());
  batch_idx.erase(std::unique(batch_idx.begin(), batch_idx.end()), batch_idx.end());

  const auto assessments =
      use_parallel_sweep
          ? assess_batch_parallel(snapshot, batch_idx, policy_, DangerLevel::Warning)
          : assess_batch_serial(snapshot, batch_idx, policy_, DangerLevel::Warning);

  std::vector<Emission> out;
  out.reserve(assessments.size());
  const auto locate = [&](PseudonymId p) -> const RoadUserState* {
    const auto it = std::lower_bound(snapshot.begin(), snapshot.end(), p, by_pseudonym);
    return (it != snapshot.end() && it->pseudonym == p) ? &*it : nullptr;
  };
  for (const auto& a : assessments) {
    const RoadUserState* sa = locate(a.pair.first);
    const RoadUserState* sb = locate(a.pair.second);
    if (!sa || !sb) continue;
    const Vec2 conflict = (sa->position_m + effective_velocity(*sa) * a.t_cpa_s +
                           sb->position_m + effective_velocity(*sb) * a.t_cpa_s) *
                          0.5;
    DenmMessage d;
    d.event_id = next_event_id_++;
    d.event_type = EventType::CollisionRisk;
    d.pos_x_cm = to_cm(conflict.x);
    d.pos_y_cm = to_cm(conflict.y);
    d.danger = a.danger;
    d.ttc_ms = a.ttc_s ? std::max<std::uint32_t>(
                             1, static_cast<std::uint32_t>(std::llround(*a.ttc_s * 1000.0)))
                       : 0;
    d.validity_ms = policy_.denm_validity_ms;
    const double radius = std::max(required_range(sa->profile, req_),
                                   required_range(sb->profile, req_));
    d.relevance_radius_m = static_cast<std::uint16_t>(std::min(radius, 65535.0));
    d.target_pseudonyms = {a.pair.first, a.pair.second};
    out.push_back({std::move(d), cell_of(conflict, cell_size_m_)});
  }
  return out;
}

std::vector<StationState::Emission> server_step(StationState& sa,
                                                std::span<const VamMessage> batch) {
  return sa.process_batch(batch);
}

std::vector<StationState::Emission> edge_step(StationState& ec,
                                              std::span<const VamMessage> batch) {
  return ec.process_batch(batch);
}

} // namespace vrusim
