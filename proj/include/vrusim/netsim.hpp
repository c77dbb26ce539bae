#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "vrusim/geocast.hpp"
#include "vrusim/messages.hpp"
#include "vrusim/risk.hpp"
#include "vrusim/rng.hpp"

// Transport layer: a topic broker with per-sender frequency gates, hop
// latency models per pipeline mode, and the processing station that turns
// awareness streams into targeted warnings.
//
// Pipeline modes mirror three deployment shapes:
//   Central    client -> edge -> server, assessment at the server
//   Edge       client -> edge, assessment at the edge (no backbone hops)
//   DirectLink peer-to-peer single hop, assessment on the receiving device
// One station instance serves the whole scenario in Central and Edge modes
// (multi-edge hand-off is an extension point, not modeled).

namespace vrusim {

enum class PipelineMode : std::uint8_t { Central = 0, Edge = 1, DirectLink = 2 };

const char* to_string(PipelineMode m);
PipelineMode pipeline_from_string(const std::string& s);

// Station identities on the wire. Actor pseudonym rotation never emits these
// two values, so per-sender accounting cannot alias a station.
inline constexpr PseudonymId kServerStationId{0};
inline constexpr PseudonymId kEdgeStationId{1};

enum class LatencyKind : std::uint8_t { Fixed = 0, UniformJitter = 1, LogNormal = 2 };

struct LinkLatencyModel {
  LatencyKind kind = LatencyKind::Fixed;
  double base_ms = 50.0;
  double jitter_ms = 0.0; // UniformJitter: latency = base + U(0, jitter)
  double sigma = 0.0;     // LogNormal: latency = base * exp(sigma*z - sigma^2/2), mean = base
  double drop_probability = 0.0;

  double sample_ms(CounterRng& rng) const; // > 0
  bool sample_drop(CounterRng& rng) const;
  void validate() const; // throws std::invalid_argument
};

enum class HopKind : std::uint8_t {
  ClientEdge = 0,
  EdgeServer = 1,
  ServerEdge = 2,
  EdgeClient = 3,
  Direct = 4,
};

const char* to_string(HopKind h);

struct Hop {
  HopKind kind = HopKind::Direct;
  double latency_ms = 0.0;
  bool operator==(const Hop&) const = default;
};

// Up to four hops per delivery (client-edge-server-edge-client worst case).
struct HopList {
  std::array<Hop, 4> hops{};
  std::uint8_t count = 0;
  void push(Hop h) { hops[count++] = h; }
  double total_ms() const;
  std::span<const Hop> view() const { return {hops.data(), count}; }
  bool operator==(const HopList&) const = default;
};

struct LatencyConfig {
  LinkLatencyModel access{LatencyKind::Fixed, 50.0, 0.0, 0.0, 0.0};   // client <-> edge
  LinkLatencyModel backbone{LatencyKind::Fixed, 20.0, 0.0, 0.0, 0.0}; // edge <-> server
  LinkLatencyModel direct{LatencyKind::Fixed, 5.0, 0.0, 0.0, 0.0};    // peer <-> peer

  const LinkLatencyModel& model_for(HopKind h) const;
  void validate() const;
};

// Hop sequence a message traverses from a publishing client up to the
// processing station, and from the station down to a subscribed client.
std::vector<HopKind> upstream_chain(PipelineMode mode);
std::vector<HopKind> downstream_chain(PipelineMode mode);

struct MessageEnvelope {
  MessageKind kind = MessageKind::Vam;
  PseudonymId sender{};
  TopicId topic;
  std::vector<std::uint8_t> payload;
  double publish_time_ms = 0.0;
};

struct DeliveryEvent {
  MessageEnvelope envelope;
  PseudonymId recipient{};
  double delivery_time_ms = 0.0; // publish time + sum of hop latencies
  HopList hops;
};

struct PublishError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sliding-window rate gate: a publication at time t is admissible iff fewer
// than max_hz publications were accepted in (t - 1000 ms, t].
class FrequencyWindow {
 public:
  bool admissible(double now_ms, std::uint32_t max_hz) const;
  void record(double now_ms);

 private:
  std::deque<double> accepted_;
};

class Broker {
 public:
  Broker(PipelineMode mode, LatencyConfig latency, std::uint64_t rng_seed,
         std::uint32_t vam_max_hz = 10, std::uint32_t denm_max_hz = 5);

  PipelineMode mode() const { return mode_; }
  const LatencyConfig& latency() const { return latency_; }

  void register_client(PseudonymId client);
  void unregister_client(PseudonymId client); // drops subscriptions and gates
  bool is_registered(PseudonymId client) const;

  // Idempotent set union; unknown client is an error.
  void subscribe(PseudonymId client, std::span<const GridCell> cells);
  void unsubscribe(PseudonymId client, std::span<const GridCell> cells);
  std::vector<PseudonymId> subscribers_of(const GridCell& cell) const; // sorted
  std::vector<GridCell> subscriptions_of(PseudonymId client) const;    // sorted

  // Rate check without consuming budget; stations are always admissible.
  bool enforce_frequency(PseudonymId sender, MessageKind kind, double now_ms) const;

  // Fan out one envelope to the subscribers of its topic, excluding the
  // sender, with independently sampled per-recipient hop latencies along
  // `chain`. Records the sender's rate budget. Throws PublishError on an
  // oversized payload or a rate violation; a hop drop silently removes that
  // recipient. Results are ordered by recipient pseudonym.
  std::vector<DeliveryEvent> publish(const MessageEnvelope& envelope, double now_ms,
                                     std::span<const HopKind> chain);

  // Point-to-point variant used for client -> station ingestion (stations
  // are not topic subscribers). Empty result = dropped en route.
  std::optional<DeliveryEvent> send_to_station(const MessageEnvelope& envelope, double now_ms,
                                               PseudonymId station,
                                               std::span<const HopKind> chain);

  void mark_station(PseudonymId id) { stations_.insert(stations_.end(), id); }

 private:
  bool is_station(PseudonymId id) const;
  void check_and_record(const MessageEnvelope& envelope, double now_ms);
  std::optional<HopList> sample_chain(std::span<const HopKind> chain);

  PipelineMode mode_;
  LatencyConfig latency_;
  std::uint64_t rng_seed_;
  std::uint64_t draw_counter_ = 0;
  std::uint32_t vam_max_hz_;
  std::uint32_t denm_max_hz_;
  std::map<PseudonymId, std::array<FrequencyWindow, 2>> gates_; // [vam, denm]
  std::map<GridCell, std::vector<PseudonymId>> topic_subs_;     // sorted vectors
  std::map<PseudonymId, std::vector<GridCell>> client_subs_;
  std::vector<PseudonymId> stations_;
};

// Processing station (central server or edge instance): keeps the latest
// state per pseudonym from decoded awareness messages, evicts entries older
// than the staleness window, assesses every pair touched by an arrival batch
// and emits one warning per pair at Warning or above. All risk math runs in
// the data timebase (the batch's newest message timestamp), which keeps
// central and edge assessments identical for the same world history.
class StationState {
 public:
  StationState(PseudonymId station_id, WarningPolicy policy, std::uint32_t staleness_ms,
               std::uint32_t cell_size_m, RequirementProfile req = {});

  PseudonymId id() const { return id_; }

  struct Emission {
    DenmMessage denm;
    GridCell topic_cell;
  };
  std::vector<Emission> process_batch(std::span<const VamMessage> batch);

  std::size_t table_size() const { return table_.size(); }
  bool use_parallel_sweep = true;

 private:
  PseudonymId id_;
  WarningPolicy policy_;
  std::uint32_t staleness_ms_;
  std::uint32_t cell_size_m_;
  RequirementProfile req_;
  std::uint32_t next_event_id_ = 1;
  std::map<std::uint32_t, RoadUserState> table_; // keyed by pseudonym value
};

// Decoded VAM -> kinematic state in the local frame.
RoadUserState state_from_vam(const VamMessage& m);

// Named pipeline steps; both share StationState semantics, they differ only
// in the hop chains the caller wraps around them.
std::vector<StationState::Emission> server_step(StationState& sa,
                                                std::span<const VamMessage> batch);
std::vector<StationState::Emission> edge_step(StationState& ec,
                                              std::span<const VamMessage> batch);

} // namespace vrusim
