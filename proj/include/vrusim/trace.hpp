#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "vrusim/config.hpp"
#include "vrusim/geocast.hpp"
#include "vrusim/messages.hpp"
#include "vrusim/netsim.hpp"
#include "vrusim/types.hpp"

namespace vrusim {

// Trace events. One simulation run produces an ordered stream of these; the
// JSONL form (one event per line, header line first) is the interchange
// format between `run`, the grader, and external tooling.

struct RunStarted {
  std::string scenario;
  std::uint32_t actor_count = 0;
};

struct RunEnded {
  std::uint32_t peak_zone_users = 0;      // max concurrent actors in the stats zone
  std::uint64_t pseudonym_collisions = 0; // distinct actors sharing a pseudonym value
};

struct PseudonymAssigned {
  std::uint32_t actor_id = 0;
  PseudonymId pseudonym{};
  std::uint32_t epoch = 0;
};

// Ground-truth (noise-free) kinematic sample at a tick.
struct StateSample {
  std::uint32_t actor_id = 0;
  PseudonymId pseudonym{};
  VruProfile profile = VruProfile::Pedestrian;
  MotionState motion = MotionState::Standing;
  Vec2 position_m{};
  Vec2 velocity_ms{};
  double sigma_m = 0.0;
};

struct VamPublished {
  std::uint32_t actor_id = 0;
  PseudonymId sender{};
  GridCell cell{};
  std::uint32_t bytes = 0;
  std::uint32_t intended = 0; // recipients addressed at publish time
};

struct DenmPublished {
  PseudonymId sender{};
  GridCell cell{};
  std::uint32_t bytes = 0;
  std::uint32_t intended = 0;
  std::uint32_t event_id = 0;
  EventType event_type = EventType::CollisionRisk;
  DangerLevel danger = DangerLevel::None;
  std::uint32_t ttc_ms = 0; // 0 = unknown
  std::uint32_t validity_ms = 0;
  std::uint32_t radius_m = 0;
  Vec2 position_m{};
  std::vector<PseudonymId> targets;
};

struct Delivered {
  MessageKind kind = MessageKind::Vam;
  PseudonymId sender{};
  PseudonymId recipient{};
  GridCell cell{};
  double publish_ms = 0.0;
  HopList hops;
  std::uint32_t event_id = 0; // 0 for VAM deliveries
};

struct WarningPresented {
  std::uint32_t actor_id = 0;
  PseudonymId pseudonym{};
  DangerLevel danger = DangerLevel::None;
  std::uint32_t ttc_ms = 0;
  std::uint32_t event_id = 0;
};

struct GroundTruthCollision {
  std::uint32_t actor_a = 0; // actor_a < actor_b
  std::uint32_t actor_b = 0;
  PseudonymId pseudonym_a{};
  PseudonymId pseudonym_b{};
};

using TraceBody = std::variant<RunStarted, RunEnded, PseudonymAssigned, StateSample,
                               VamPublished, DenmPublished, Delivered, WarningPresented,
                               GroundTruthCollision>;

struct TraceEvent {
  double t_ms = 0.0;
  TraceBody body;
};

// Stable wire tag for each event type ("vam_published", ...).
const char* event_type_name(const TraceBody& body);

struct SimulationTrace {
  ScenarioConfig config;
  std::vector<TraceEvent> events;
};

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// JSONL: header line {"type":"header","version":1,"config":{...}} followed by
// one event object per line in stream order. Writing the same trace twice
// yields identical bytes.
void write_trace_jsonl(const SimulationTrace& trace, std::ostream& out);
void save_trace_jsonl(const SimulationTrace& trace, const std::string& path);
SimulationTrace read_trace_jsonl(std::istream& in);
SimulationTrace load_trace_jsonl(const std::string& path);

} // namespace vrusim
