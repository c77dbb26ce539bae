#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vrusim/scenario.hpp"
#include "vrusim/trace.hpp"

namespace vrusim {

// Percentiles are nearest-rank over the sorted sample: p(q) = sorted[ceil(q/100 * N) - 1].
struct LatencyStats {
  std::size_t count = 0;
  double min_ms = 0.0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
};

LatencyStats summarize_latencies(std::vector<double> samples_ms);

struct KindStats {
  std::uint64_t published = 0; // publish attempts that were admitted
  std::uint64_t intended = 0;  // recipients addressed at publish time
  std::uint64_t delivered = 0;
  std::uint32_t max_bytes = 0;
  double max_sender_hz = 0.0; // peak 1 s sliding-window rate over UE senders
  LatencyStats latency;       // per-delivery transit time
};

struct MetricsReport {
  std::string scenario;
  PipelineMode pipeline = PipelineMode::Central;
  double duration_s = 0.0;
  std::uint32_t actor_count = 0;
  KindStats vam;
  KindStats denm;
  // Awareness-data age at warning delivery: delivery time minus the newest
  // sensor timestamp the emitting station had batched.
  LatencyStats warning_e2e;
  std::array<std::uint64_t, 4> warnings_by_danger{}; // indexed by DangerLevel
  std::vector<GtCollision> collisions;
  std::vector<double> warning_lead_s;          // per warned (collision, actor)
  std::uint64_t missed_collision_actors = 0;   // collision actors never warned in time
  std::uint64_t false_alarm_denms = 0;         // warnings with no matching collision
  std::uint32_t peak_zone_users = 0;
  std::uint64_t pseudonym_collisions = 0;
};

MetricsReport compute_metrics(const SimulationTrace& trace);

enum class Verdict : std::uint8_t { Pass = 0, Fail = 1, NotApplicable = 2 };
const char* to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct RequirementRow {
  std::string id;          // stable key, e.g. "latency"
  std::string requirement; // what must hold
  std::string observed;    // what the trace showed
  Verdict verdict = Verdict::NotApplicable;
};

// Service-requirement grading of one run. Rows cover per-profile warning
// range, positioning accuracy, end-to-end latency, update-frequency caps,
// message sizes, zone scalability, and warning bidirectionality.
std::vector<RequirementRow> check_requirements(const SimulationTrace& trace,
                                               const MetricsReport& report,
                                               const RequirementProfile& req = {});

struct GradeReport {
  MetricsReport metrics;
  std::vector<RequirementRow> rows;
};

GradeReport grade(const SimulationTrace& trace, const RequirementProfile& req = {});

// Internal-consistency audit; returns human-readable problems (empty = clean).
// Checks event ordering, delivery causality, hop-sum arithmetic, and per-UE
// frequency caps as observed in the trace.
std::vector<std::string> audit_trace(const SimulationTrace& trace);

std::string report_to_json(const GradeReport& report, int indent = 2);
GradeReport report_from_json(const std::string& text);
std::string report_to_text(const GradeReport& report);

} // namespace vrusim
