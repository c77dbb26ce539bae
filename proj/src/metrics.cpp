#include "vrusim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace vrusim {
namespace {

using nlohmann::json;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double percent(std::uint64_t part, std::uint64_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

// Pseudonym assignment history: resolves who owned a wire identity at a
// given instant (rotation makes the mapping time-dependent).
class PseudonymHistory {
 public:
  explicit PseudonymHistory(const SimulationTrace& trace) {
    for (const auto& ev : trace.events)
      if (const auto* p = std::get_if<PseudonymAssigned>(&ev.body))
        by_value_[p->pseudonym.value].push_back({ev.t_ms, p->actor_id});
  }

  std::optional<std::uint32_t> actor_at(PseudonymId pseudonym, double t_ms) const {
    const auto it = by_value_.find(pseudonym.value);
    if (it == by_value_.end()) return std::nullopt;
    std::optional<std::uint32_t> actor;
    for (const auto& [t, a] : it->second) {
      if (t > t_ms) break;
      actor = a;
    }
    return actor;
  }

  bool is_user_equipment(PseudonymId pseudonym) const {
    return by_value_.contains(pseudonym.value);
  }

 private:
  std::map<std::uint32_t, std::vector<std::pair<double, std::uint32_t>>> by_value_;
};

// Peak count of timestamps inside any 1 s sliding window, per sender.
double peak_window_rate(std::map<std::uint32_t, std::vector<double>>& by_sender) {
  std::size_t peak = 0;
  for (auto& [sender, times] : by_sender) {
    std::sort(times.begin(), times.end());
    std::size_t j = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (j < i + 1) j = i + 1;
      while (j < times.size() && times[j] < times[i] + 1000.0) ++j;
      peak = std::max(peak, j - i);
    }
  }
  return static_cast<double>(peak);
}

struct DenmRecord {
  double t_ms = 0.0;
  std::uint32_t event_id = 0;
  PseudonymId sender{};
  std::vector<PseudonymId> targets;
  std::vector<std::uint32_t> target_actors; // resolved at publish time
  DangerLevel danger = DangerLevel::None;
  std::uint32_t validity_ms = 0;
};

struct TraceIndex {
  std::vector<DenmRecord> denms; // danger >= Warning only
  std::set<std::pair<std::uint32_t, std::uint32_t>> denm_deliveries; // (event_id, pseudonym)
  std::set<std::pair<std::uint32_t, std::uint32_t>> self_warnings;   // (event_id, pseudonym)

  bool target_reached(const DenmRecord& d, PseudonymId target) const {
    if (denm_deliveries.contains({d.event_id, target.value})) return true;
    // The publisher of a peer-assessed warning alerts itself locally.
    return target == d.sender && self_warnings.contains({d.event_id, target.value});
  }

  bool fully_delivered(const DenmRecord& d) const {
    return std::all_of(d.targets.begin(), d.targets.end(),
                       [&](PseudonymId t) { return target_reached(d, t); });
  }
};

TraceIndex build_index(const SimulationTrace& trace, const PseudonymHistory& history) {
  TraceIndex ix;
  for (const auto& ev : trace.events) {
    if (const auto* d = std::get_if<DenmPublished>(&ev.body)) {
      if (d->danger < DangerLevel::Warning) continue;
      DenmRecord rec{ev.t_ms, d->event_id, d->sender, d->targets, {}, d->danger,
                     d->validity_ms};
      for (PseudonymId t : d->targets)
        if (auto actor = history.actor_at(t, ev.t_ms)) rec.target_actors.push_back(*actor);
      ix.denms.push_back(std::move(rec));
    } else if (const auto* del = std::get_if<Delivered>(&ev.body)) {
      if (del->kind == MessageKind::Denm)
        ix.denm_deliveries.insert({del->event_id, del->recipient.value});
    } else if (const auto* w = std::get_if<WarningPresented>(&ev.body)) {
      if (w->event_id != 0) ix.self_warnings.insert({w->event_id, w->pseudonym.value});
    }
  }
  return ix;
}

} // namespace

LatencyStats summarize_latencies(std::vector<double> samples_ms) {
  LatencyStats s;
  s.count = samples_ms.size();
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  const auto rank = [&](double q) {
    const auto i = static_cast<std::size_t>(
        std::ceil(q / 100.0 * static_cast<double>(samples_ms.size())));
    return samples_ms[std::max<std::size_t>(i, 1) - 1];
  };
  s.min_ms = samples_ms.front();
  s.max_ms = samples_ms.back();
  s.mean_ms = sum / static_cast<double>(samples_ms.size());
  s.p50_ms = rank(50.0);
  s.p95_ms = rank(95.0);
  s.p99_ms = rank(99.0);
  return s;
}

MetricsReport compute_metrics(const SimulationTrace& trace) {
  MetricsReport r;
  r.scenario = trace.config.name;
  r.pipeline = trace.config.pipeline;
  r.duration_s = trace.config.duration_s;
  r.actor_count = static_cast<std::uint32_t>(trace.config.actors.size());

  const PseudonymHistory history(trace);

  std::vector<double> vam_lat, denm_lat, e2e;
  std::map<std::uint32_t, std::vector<double>> vam_times, denm_times; // UE senders
  // Newest awareness timestamp batched by a station per arrival instant;
  // keys warning end-to-end age to the sensor data behind the warning.
  std::map<std::pair<std::uint32_t, double>, double> newest_vam_at;
  std::map<std::uint32_t, double> denm_publish_t; // event_id -> publish time
  struct ActorWarning {
    double t_ms;
    DangerLevel danger;
  };
  std::map<std::uint32_t, std::vector<ActorWarning>> warned;

  for (const auto& ev : trace.events) {
    if (const auto* v = std::get_if<VamPublished>(&ev.body)) {
      ++r.vam.published;
      r.vam.intended += v->intended;
      r.vam.max_bytes = std::max(r.vam.max_bytes, v->bytes);
      vam_times[v->sender.value].push_back(ev.t_ms);
    } else if (const auto* d = std::get_if<DenmPublished>(&ev.body)) {
      ++r.denm.published;
      r.denm.intended += d->intended;
      r.denm.max_bytes = std::max(r.denm.max_bytes, d->bytes);
      if (history.is_user_equipment(d->sender)) denm_times[d->sender.value].push_back(ev.t_ms);
      denm_publish_t.emplace(d->event_id, ev.t_ms);
    } else if (const auto* del = std::get_if<Delivered>(&ev.body)) {
      const double transit = ev.t_ms - del->publish_ms;
      if (del->kind == MessageKind::Vam) {
        ++r.vam.delivered;
        vam_lat.push_back(transit);
        auto [it, fresh] =
            newest_vam_at.try_emplace({del->recipient.value, ev.t_ms}, del->publish_ms);
        if (!fresh) it->second = std::max(it->second, del->publish_ms);
      } else {
        ++r.denm.delivered;
        denm_lat.push_back(transit);
        const auto pub = denm_publish_t.find(del->event_id);
        if (pub != denm_publish_t.end()) {
          const auto data =
              newest_vam_at.find({del->sender.value, pub->second});
          if (data != newest_vam_at.end()) e2e.push_back(ev.t_ms - data->second);
        }
      }
    } else if (const auto* w = std::get_if<WarningPresented>(&ev.body)) {
      ++r.warnings_by_danger[static_cast<std::size_t>(w->danger)];
      warned[w->actor_id].push_back({ev.t_ms, w->danger});
    } else if (const auto* g = std::get_if<GroundTruthCollision>(&ev.body)) {
      r.collisions.push_back({g->actor_a, g->actor_b, ev.t_ms / 1000.0});
    } else if (const auto* e = std::get_if<RunEnded>(&ev.body)) {
      r.peak_zone_users = e->peak_zone_users;
      r.pseudonym_collisions = e->pseudonym_collisions;
    }
  }

  r.vam.latency = summarize_latencies(std::move(vam_lat));
  r.denm.latency = summarize_latencies(std::move(denm_lat));
  r.warning_e2e = summarize_latencies(std::move(e2e));
  r.vam.max_sender_hz = peak_window_rate(vam_times);
  r.denm.max_sender_hz = peak_window_rate(denm_times);

  for (const auto& c : r.collisions) {
    const double t_c_ms = c.time_s * 1000.0;
    for (std::uint32_t actor : {c.actor_a, c.actor_b}) {
      std::optional<double> first;
      const auto it = warned.find(actor);
      if (it != warned.end())
        for (const auto& w : it->second)
          if (w.danger >= DangerLevel::Warning && w.t_ms <= t_c_ms) {
            first = w.t_ms;
            break;
          }
      if (first)
        r.warning_lead_s.push_back((t_c_ms - *first) / 1000.0);
      else
        ++r.missed_collision_actors;
    }
  }

  // A warning-grade alert is a false alarm when the targeted pair has no
  // ground-truth collision within the alert's validity span on either side:
  // alerts repeated while contact is in progress are about a real event.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>> collision_times;
  for (const auto& c : r.collisions)
    collision_times[{c.actor_a, c.actor_b}].push_back(c.time_s * 1000.0);
  for (const auto& d : build_index(trace, history).denms) {
    bool matched = false;
    if (d.target_actors.size() == d.targets.size() && !d.target_actors.empty()) {
      auto pair = std::minmax_element(d.target_actors.begin(), d.target_actors.end());
      const auto it = collision_times.find({*pair.first, *pair.second});
      if (it != collision_times.end())
        for (double t_c : it->second)
          if (std::abs(t_c - d.t_ms) <= d.validity_ms) {
            matched = true;
            break;
          }
    }
    if (!matched) ++r.false_alarm_denms;
  }
  return r;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::NotApplicable: return "not_applicable";
  }
  return "unknown";
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "pass") return Verdict::Pass;
  if (s == "fail") return Verdict::Fail;
  if (s == "not_applicable") return Verdict::NotApplicable;
  throw TraceError("unknown verdict: " + s);
}

std::vector<RequirementRow> check_requirements(const SimulationTrace& trace,
                                               const MetricsReport& report,
                                               const RequirementProfile& req) {
  const PseudonymHistory history(trace);
  const TraceIndex ix = build_index(trace, history);
  std::vector<RequirementRow> rows;

  // Warning range per profile: graded on the warnings the run actually
  // exchanged. Separation is measured between the targets' true positions at
  // publish time; the row passes when every such warning reached all its
  // targets.
  struct ProfileRange {
    VruProfile profile;
    const char* id;
    double range_m;
  };
  const ProfileRange ranges[] = {
      {VruProfile::Pedestrian, "range_pedestrian", req.range_pedestrian_m},
      {VruProfile::Cyclist, "range_cyclist", req.range_cyclist_m},
      {VruProfile::Motorcyclist, "range_motorcyclist", req.range_motorcyclist_m},
      {VruProfile::Infrastructure, "range_infrastructure", req.range_infrastructure_m},
  };
  for (const auto& pr : ranges) {
    RequirementRow row;
    row.id = pr.id;
    row.requirement = std::string("warnings for ") + to_string(pr.profile) +
                      " deliverable at up to " + fmt("%.0f", pr.range_m) + " m separation";
    const bool present = std::any_of(
        trace.config.actors.begin(), trace.config.actors.end(),
        [&](const ActorSpec& a) { return a.profile == pr.profile; });
    if (!present) {
      row.observed = "profile not present in scenario";
      rows.push_back(std::move(row));
      continue;
    }
    std::uint64_t attributed = 0, reached = 0;
    double max_sep = 0.0;
    for (const auto& d : ix.denms) {
      if (d.target_actors.size() != d.targets.size()) continue;
      const bool involves = std::any_of(
          d.target_actors.begin(), d.target_actors.end(), [&](std::uint32_t a) {
            return trace.config.actors[a].profile == pr.profile;
          });
      if (!involves) continue;
      ++attributed;
      if (ix.fully_delivered(d)) ++reached;
      if (d.target_actors.size() == 2) {
        const auto t_ms = static_cast<std::uint64_t>(d.t_ms);
        const Vec2 pa =
            state_at(trace.config.actors[d.target_actors[0]], d.target_actors[0], t_ms)
                .position_m;
        const Vec2 pb =
            state_at(trace.config.actors[d.target_actors[1]], d.target_actors[1], t_ms)
                .position_m;
        max_sep = std::max(max_sep, (pa - pb).norm());
      }
    }
    if (attributed == 0) {
      row.observed = "no warnings involved this profile";
      rows.push_back(std::move(row));
      continue;
    }
    row.observed = std::to_string(reached) + "/" + std::to_string(attributed) +
                   " warnings delivered, max pair separation " + fmt("%.1f", max_sep) + " m";
    row.verdict = reached == attributed ? Verdict::Pass : Verdict::Fail;
    rows.push_back(std::move(row));
  }

  {
    RequirementRow row;
    row.id = "positioning";
    row.requirement =
        "position error sigma <= " + fmt("%.1f", req.positioning_sigma_max_m) + " m";
    row.observed = "sigma = " + fmt("%.2f", trace.config.noise_sigma_m) + " m";
    row.verdict = trace.config.noise_sigma_m <= req.positioning_sigma_max_m ? Verdict::Pass
                                                                            : Verdict::Fail;
    rows.push_back(std::move(row));
  }

  Verdict latency_verdict = Verdict::NotApplicable;
  {
    RequirementRow row;
    row.id = "latency";
    row.requirement = "warning end-to-end p99 <= " + fmt("%.0f", req.latency_max_ms) +
                      " ms (target " + fmt("%.0f", req.latency_target_ms) + " ms)";
    if (report.warning_e2e.count > 0) {
      row.observed = "e2e p99 = " + fmt("%.1f", report.warning_e2e.p99_ms) + " ms over " +
                     std::to_string(report.warning_e2e.count) + " deliveries";
      row.verdict =
          report.warning_e2e.p99_ms <= req.latency_max_ms ? Verdict::Pass : Verdict::Fail;
    } else if (report.vam.latency.count > 0) {
      row.observed = "no warnings; awareness transit p99 = " +
                     fmt("%.1f", report.vam.latency.p99_ms) + " ms";
      row.verdict =
          report.vam.latency.p99_ms <= req.latency_max_ms ? Verdict::Pass : Verdict::Fail;
    } else {
      row.observed = "no deliveries";
    }
    latency_verdict = row.verdict;
    rows.push_back(std::move(row));
  }

  {
    RequirementRow row;
    row.id = "update_frequency";
    row.requirement = "per-sender rate <= " + std::to_string(req.max_frequency_hz) +
                      " Hz awareness, <= 5 Hz warnings";
    row.observed = "peak " + fmt("%.0f", report.vam.max_sender_hz) + " Hz awareness, " +
                   fmt("%.0f", report.denm.max_sender_hz) + " Hz warnings";
    row.verdict = report.vam.max_sender_hz <= req.max_frequency_hz &&
                          report.denm.max_sender_hz <= 5.0
                      ? Verdict::Pass
                      : Verdict::Fail;
    rows.push_back(std::move(row));
  }

  {
    RequirementRow row;
    row.id = "message_size";
    row.requirement = "awareness <= " + fmt("%.0f", req.vam_max_bytes) +
                      " B, warning <= " + fmt("%.0f", req.denm_max_bytes) + " B";
    row.observed = "max " + std::to_string(report.vam.max_bytes) + " B awareness, " +
                   std::to_string(report.denm.max_bytes) + " B warning";
    row.verdict = report.vam.max_bytes <= req.vam_max_bytes &&
                          (report.denm.published == 0 ||
                           report.denm.max_bytes <= req.denm_max_bytes)
                      ? Verdict::Pass
                      : Verdict::Fail;
    rows.push_back(std::move(row));
  }

  {
    RequirementRow row;
    row.id = "scalability";
    row.requirement = "zone sustains " + fmt("%.0f", req.max_users_per_zone) +
                      " users within the latency bound";
    if (report.peak_zone_users < req.max_users_per_zone) {
      row.observed =
          "peak " + std::to_string(report.peak_zone_users) + " users, load not exercised";
    } else {
      row.observed = "peak " + std::to_string(report.peak_zone_users) + " users";
      row.verdict = latency_verdict == Verdict::Pass ? Verdict::Pass : Verdict::Fail;
    }
    rows.push_back(std::move(row));
  }

  {
    RequirementRow row;
    row.id = "bidirectional";
    row.requirement = "every warning reaches both the vehicle and the road user";
    if (ix.denms.empty()) {
      row.observed = "no warnings emitted";
    } else {
      std::uint64_t ok = 0;
      for (const auto& d : ix.denms)
        if (ix.fully_delivered(d)) ++ok;
      row.observed = std::to_string(ok) + "/" + std::to_string(ix.denms.size()) +
                     " warnings reached all targets";
      row.verdict = ok == ix.denms.size() ? Verdict::Pass : Verdict::Fail;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

GradeReport grade(const SimulationTrace& trace, const RequirementProfile& req) {
  GradeReport g;
  g.metrics = compute_metrics(trace);
  g.rows = check_requirements(trace, g.metrics, req);
  return g;
}

std::vector<std::string> audit_trace(const SimulationTrace& trace) {
  std::vector<std::string> problems;
  const auto note = [&](std::size_t i, const std::string& what) {
    problems.push_back("event " + std::to_string(i) + ": " + what);
  };
  if (trace.events.empty()) return {"trace has no events"};
  if (!std::holds_alternative<RunStarted>(trace.events.front().body))
    problems.push_back("first event is not run_started");
  if (!std::holds_alternative<RunEnded>(trace.events.back().body))
    problems.push_back("last event is not run_ended");

  const PseudonymHistory history(trace);
  std::set<std::uint32_t> known_events;
  std::map<std::pair<std::uint32_t, int>, std::vector<double>> sender_times;
  double prev_t = trace.events.front().t_ms;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto& ev = trace.events[i];
    if (ev.t_ms < prev_t) note(i, "timestamps decrease");
    prev_t = ev.t_ms;
    if (const auto* v = std::get_if<VamPublished>(&ev.body)) {
      sender_times[{v->sender.value, 0}].push_back(ev.t_ms);
    } else if (const auto* d = std::get_if<DenmPublished>(&ev.body)) {
      known_events.insert(d->event_id);
      if (history.is_user_equipment(d->sender))
        sender_times[{d->sender.value, 1}].push_back(ev.t_ms);
    } else if (const auto* del = std::get_if<Delivered>(&ev.body)) {
      if (!(ev.t_ms > del->publish_ms)) note(i, "delivery does not follow publication");
      if (std::abs((ev.t_ms - del->publish_ms) - del->hops.total_ms()) > 1e-6)
        note(i, "hop latencies do not sum to the transit time");
      if (del->kind == MessageKind::Denm && !known_events.contains(del->event_id))
        note(i, "delivery references an unpublished warning");
    } else if (const auto* w = std::get_if<WarningPresented>(&ev.body)) {
      if (w->event_id != 0 && !known_events.contains(w->event_id))
        note(i, "warning references an unpublished event id");
    }
  }
  for (auto& [key, times] : sender_times) {
    const auto cap = static_cast<std::size_t>(key.second == 0 ? 10 : 5);
    std::size_t j = 0;
    bool flagged = false;
    for (std::size_t i = 0; i < times.size() && !flagged; ++i) {
      if (j < i + 1) j = i + 1;
      while (j < times.size() && times[j] < times[i] + 1000.0) ++j;
      if (j - i > cap) {
        problems.push_back("sender " + std::to_string(key.first) + " exceeds the " +
                           std::to_string(cap) + " Hz cap");
        flagged = true;
      }
    }
  }
  return problems;
}

namespace {

json stats_json(const LatencyStats& s) {
  return {{"count", s.count},   {"min_ms", s.min_ms}, {"mean_ms", s.mean_ms},
          {"p50_ms", s.p50_ms}, {"p95_ms", s.p95_ms}, {"p99_ms", s.p99_ms},
          {"max_ms", s.max_ms}};
}

LatencyStats stats_of(const json& j) {
  LatencyStats s;
  s.count = j.at("count").get<std::size_t>();
  s.min_ms = j.at("min_ms").get<double>();
  s.mean_ms = j.at("mean_ms").get<double>();
  s.p50_ms = j.at("p50_ms").get<double>();
  s.p95_ms = j.at("p95_ms").get<double>();
  s.p99_ms = j.at("p99_ms").get<double>();
  s.max_ms = j.at("max_ms").get<double>();
  return s;
}

json kind_json(const KindStats& k) {
  return {{"published", k.published},   {"intended", k.intended},
          {"delivered", k.delivered},   {"max_bytes", k.max_bytes},
          {"max_sender_hz", k.max_sender_hz}, {"latency", stats_json(k.latency)}};
}

KindStats kind_of(const json& j) {
  KindStats k;
  k.published = j.at("published").get<std::uint64_t>();
  k.intended = j.at("intended").get<std::uint64_t>();
  k.delivered = j.at("delivered").get<std::uint64_t>();
  k.max_bytes = j.at("max_bytes").get<std::uint32_t>();
  k.max_sender_hz = j.at("max_sender_hz").get<double>();
  k.latency = stats_of(j.at("latency"));
  return k;
}

} // namespace

std::string report_to_json(const GradeReport& report, int indent) {
  const MetricsReport& m = report.metrics;
  json collisions = json::array();
  for (const auto& c : m.collisions)
    collisions.push_back(
        {{"actor_a", c.actor_a}, {"actor_b", c.actor_b}, {"time_s", c.time_s}});
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"id", r.id},
                    {"requirement", r.requirement},
                    {"observed", r.observed},
                    {"verdict", to_string(r.verdict)}});
  const json j = {
      {"metrics",
       {{"scenario", m.scenario},
        {"pipeline", to_string(m.pipeline)},
        {"duration_s", m.duration_s},
        {"actor_count", m.actor_count},
        {"vam", kind_json(m.vam)},
        {"denm", kind_json(m.denm)},
        {"warning_e2e", stats_json(m.warning_e2e)},
        {"warnings_by_danger",
         {{"none", m.warnings_by_danger[0]},
          {"awareness", m.warnings_by_danger[1]},
          {"warning", m.warnings_by_danger[2]},
          {"imminent", m.warnings_by_danger[3]}}},
        {"collisions", collisions},
        {"warning_lead_s", m.warning_lead_s},
        {"missed_collision_actors", m.missed_collision_actors},
        {"false_alarm_denms", m.false_alarm_denms},
        {"peak_zone_users", m.peak_zone_users},
        {"pseudonym_collisions", m.pseudonym_collisions}}},
      {"requirements", rows},
  };
  return indent < 0 ? j.dump() : j.dump(indent);
}

GradeReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    GradeReport g;
    const json& m = j.at("metrics");
    g.metrics.scenario = m.at("scenario").get<std::string>();
    g.metrics.pipeline = pipeline_from_string(m.at("pipeline").get<std::string>());
    g.metrics.duration_s = m.at("duration_s").get<double>();
    g.metrics.actor_count = m.at("actor_count").get<std::uint32_t>();
    g.metrics.vam = kind_of(m.at("vam"));
    g.metrics.denm = kind_of(m.at("denm"));
    g.metrics.warning_e2e = stats_of(m.at("warning_e2e"));
    const json& wd = m.at("warnings_by_danger");
    g.metrics.warnings_by_danger = {
        wd.at("none").get<std::uint64_t>(), wd.at("awareness").get<std::uint64_t>(),
        wd.at("warning").get<std::uint64_t>(), wd.at("imminent").get<std::uint64_t>()};
    for (const json& c : m.at("collisions"))
      g.metrics.collisions.push_back({c.at("actor_a").get<std::uint32_t>(),
                                      c.at("actor_b").get<std::uint32_t>(),
                                      c.at("time_s").get<double>()});
    g.metrics.warning_lead_s = m.at("warning_lead_s").get<std::vector<double>>();
    g.metrics.missed_collision_actors = m.at("missed_collision_actors").get<std::uint64_t>();
    g.metrics.false_alarm_denms = m.at("false_alarm_denms").get<std::uint64_t>();
    g.metrics.peak_zone_users = m.at("peak_zone_users").get<std::uint32_t>();
    g.metrics.pseudonym_collisions = m.at("pseudonym_collisions").get<std::uint64_t>();
    for (const json& row : j.at("requirements"))
      g.rows.push_back({row.at("id").get<std::string>(),
                        row.at("requirement").get<std::string>(),
                        row.at("observed").get<std::string>(),
                        verdict_from_string(row.at("verdict").get<std::string>())});
    return g;
  } catch (const json::exception& e) {
    throw TraceError(std::string("report parse: ") + e.what());
  }
}

std::string report_to_text(const GradeReport& report) {
  const MetricsReport& m = report.metrics;
  std::ostringstream out;
  out << "run         " << m.scenario << " (" << to_string(m.pipeline) << "), "
      << fmt("%g", m.duration_s) << " s, " << m.actor_count << " actors\n";
  out << "awareness   " << m.vam.published << " published, " << m.vam.delivered
      << " delivered (" << fmt("%.1f", percent(m.vam.delivered, m.vam.intended))
      << "% of intended), max " << m.vam.max_bytes << " B, peak "
      << fmt("%.0f", m.vam.max_sender_hz) << " Hz/sender";
  if (m.vam.latency.count > 0)
    out << ", transit p50/p99 " << fmt("%.1f", m.vam.latency.p50_ms) << "/"
        << fmt("%.1f", m.vam.latency.p99_ms) << " ms";
  out << "\n";
  out << "warnings    " << m.denm.published << " published, " << m.denm.delivered
      << " delivered";
  if (m.denm.intended > 0)
    out << " (" << fmt("%.1f", percent(m.denm.delivered, m.denm.intended))
        << "% of intended)";
  if (m.denm.max_bytes > 0) out << ", max " << m.denm.max_bytes << " B";
  if (m.warning_e2e.count > 0)
    out << ", e2e p50/p99 " << fmt("%.1f", m.warning_e2e.p50_ms) << "/"
        << fmt("%.1f", m.warning_e2e.p99_ms) << " ms";
  out << "\n";
  out << "presented   " << m.warnings_by_danger[2] << " warning, " << m.warnings_by_danger[3]
      << " imminent, " << m.warnings_by_danger[1] << " awareness\n";
  out << "collisions  " << m.collisions.size() << " ground truth, "
      << m.missed_collision_actors << " unwarned actors, " << m.false_alarm_denms
      << " false alarms";
  if (!m.warning_lead_s.empty()) {
    const double lead = *std::min_element(m.warning_lead_s.begin(), m.warning_lead_s.end());
    out << ", min warning lead " << fmt("%.2f", lead) << " s";
  }
  out << "\n";
  out << "zone        peak " << m.peak_zone_users << " users, " << m.pseudonym_collisions
      << " pseudonym collisions\n\n";
  for (const auto& r : report.rows) {
    const char* tag = r.verdict == Verdict::Pass   ? "PASS"
                      : r.verdict == Verdict::Fail ? "FAIL"
                                                   : " n/a";
    out << "[" << tag << "] ";
    out.width(20);
    out.setf(std::ios::left, std::ios::adjustfield);
    out << r.id;
    out.width(0);
    out << " " << r.observed << "  (requirement: " << r.requirement << ")\n";
  }
  return out.str();
}

} // namespace vrusim
