#include "vrusim/trace.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vrusim/scenario_io.hpp"

namespace vrusim {
namespace {

using nlohmann::json;

const char* kind_name(MessageKind k) { return k == MessageKind::Vam ? "vam" : "denm"; }

MessageKind kind_from(const std::string& s) {
  if (s == "vam") return MessageKind::Vam;
  if (s == "denm") return MessageKind::Denm;
  throw TraceError("unknown message kind: " + s);
}

const char* event_type_str(EventType e) {
  return e == EventType::CollisionRisk ? "collision_risk" : "hazard";
}

EventType event_type_from(const std::string& s) {
  if (s == "collision_risk") return EventType::CollisionRisk;
  if (s == "hazard") return EventType::Hazard;
  throw TraceError("unknown event type: " + s);
}

HopKind hop_kind_from(const std::string& s) {
  if (s == "client_edge") return HopKind::ClientEdge;
  if (s == "edge_server") return HopKind::EdgeServer;
  if (s == "server_edge") return HopKind::ServerEdge;
  if (s == "edge_client") return HopKind::EdgeClient;
  if (s == "direct") return HopKind::Direct;
  throw TraceError("unknown hop kind: " + s);
}

// Hand-rolled line formatter: to_chars everywhere, shortest round-trip
// doubles, fixed key order. Keeps large traces cheap to write and makes
// write(read(x)) byte-identical.
struct LineWriter {
  std::string& out;

  void raw(std::string_view s) { out.append(s); }
  void number(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
  }
  void number(std::uint64_t v) {
    char buf[24];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
  }
  void number(std::uint32_t v) { number(static_cast<std::uint64_t>(v)); }
  void quoted(std::string_view s) {
    out.push_back('"');
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", c);
            out += buf;
          } else {
            out.push_back(c);
          }
      }
    }
    out.push_back('"');
  }
  template <typename V>
  void field(std::string_view key, V v) {
    out.push_back(',');
    quoted(key);
    out.push_back(':');
    number(v);
  }
  void field_str(std::string_view key, std::string_view v) {
    out.push_back(',');
    quoted(key);
    out.push_back(':');
    quoted(v);
  }
};

struct EventEncoder {
  LineWriter w;

  void operator()(const RunStarted& e) {
    w.field_str("scenario", e.scenario);
    w.field("actors", e.actor_count);
  }
  void operator()(const RunEnded& e) {
    w.field("peak_zone_users", e.peak_zone_users);
    w.field("pseudonym_collisions", e.pseudonym_collisions);
  }
  void operator()(const PseudonymAssigned& e) {
    w.field("actor", e.actor_id);
    w.field("pseudonym", e.pseudonym.value);
    w.field("epoch", e.epoch);
  }
  void operator()(const StateSample& e) {
    w.field("actor", e.actor_id);
    w.field("pseudonym", e.pseudonym.value);
    w.field_str("profile", to_string(e.profile));
    w.field_str("motion", to_string(e.motion));
    w.field("x_m", e.position_m.x);
    w.field("y_m", e.position_m.y);
    w.field("vx_ms", e.velocity_ms.x);
    w.field("vy_ms", e.velocity_ms.y);
    w.field("sigma_m", e.sigma_m);
  }
  void operator()(const VamPublished& e) {
    w.field("actor", e.actor_id);
    w.field("sender", e.sender.value);
    w.field_str("topic", topic_of(e.cell));
    w.field("bytes", e.bytes);
    w.field("intended", e.intended);
  }
  void operator()(const DenmPublished& e) {
    w.field("sender", e.sender.value);
    w.field_str("topic", topic_of(e.cell));
    w.field("bytes", e.bytes);
    w.field("intended", e.intended);
    w.field("event_id", e.event_id);
    w.field_str("event_type", event_type_str(e.event_type));
    w.field_str("danger", to_string(e.danger));
    w.field("ttc_ms", e.ttc_ms);
    w.field("validity_ms", e.validity_ms);
    w.field("radius_m", e.radius_m);
    w.field("x_m", e.position_m.x);
    w.field("y_m", e.position_m.y);
    w.raw(",\"targets\":[");
    for (std::size_t i = 0; i < e.targets.size(); ++i) {
      if (i) w.raw(",");
      w.number(e.targets[i].value);
    }
    w.raw("]");
  }
  void operator()(const Delivered& e) {
    w.field_str("kind", kind_name(e.kind));
    w.field("sender", e.sender.value);
    w.field("recipient", e.recipient.value);
    w.field_str("topic", topic_of(e.cell));
    w.field("publish_ms", e.publish_ms);
    w.field("event_id", e.event_id);
    w.raw(",\"hops\":[");
    for (std::uint8_t i = 0; i < e.hops.count; ++i) {
      if (i) w.raw(",");
      w.raw("{\"kind\":");
      w.quoted(to_string(e.hops.hops[i].kind));
      w.raw(",\"ms\":");
      w.number(e.hops.hops[i].latency_ms);
      w.raw("}");
    }
    w.raw("]");
  }
  void operator()(const WarningPresented& e) {
    w.field("actor", e.actor_id);
    w.field("pseudonym", e.pseudonym.value);
    w.field_str("danger", to_string(e.danger));
    w.field("ttc_ms", e.ttc_ms);
    w.field("event_id", e.event_id);
  }
  void operator()(const GroundTruthCollision& e) {
    w.field("actor_a", e.actor_a);
    w.field("actor_b", e.actor_b);
    w.field("pseudonym_a", e.pseudonym_a.value);
    w.field("pseudonym_b", e.pseudonym_b.value);
  }
};

void encode_event(std::string& out, const TraceEvent& ev) {
  LineWriter w{out};
  w.raw("{\"t_ms\":");
  w.number(ev.t_ms);
  w.raw(",\"type\":");
  w.quoted(event_type_name(ev.body));
  std::visit(EventEncoder{w}, ev.body);
  w.raw("}\n");
}

// Strict per-line decoding: every canonical key must be present and no
// extras are tolerated, so corrupted or foreign traces fail loudly.
struct KeyChecker {
  const json& j;
  std::size_t expected;

  void done() const {
    if (j.size() != expected) throw TraceError("unexpected keys in event: " + j.dump());
  }
};

PseudonymId pseud(const json& j, const char* key) {
  return PseudonymId{j.at(key).get<std::uint32_t>()};
}

TraceBody decode_body(const std::string& type, const json& j, KeyChecker& keys) {
  if (type == "run_started") {
    keys.expected += 2;
    return RunStarted{j.at("scenario").get<std::string>(),
                      j.at("actors").get<std::uint32_t>()};
  }
  if (type == "run_ended") {
    keys.expected += 2;
    return RunEnded{j.at("peak_zone_users").get<std::uint32_t>(),
                    j.at("pseudonym_collisions").get<std::uint64_t>()};
  }
  if (type == "pseudonym_assigned") {
    keys.expected += 3;
    return PseudonymAssigned{j.at("actor").get<std::uint32_t>(), pseud(j, "pseudonym"),
                             j.at("epoch").get<std::uint32_t>()};
  }
  if (type == "state_sample") {
    keys.expected += 9;
    StateSample e;
    e.actor_id = j.at("actor").get<std::uint32_t>();
    e.pseudonym = pseud(j, "pseudonym");
    e.profile = profile_from_string(j.at("profile").get<std::string>());
    e.motion = motion_from_string(j.at("motion").get<std::string>());
    e.position_m = {j.at("x_m").get<double>(), j.at("y_m").get<double>()};
    e.velocity_ms = {j.at("vx_ms").get<double>(), j.at("vy_ms").get<double>()};
    e.sigma_m = j.at("sigma_m").get<double>();
    return e;
  }
  if (type == "vam_published") {
    keys.expected += 5;
    VamPublished e;
    e.actor_id = j.at("actor").get<std::uint32_t>();
    e.sender = pseud(j, "sender");
    e.cell = parse_topic(j.at("topic").get<std::string>());
    e.bytes = j.at("bytes").get<std::uint32_t>();
    e.intended = j.at("intended").get<std::uint32_t>();
    return e;
  }
  if (type == "denm_published") {
    keys.expected += 13;
    DenmPublished e;
    e.sender = pseud(j, "sender");
    e.cell = parse_topic(j.at("topic").get<std::string>());
    e.bytes = j.at("bytes").get<std::uint32_t>();
    e.intended = j.at("intended").get<std::uint32_t>();
    e.event_id = j.at("event_id").get<std::uint32_t>();
    e.event_type = event_type_from(j.at("event_type").get<std::string>());
    e.danger = danger_from_string(j.at("danger").get<std::string>());
    e.ttc_ms = j.at("ttc_ms").get<std::uint32_t>();
    e.validity_ms = j.at("validity_ms").get<std::uint32_t>();
    e.radius_m = j.at("radius_m").get<std::uint32_t>();
    e.position_m = {j.at("x_m").get<double>(), j.at("y_m").get<double>()};
    for (const auto& t : j.at("targets")) e.targets.push_back(PseudonymId{t.get<std::uint32_t>()});
    return e;
  }
  if (type == "delivered") {
    keys.expected += 7;
    Delivered e;
    e.kind = kind_from(j.at("kind").get<std::string>());
    e.sender = pseud(j, "sender");
    e.recipient = pseud(j, "recipient");
    e.cell = parse_topic(j.at("topic").get<std::string>());
    e.publish_ms = j.at("publish_ms").get<double>();
    e.event_id = j.at("event_id").get<std::uint32_t>();
    for (const auto& h : j.at("hops")) {
      if (h.size() != 2) throw TraceError("malformed hop: " + h.dump());
      e.hops.push({hop_kind_from(h.at("kind").get<std::string>()), h.at("ms").get<double>()});
    }
    return e;
  }
  if (type == "warning_presented") {
    keys.expected += 5;
    return WarningPresented{j.at("actor").get<std::uint32_t>(), pseud(j, "pseudonym"),
                            danger_from_string(j.at("danger").get<std::string>()),
                            j.at("ttc_ms").get<std::uint32_t>(),
                            j.at("event_id").get<std::uint32_t>()};
  }
  if (type == "ground_truth_collision") {
    keys.expected += 4;
    return GroundTruthCollision{j.at("actor_a").get<std::uint32_t>(),
                                j.at("actor_b").get<std::uint32_t>(), pseud(j, "pseudonym_a"),
                                pseud(j, "pseudonym_b")};
  }
  throw TraceError("unknown event type: " + type);
}

} // namespace

const char* event_type_name(const TraceBody& body) {
  static constexpr const char* names[] = {
      "run_started",    "run_ended", "pseudonym_assigned", "state_sample",
      "vam_published",  "denm_published", "delivered",     "warning_presented",
      "ground_truth_collision"};
  return names[body.index()];
}

void write_trace_jsonl(const SimulationTrace& trace, std::ostream& out) {
  std::string buf;
  buf.reserve(1 << 20);
  buf += "{\"type\":\"header\",\"version\":1,\"config\":";
  buf += scenario_to_json(trace.config, -1);
  buf += "}\n";
  for (const auto& ev : trace.events) {
    encode_event(buf, ev);
    if (buf.size() >= (1 << 20) - 1024) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw TraceError("trace write failed");
}

void save_trace_jsonl(const SimulationTrace& trace, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw TraceError("cannot open for writing: " + path);
  write_trace_jsonl(trace, f);
}

SimulationTrace read_trace_jsonl(std::istream& in) {
  SimulationTrace trace;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw TraceError("empty trace");
  try {
    {
      const json j = json::parse(line);
      if (j.value("type", "") != "header") throw TraceError("first line is not a header");
      if (j.at("version").get<int>() != 1) throw TraceError("unsupported trace version");
      if (j.size() != 3) throw TraceError("unexpected keys in header");
      trace.config = parse_scenario_json(j.at("config").dump());
    }
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      TraceEvent ev;
      ev.t_ms = j.at("t_ms").get<double>();
      KeyChecker keys{j, 2};
      ev.body = decode_body(j.at("type").get<std::string>(), j, keys);
      keys.done();
      trace.events.push_back(std::move(ev));
    }
  } catch (const json::exception& e) {
    throw TraceError("trace line " + std::to_string(line_no) + ": " + e.what());
  }
  return trace;
}

SimulationTrace load_trace_jsonl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw TraceError("cannot open: " + path);
  return read_trace_jsonl(f);
}

} // namespace vrusim
