#include "vrusim/scenario_io.hpp"

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace vrusim {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  if (!j.is_object()) fail(ctx + " must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known) fail("unknown key \"" + item.key() + "\" in " + ctx);
  }
}

double dbl_of(const json& v, const std::string& ctx) {
  if (!v.is_number()) fail(ctx + " must be a number");
  return v.get<double>();
}

std::uint64_t u64_of(const json& v, const std::string& ctx) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0))
    fail(ctx + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::uint32_t u32_of(const json& v, const std::string& ctx) {
  const std::uint64_t raw = u64_of(v, ctx);
  if (raw > 0xffffffffull) fail(ctx + " exceeds 32 bits");
  return static_cast<std::uint32_t>(raw);
}

Vec2 vec2_of(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 2) fail(ctx + " must be [x, y]");
  return {dbl_of(v[0], ctx), dbl_of(v[1], ctx)};
}

json vec2_json(Vec2 v) { return json::array({v.x, v.y}); }

constexpr std::array<VruProfile, 5> kProfiles = {
    VruProfile::Pedestrian, VruProfile::Cyclist, VruProfile::Motorcyclist,
    VruProfile::Vehicle, VruProfile::Infrastructure};

const char* latency_kind_str(LatencyKind k) {
  switch (k) {
    case LatencyKind::Fixed: return "fixed";
    case LatencyKind::UniformJitter: return "uniform";
    case LatencyKind::LogNormal: return "lognormal";
  }
  return "fixed";
}

LatencyKind latency_kind_of(const std::string& s) {
  if (s == "fixed") return LatencyKind::Fixed;
  if (s == "uniform") return LatencyKind::UniformJitter;
  if (s == "lognormal") return LatencyKind::LogNormal;
  fail("unknown latency kind: " + s);
}

LinkLatencyModel link_of(const json& j, const std::string& ctx) {
  check_keys(j, {"kind", "base_ms", "jitter_ms", "sigma", "drop_probability"}, ctx);
  LinkLatencyModel m;
  m.kind = latency_kind_of(j.at("kind").get<std::string>());
  m.base_ms = dbl_of(j.at("base_ms"), ctx + ".base_ms");
  if (j.contains("jitter_ms")) m.jitter_ms = dbl_of(j["jitter_ms"], ctx + ".jitter_ms");
  if (j.contains("sigma")) m.sigma = dbl_of(j["sigma"], ctx + ".sigma");
  if (j.contains("drop_probability"))
    m.drop_probability = dbl_of(j["drop_probability"], ctx + ".drop_probability");
  return m;
}

json link_json(const LinkLatencyModel& m) {
  return {{"kind", latency_kind_str(m.kind)},
          {"base_ms", m.base_ms},
          {"jitter_ms", m.jitter_ms},
          {"sigma", m.sigma},
          {"drop_probability", m.drop_probability}};
}

void per_profile_of(const json& j, const std::string& ctx, std::array<double, 5>& out) {
  check_keys(j, {"pedestrian", "cyclist", "motorcyclist", "vehicle", "infrastructure"}, ctx);
  for (VruProfile p : kProfiles) {
    const char* name = to_string(p);
    if (j.contains(name))
      out[static_cast<std::size_t>(p)] = dbl_of(j[name], ctx + "." + name);
  }
}

json per_profile_json(const std::array<double, 5>& values) {
  json j;
  for (VruProfile p : kProfiles) j[to_string(p)] = values[static_cast<std::size_t>(p)];
  return j;
}

WarningPolicy policy_of(const json& j) {
  check_keys(j,
             {"reaction_s", "latency_budget_s", "maneuver_s", "margin_s", "awareness_factor",
              "imminent_s", "denm_validity_ms", "half_width_m", "radius_override_m"},
             "policy");
  WarningPolicy p;
  if (j.contains("reaction_s")) p.reaction_s = dbl_of(j["reaction_s"], "policy.reaction_s");
  if (j.contains("latency_budget_s"))
    p.latency_budget_s = dbl_of(j["latency_budget_s"], "policy.latency_budget_s");
  if (j.contains("maneuver_s")) p.maneuver_s = dbl_of(j["maneuver_s"], "policy.maneuver_s");
  if (j.contains("margin_s")) p.margin_s = dbl_of(j["margin_s"], "policy.margin_s");
  if (j.contains("awareness_factor"))
    p.awareness_factor = dbl_of(j["awareness_factor"], "policy.awareness_factor");
  if (j.contains("imminent_s")) p.imminent_s = dbl_of(j["imminent_s"], "policy.imminent_s");
  if (j.contains("denm_validity_ms"))
    p.denm_validity_ms = u32_of(j["denm_validity_ms"], "policy.denm_validity_ms");
  if (j.contains("half_width_m"))
    per_profile_of(j["half_width_m"], "policy.half_width_m", p.half_width_m);
  if (j.contains("radius_override_m")) {
    const json& overrides = j["radius_override_m"];
    if (!overrides.is_array()) fail("policy.radius_override_m must be an array");
    for (const auto& o : overrides) {
      check_keys(o, {"a", "b", "radius_m"}, "policy.radius_override_m[]");
      p.set_radius_override(profile_from_string(o.at("a").get<std::string>()),
                            profile_from_string(o.at("b").get<std::string>()),
                            dbl_of(o.at("radius_m"), "radius_m"));
    }
  }
  return p;
}

json policy_json(const WarningPolicy& p) {
  json overrides = json::array();
  const WarningPolicy plain{.half_width_m = p.half_width_m};
  for (std::size_t i = 0; i < kProfiles.size(); ++i)
    for (std::size_t k = i; k < kProfiles.size(); ++k) {
      const double effective = p.collision_radius_m(kProfiles[i], kProfiles[k]);
      if (effective != plain.collision_radius_m(kProfiles[i], kProfiles[k]))
        overrides.push_back({{"a", to_string(kProfiles[i])},
                             {"b", to_string(kProfiles[k])},
                             {"radius_m", effective}});
    }
  return {{"reaction_s", p.reaction_s},
          {"latency_budget_s", p.latency_budget_s},
          {"maneuver_s", p.maneuver_s},
          {"margin_s", p.margin_s},
          {"awareness_factor", p.awareness_factor},
          {"imminent_s", p.imminent_s},
          {"denm_validity_ms", p.denm_validity_ms},
          {"half_width_m", per_profile_json(p.half_width_m)},
          {"radius_override_m", overrides}};
}

MotionState motion_of(const json& v, const std::string& ctx) {
  if (!v.is_string()) fail(ctx + " must be a motion-state string");
  return motion_from_string(v.get<std::string>());
}

ActorSpec actor_of(const json& j, std::size_t index) {
  const std::string ctx = "actors[" + std::to_string(index) + "]";
  check_keys(j, {"profile", "start_position_m", "segments", "waypoints"}, ctx);
  ActorSpec a;
  a.profile = profile_from_string(j.at("profile").get<std::string>());

  const bool has_segments = j.contains("segments");
  const bool has_waypoints = j.contains("waypoints");
  if (has_segments == has_waypoints)
    fail(ctx + " needs exactly one of \"segments\" or \"waypoints\"");

  if (has_segments) {
    a.start_position_m = vec2_of(j.at("start_position_m"), ctx + ".start_position_m");
    const json& segs = j["segments"];
    if (!segs.is_array() || segs.empty()) fail(ctx + ".segments must be a non-empty array");
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const std::string sctx = ctx + ".segments[" + std::to_string(s) + "]";
      check_keys(segs[s], {"start_ms", "velocity_ms", "motion"}, sctx);
      ActorSegment seg;
      seg.start_ms = u64_of(segs[s].at("start_ms"), sctx + ".start_ms");
      if (segs[s].contains("velocity_ms"))
        seg.velocity_ms = vec2_of(segs[s]["velocity_ms"], sctx + ".velocity_ms");
      seg.motion = motion_of(segs[s].at("motion"), sctx + ".motion");
      a.segments.push_back(seg);
    }
    return a;
  }

  if (j.contains("start_position_m"))
    fail(ctx + ": waypoints carry their own positions; drop start_position_m");
  const json& wps = j["waypoints"];
  if (!wps.is_array() || wps.empty()) fail(ctx + ".waypoints must be a non-empty array");
  struct Wp {
    std::uint64_t t_ms;
    Vec2 pos;
    MotionState motion;
  };
  std::vector<Wp> pts;
  for (std::size_t s = 0; s < wps.size(); ++s) {
    const std::string wctx = ctx + ".waypoints[" + std::to_string(s) + "]";
    check_keys(wps[s], {"t_ms", "position_m", "motion"}, wctx);
    pts.push_back({u64_of(wps[s].at("t_ms"), wctx + ".t_ms"),
                   vec2_of(wps[s].at("position_m"), wctx + ".position_m"),
                   motion_of(wps[s].at("motion"), wctx + ".motion")});
  }
  if (pts.front().t_ms != 0) fail(ctx + ".waypoints must start at t_ms 0");
  a.start_position_m = pts.front().pos;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    if (pts[s + 1].t_ms <= pts[s].t_ms) fail(ctx + ".waypoints times must strictly increase");
    const double dt_s = static_cast<double>(pts[s + 1].t_ms - pts[s].t_ms) / 1000.0;
    a.segments.push_back(
        {pts[s].t_ms, (pts[s + 1].pos - pts[s].pos) * (1.0 / dt_s), pts[s].motion});
  }
  // Hold position after the final waypoint.
  a.segments.push_back({pts.back().t_ms, Vec2{}, pts.back().motion});
  return a;
}

json actor_json(const ActorSpec& a) {
  json segs = json::array();
  for (const auto& s : a.segments)
    segs.push_back({{"start_ms", s.start_ms},
                    {"velocity_ms", vec2_json(s.velocity_ms)},
                    {"motion", to_string(s.motion)}});
  return {{"profile", to_string(a.profile)},
          {"start_position_m", vec2_json(a.start_position_m)},
          {"segments", segs}};
}

ScenarioConfig config_of(const json& j) {
  check_keys(j,
             {"name", "description", "duration_s", "tick_ms", "seed", "origin",
              "noise_sigma_m", "pipeline", "latency", "policy", "cell_size_m",
              "vam_interval_ms", "record_states", "pseudonym_epoch_s",
              "relevance_distance_m", "staleness_ms", "speed_caps_ms", "actors"},
             "config");
  ScenarioConfig c;
  c.name = j.at("name").get<std::string>();
  if (j.contains("description")) c.description = j["description"].get<std::string>();
  c.duration_s = dbl_of(j.at("duration_s"), "duration_s");
  if (j.contains("tick_ms")) c.tick_ms = u32_of(j["tick_ms"], "tick_ms");
  if (j.contains("seed")) c.seed = u64_of(j["seed"], "seed");
  if (j.contains("origin")) {
    check_keys(j["origin"], {"lat_deg", "lon_deg"}, "origin");
    c.origin.lat_deg = dbl_of(j["origin"].at("lat_deg"), "origin.lat_deg");
    c.origin.lon_deg = dbl_of(j["origin"].at("lon_deg"), "origin.lon_deg");
  }
  if (j.contains("noise_sigma_m")) c.noise_sigma_m = dbl_of(j["noise_sigma_m"], "noise_sigma_m");
  if (j.contains("pipeline")) c.pipeline = pipeline_from_string(j["pipeline"].get<std::string>());
  if (j.contains("latency")) {
    check_keys(j["latency"], {"access", "backbone", "direct"}, "latency");
    if (j["latency"].contains("access"))
      c.latency.access = link_of(j["latency"]["access"], "latency.access");
    if (j["latency"].contains("backbone"))
      c.latency.backbone = link_of(j["latency"]["backbone"], "latency.backbone");
    if (j["latency"].contains("direct"))
      c.latency.direct = link_of(j["latency"]["direct"], "latency.direct");
  }
  if (j.contains("policy")) c.policy = policy_of(j["policy"]);
  if (j.contains("cell_size_m")) c.cell_size_m = u32_of(j["cell_size_m"], "cell_size_m");
  if (j.contains("vam_interval_ms"))
    c.vam_interval_ms = u32_of(j["vam_interval_ms"], "vam_interval_ms");
  if (j.contains("record_states")) {
    if (!j["record_states"].is_boolean()) fail("record_states must be a boolean");
    c.record_states = j["record_states"].get<bool>();
  }
  if (j.contains("pseudonym_epoch_s"))
    c.pseudonym_epoch_s = u32_of(j["pseudonym_epoch_s"], "pseudonym_epoch_s");
  if (j.contains("relevance_distance_m"))
    c.relevance_distance_m = dbl_of(j["relevance_distance_m"], "relevance_distance_m");
  if (j.contains("staleness_ms")) c.staleness_ms = u32_of(j["staleness_ms"], "staleness_ms");
  if (j.contains("speed_caps_ms"))
    per_profile_of(j["speed_caps_ms"], "speed_caps_ms", c.speed_caps_ms);
  const json& actors = j.at("actors");
  if (!actors.is_array()) fail("actors must be an array");
  for (std::size_t i = 0; i < actors.size(); ++i) c.actors.push_back(actor_of(actors[i], i));
  c.validate();
  return c;
}

json config_json(const ScenarioConfig& c) {
  json actors = json::array();
  for (const auto& a : c.actors) actors.push_back(actor_json(a));
  return {{"name", c.name},
          {"description", c.description},
          {"duration_s", c.duration_s},
          {"tick_ms", c.tick_ms},
          {"seed", c.seed},
          {"origin", {{"lat_deg", c.origin.lat_deg}, {"lon_deg", c.origin.lon_deg}}},
          {"noise_sigma_m", c.noise_sigma_m},
          {"pipeline", to_string(c.pipeline)},
          {"latency",
           {{"access", link_json(c.latency.access)},
            {"backbone", link_json(c.latency.backbone)},
            {"direct", link_json(c.latency.direct)}}},
          {"policy", policy_json(c.policy)},
          {"cell_size_m", c.cell_size_m},
          {"vam_interval_ms", c.vam_interval_ms},
          {"record_states", c.record_states},
          {"pseudonym_epoch_s", c.pseudonym_epoch_s},
          {"relevance_distance_m", c.relevance_distance_m},
          {"staleness_ms", c.staleness_ms},
          {"speed_caps_ms", per_profile_json(c.speed_caps_ms)},
          {"actors", actors}};
}

} // namespace

ScenarioConfig parse_scenario_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  try {
    return config_of(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

std::string scenario_to_json(const ScenarioConfig& config, int indent) {
  return config_json(config).dump(indent);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_scenario_json(buf.str());
}

void save_scenario(const ScenarioConfig& config, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open for writing: " + path);
  f << scenario_to_json(config) << '\n';
  if (!f) throw ConfigError("write failed: " + path);
}

} // namespace vrusim
