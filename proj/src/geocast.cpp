#include "vrusim/geocast.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "vrusim/risk.hpp"

namespace vrusim {

Vec2 project_to_local(double lat_deg, double lon_deg, const GeoOrigin& origin) {
  if (!(std::abs(origin.lat_deg) <= 85.0))
    throw std::invalid_argument("origin latitude outside +-85 deg");
  const double dlat = lat_deg - origin.lat_deg;
  const double dlon = lon_deg - origin.lon_deg;
  if (!(std::abs(dlat) <= 1.0) || !(std::abs(dlon) <= 1.0))
    throw std::domain_error("position too far from projection origin");
  constexpr double rad = std::numbers::pi / 180.0;
  const double x = kEarthRadiusM * std::cos(origin.lat_deg * rad) * dlon * rad;
  const double y = kEarthRadiusM * dlat * rad;
  return {x, y};
}

GridCell cell_of(Vec2 position_m, std::uint32_t cell_size_m) {
  if (cell_size_m == 0) throw std::invalid_argument("cell size must be positive");
  const double s = static_cast<double>(cell_size_m);
  return {static_cast<std::int64_t>(std::floor(position_m.x / s)),
          static_cast<std::int64_t>(std::floor(position_m.y / s)), cell_size_m};
}

TopicId topic_of(const GridCell& cell) {
  if (cell.cell_size_m == 0) throw std::invalid_argument("cell size must be positive");
  return "geo/" + std::to_string(cell.cell_size_m) + "/" + std::to_string(cell.ix) + "/" +
         std::to_string(cell.iy);
}

namespace {

// Strict decimal parse of one topic segment; rejects empty, sign-only,
// leading zeros and trailing garbage so format/parse stay bijective.
template <typename T>
T parse_int_segment(std::string_view s) {
  if (s.empty()) throw std::invalid_argument("empty topic segment");
  std::string_view digits = s;
  if (digits.front() == '-') digits.remove_prefix(1);
  if (digits.empty()) throw std::invalid_argument("sign-only topic segment");
  if (digits.size() > 1 && digits.front() == '0')
    throw std::invalid_argument("non-canonical topic integer");
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value, 10);
  if (ec != std::errc{} || ptr != end) throw std::invalid_argument("bad topic integer");
  return value;
}

} // namespace

GridCell parse_topic(const TopicId& topic) {
  std::string_view rest = topic;
  auto take = [&rest](char sep) {
    const auto pos = rest.find(sep);
    if (pos == std::string_view::npos) throw std::invalid_argument("malformed topic");
    std::string_view head = rest.substr(0, pos);
    rest.remove_prefix(pos + 1);
    return head;
  };
  if (take('/') != "geo") throw std::invalid_argument("topic must start with geo/");
  GridCell cell;
  cell.cell_size_m = parse_int_segment<std::uint32_t>(take('/'));
  if (cell.cell_size_m == 0) throw std::invalid_argument("zero cell size in topic");
  cell.ix = parse_int_segment<std::int64_t>(take('/'));
  cell.iy = parse_int_segment<std::int64_t>(rest);
  return cell;
}

std::vector<GridCell> subscription_cells(Vec2 position_m, std::uint32_t cell_size_m,
                                         std::uint32_t ring) {
  const GridCell center = cell_of(position_m, cell_size_m);
  const auto r = static_cast<std::int64_t>(ring);
  std::vector<GridCell> cells;
  cells.reserve((2 * ring + 1) * (2 * ring + 1));
  for (std::int64_t dy = -r; dy <= r; ++dy)
    for (std::int64_t dx = -r; dx <= r; ++dx)
      cells.push_back({center.ix + dx, center.iy + dy, cell_size_m});
  return cells;
}

std::uint32_t ring_for_range(double range_m, std::uint32_t cell_size_m) {
  if (cell_size_m == 0) throw std::invalid_argument("cell size must be positive");
  if (range_m <= 0.0) return 0;
  return static_cast<std::uint32_t>(std::ceil(range_m / static_cast<double>(cell_size_m)));
}

std::vector<PseudonymId> circular_zone_recipients(Vec2 event_pos_m, double radius_m,
                                                  std::span<const RoadUserState> users) {
  std::vector<PseudonymId> out;
  const double r2 = radius_m * radius_m;
  for (const auto& u : users)
    if ((u.position_m - event_pos_m).norm2() <= r2) out.push_back(u.pseudonym);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PseudonymId> relevance_filter(Vec2 event_pos_m, double horizon_s,
                                          std::span<const RoadUserState> users,
                                          double relevance_distance_m) {
  RoadUserState event_agent;
  event_agent.position_m = event_pos_m;
  event_agent.motion_state = MotionState::Standing;
  std::vector<PseudonymId> out;
  for (const auto& u : users) {
    RoadUserState pred = u; // motion-state override applies to the prediction
    pred.velocity_ms = effective_velocity(u);
    const CpaResult cpa = closest_approach(pred, event_agent);
    double d = cpa.d_min_m;
    if (cpa.t_cpa_s > horizon_s) {
      // Approach continues past the horizon; closest point inside the window
      // is at the horizon itself.
      const Vec2 r = event_pos_m - u.position_m;
      d = (r - pred.velocity_ms * horizon_s).norm();
    }
    if (d <= relevance_distance_m) out.push_back(u.pseudonym);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double heading_deg(const RoadUserState& user) {
  const Vec2 v = user.velocity_ms;
  if (v.norm() < 1e-9) return 0.0;
  constexpr double deg = 180.0 / std::numbers::pi;
  double h = std::atan2(v.y, v.x) * deg;
  if (h < 0.0) h += 360.0;
  return h;
}

namespace {

double circular_diff_deg(double a, double b) {
  double d = std::abs(a - b);
  return d > 180.0 ? 360.0 - d : d;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

} // namespace

std::vector<Cluster> form_clusters(std::span<const RoadUserState> users, double eps_dist_m,
                                   double eps_heading_deg) {
  const std::size_t n = users.size();
  UnionFind uf(n);
  std::vector<double> heading(n);
  for (std::size_t i = 0; i < n; ++i) heading[i] = heading_deg(users[i]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (users[i].profile != users[j].profile) continue;
      if (distance(users[i].position_m, users[j].position_m) > eps_dist_m) continue;
      if (circular_diff_deg(heading[i], heading[j]) > eps_heading_deg) continue;
      uf.unite(i, j);
    }
  std::vector<std::vector<PseudonymId>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[uf.find(i)].push_back(users[i].pseudonym);
  std::vector<Cluster> out;
  for (auto& g : groups) {
    if (g.empty()) continue;
    std::sort(g.begin(), g.end());
    out.push_back({g.front(), std::move(g)});
  }
  std::sort(out.begin(), out.end(),
            [](const Cluster& a, const Cluster& b) { return a.head < b.head; });
  return out;
}

} // namespace vrusim
