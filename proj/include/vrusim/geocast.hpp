#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrusim/types.hpp"

// Geographic addressing: an equirectangular local projection anchored at a
// configured origin, a square grid over the local plane, canonical topic
// strings per cell, and recipient-selection helpers (subscription rings,
// circular zones, trajectory relevance, clustering).

namespace vrusim {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kDefaultRelevanceDistanceM = 25.0;

struct GeoOrigin {
  double lat_deg = 0.0; // |lat| <= 85 enforced by project_to_local
  double lon_deg = 0.0;
};

// x = R * cos(lat0) * dlon, y = R * dlat (radians). Small-angle planar
// approximation; error stays below ~0.01% within 10 km of the origin, and
// inputs farther than 1 degree from the origin are rejected outright.
Vec2 project_to_local(double lat_deg, double lon_deg, const GeoOrigin& origin);

struct GridCell {
  std::int64_t ix = 0;
  std::int64_t iy = 0;
  std::uint32_t cell_size_m = 100;

  constexpr bool operator==(const GridCell&) const = default;
  constexpr auto operator<=>(const GridCell&) const = default;
};

// Half-open cells: position p maps to floor(p / cell_size) on each axis.
GridCell cell_of(Vec2 position_m, std::uint32_t cell_size_m);

// Canonical pub-sub topic "geo/<cell_size_m>/<ix>/<iy>"; parse is the exact
// inverse of format (bijective over valid cells).
using TopicId = std::string;
TopicId topic_of(const GridCell& cell);
GridCell parse_topic(const TopicId& topic); // throws std::invalid_argument

// All cells within `ring` cells of the position's cell, row-major order,
// (2*ring+1)^2 entries. ring_for_range picks the smallest ring whose cells
// cover every point within range_m of the subscriber.
std::vector<GridCell> subscription_cells(Vec2 position_m, std::uint32_t cell_size_m,
                                         std::uint32_t ring);
std::uint32_t ring_for_range(double range_m, std::uint32_t cell_size_m);

// Users whose current position lies within radius_m of the event point
// (boundary inclusive). Sorted by pseudonym.
std::vector<PseudonymId> circular_zone_recipients(Vec2 event_pos_m, double radius_m,
                                                  std::span<const RoadUserState> users);

// Users whose constant-velocity trajectory comes within relevance_distance_m
// of the event point at some time in [0, horizon_s]. Sorted by pseudonym.
std::vector<PseudonymId> relevance_filter(Vec2 event_pos_m, double horizon_s,
                                          std::span<const RoadUserState> users,
                                          double relevance_distance_m = kDefaultRelevanceDistanceM);

struct Cluster {
  PseudonymId head{};                  // smallest pseudonym in the cluster
  std::vector<PseudonymId> members;    // sorted, includes head
};

// Transitive closure of "within eps_dist_m, heading within eps_heading_deg
// (circular difference), same profile". Output is independent of input
// order: members sorted, clusters sorted by head.
std::vector<Cluster> form_clusters(std::span<const RoadUserState> users, double eps_dist_m,
                                   double eps_heading_deg);

// Heading convention used for clustering: degrees CCW from +x in [0, 360);
// speed below 1e-9 m/s reports 0.
double heading_deg(const RoadUserState& user);

} // namespace vrusim
