#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrusim/types.hpp"

// Wire formats for the two message families exchanged over the geomessaging
// broker. Encoding is little-endian with fixed field order; decoding is
// strict: truncated input, trailing bytes, bad kind tags and out-of-range
// field values are all errors. encode(decode(bytes)) == bytes for every
// accepted input (canonical form).
//
// Awareness message layout (30 + 8*path_count bytes, path_count <= 10):
//   off  size  field
//   0    1     kind tag (0x01)
//   1    1     version byte: bit7 reserved security flag (must be 0),
//              bits 0..6 protocol version (currently 1)
//   2    4     pseudonym
//   6    8     timestamp_ms since scenario start
//   14   8     position: x_cm, y_cm (two int32, local planar frame)
//   22   2     speed_cms
//   24   2     heading_cdeg, centidegrees CCW from +x, < 36000
//   26   1     profile code
//   27   1     motion state code
//   28   1     position accuracy, decimeters (1 sigma)
//   29   1     path point count n <= 10
//   30   8*n   predicted path points: dx_cm, dy_cm offsets from position
//
// Warning message layout (27 + 4*target_count bytes, target_count <= 64):
//   off  size  field
//   0    1     kind tag (0x02)
//   1    1     version byte (as above)
//   2    4     event_id
//   6    1     event type code
//   7    8     event position: x_cm, y_cm
//   15   1     danger level code
//   16   4     ttc_ms; 0 means "unknown", so a computed time-to-collision
//              is clamped to at least 1 ms on encode
//   20   4     validity_ms
//   24   2     relevance radius, meters, > 0
//   26   1     target count k <= 64
//   27   4*k   targeted pseudonyms

namespace vrusim {

inline constexpr std::uint8_t kVamKindTag = 0x01;
inline constexpr std::uint8_t kDenmKindTag = 0x02;
inline constexpr std::uint8_t kProtocolVersion = 1;

inline constexpr std::size_t kVamMaxPathPoints = 10;
inline constexpr std::size_t kDenmMaxTargets = 64;
inline constexpr std::size_t kVamMaxBytes = 300;
inline constexpr std::size_t kDenmMaxBytes = 1200;

inline constexpr std::uint64_t kDefaultPseudonymEpochMs = 300'000;

class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MessageKind : std::uint8_t { Vam = kVamKindTag, Denm = kDenmKindTag };

enum class EventType : std::uint8_t { CollisionRisk = 1, Hazard = 2 };

struct PathPoint {
  std::int32_t dx_cm = 0;
  std::int32_t dy_cm = 0;
  constexpr bool operator==(const PathPoint&) const = default;
};

struct VamMessage {
  std::uint8_t protocol_version = kProtocolVersion;
  PseudonymId pseudonym{};
  std::uint64_t timestamp_ms = 0;
  std::int32_t pos_x_cm = 0;
  std::int32_t pos_y_cm = 0;
  std::uint16_t speed_cms = 0;
  std::uint16_t heading_cdeg = 0;
  VruProfile profile = VruProfile::Pedestrian;
  MotionState motion_state = MotionState::Standing;
  std::uint8_t position_accuracy_dm = 0;
  std::vector<PathPoint> path_points;

  bool operator==(const VamMessage&) const = default;
};

struct DenmMessage {
  std::uint8_t protocol_version = kProtocolVersion;
  std::uint32_t event_id = 0;
  EventType event_type = EventType::CollisionRisk;
  std::int32_t pos_x_cm = 0;
  std::int32_t pos_y_cm = 0;
  DangerLevel danger = DangerLevel::None;
  std::uint32_t ttc_ms = 0; // 0 = unknown
  std::uint32_t validity_ms = 0;
  std::uint16_t relevance_radius_m = 1;
  std::vector<PseudonymId> target_pseudonyms;

  bool operator==(const DenmMessage&) const = default;
};

constexpr std::size_t vam_encoded_size(std::size_t path_count) { return 30 + 8 * path_count; }
constexpr std::size_t denm_encoded_size(std::size_t target_count) { return 27 + 4 * target_count; }

// Throw CodecError on any field invariant violation.
std::vector<std::uint8_t> encode_vam(const VamMessage& m);
std::vector<std::uint8_t> encode_denm(const DenmMessage& m);
VamMessage decode_vam(std::span<const std::uint8_t> bytes);
DenmMessage decode_denm(std::span<const std::uint8_t> bytes);

// Deterministic pseudonym schedule: same (seed, epoch) always yields the same
// id, distinct epochs yield independent uniform draws.
PseudonymId rotate_pseudonym(std::uint64_t actor_seed, std::uint64_t epoch_index);
constexpr std::uint64_t epoch_of(std::uint64_t timestamp_ms,
                                 std::uint64_t epoch_length_ms = kDefaultPseudonymEpochMs) {
  return timestamp_ms / epoch_length_ms;
}

// Physical-unit conversions. Round to nearest, so quantization error is at
// most half a unit (0.005 m/s, 0.005 deg, 0.005 m).
std::int32_t to_cm(double meters);           // throws CodecError outside int32
std::uint16_t to_speed_cms(double mps);      // throws CodecError outside uint16
std::uint16_t to_heading_cdeg(double deg);   // any finite input, wrapped to [0, 360)
constexpr double cm_to_m(std::int32_t cm) { return cm / 100.0; }
constexpr double cms_to_mps(std::uint16_t cms) { return cms / 100.0; }
constexpr double cdeg_to_deg(std::uint16_t cdeg) { return cdeg / 100.0; }

} // namespace vrusim
