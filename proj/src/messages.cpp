#include "vrusim/messages.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "vrusim/rng.hpp"

namespace vrusim {
namespace {

class Writer {
 public:
  explicit Writer(std::size_t reserve) { buf_.reserve(reserve); }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { append(&v, 2); }
  void u32(std::uint32_t v) { append(&v, 4); }
  void u64(std::uint64_t v) { append(&v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  void append(const void* p, std::size_t n) {
    // Little-endian hosts only; static_assert guards the assumption.
    static_assert(std::endian::native == std::endian::little);
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint8_t u8() { return take<std::uint8_t>(); }
  std::uint16_t u16() { return take<std::uint16_t>(); }
  std::uint32_t u32() { return take<std::uint32_t>(); }
  std::uint64_t u64() { return take<std::uint64_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

  void expect_end() const {
    if (off_ != b_.size()) throw CodecError("trailing bytes after message");
  }

 private:
  template <typename T>
  T take() {
    static_assert(std::endian::native == std::endian::little);
    if (off_ + sizeof(T) > b_.size()) throw CodecError("truncated message");
    T v;
    std::memcpy(&v, b_.data() + off_, sizeof(T));
    off_ += sizeof(T);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t off_ = 0;
};

std::uint8_t checked_version(std::uint8_t raw) {
  if (raw & 0x80) throw CodecError("reserved security flag bit set");
  if ((raw & 0x7f) != kProtocolVersion) throw CodecError("unsupported protocol version");
  return raw;
}

void validate(const VamMessage& m) {
  checked_version(m.protocol_version);
  if (m.heading_cdeg >= 36000) throw CodecError("heading_cdeg out of range");
  if (!is_valid_profile(static_cast<std::uint8_t>(m.profile))) throw CodecError("bad profile code");
  if (!is_valid_motion(static_cast<std::uint8_t>(m.motion_state)))
    throw CodecError("bad motion state code");
  if (m.path_points.size() > kVamMaxPathPoints) throw CodecError("too many path points");
}

void validate(const DenmMessage& m) {
  checked_version(m.protocol_version);
  if (!is_valid_danger(static_cast<std::uint8_t>(m.danger))) throw CodecError("bad danger code");
  const auto et = static_cast<std::uint8_t>(m.event_type);
  if (et != 1 && et != 2) throw CodecError("bad event type code");
  if (m.relevance_radius_m == 0) throw CodecError("relevance radius must be positive");
  if (m.validity_ms == 0) throw CodecError("validity must be positive");
  if (m.target_pseudonyms.size() > kDenmMaxTargets) throw CodecError("too many targets");
}

} // namespace

std::vector<std::uint8_t> encode_vam(const VamMessage& m) {
  validate(m);
  Writer w(vam_encoded_size(m.path_points.size()));
  w.u8(kVamKindTag);
  w.u8(m.protocol_version);
  w.u32(m.pseudonym.value);
  w.u64(m.timestamp_ms);
  w.i32(m.pos_x_cm);
  w.i32(m.pos_y_cm);
  w.u16(m.speed_cms);
  w.u16(m.heading_cdeg);
  w.u8(static_cast<std::uint8_t>(m.profile));
  w.u8(static_cast<std::uint8_t>(m.motion_state));
  w.u8(m.position_accuracy_dm);
  w.u8(static_cast<std::uint8_t>(m.path_points.size()));
  for (const auto& p : m.path_points) {
    w.i32(p.dx_cm);
    w.i32(p.dy_cm);
  }
  return w.take();
}

std::vector<std::uint8_t> encode_denm(const DenmMessage& m) {
  validate(m);
  Writer w(denm_encoded_size(m.target_pseudonyms.size()));
  w.u8(kDenmKindTag);
  w.u8(m.protocol_version);
  w.u32(m.event_id);
  w.u8(static_cast<std::uint8_t>(m.event_type));
  w.i32(m.pos_x_cm);
  w.i32(m.pos_y_cm);
  w.u8(static_cast<std::uint8_t>(m.danger));
  w.u32(m.ttc_ms);
  w.u32(m.validity_ms);
  w.u16(m.relevance_radius_m);
  w.u8(static_cast<std::uint8_t>(m.target_pseudonyms.size()));
  for (const auto& t : m.target_pseudonyms) w.u32(t.value);
  return w.take();
}

VamMessage decode_vam(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.u8() != kVamKindTag) throw CodecError("wrong kind tag for awareness message");
  VamMessage m;
  m.protocol_version = r.u8();
  m.pseudonym.value = r.u32();
  m.timestamp_ms = r.u64();
  m.pos_x_cm = r.i32();
  m.pos_y_cm = r.i32();
  m.speed_cms = r.u16();
  m.heading_cdeg = r.u16();
  m.profile = static_cast<VruProfile>(r.u8());
  m.motion_state = static_cast<MotionState>(r.u8());
  m.position_accuracy_dm = r.u8();
  const std::uint8_t n = r.u8();
  if (n > kVamMaxPathPoints) throw CodecError("too many path points");
  m.path_points.resize(n);
  for (auto& p : m.path_points) {
    p.dx_cm = r.i32();
    p.dy_cm = r.i32();
  }
  r.expect_end();
  validate(m);
  return m;
}

DenmMessage decode_denm(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.u8() != kDenmKindTag) throw CodecError("wrong kind tag for warning message");
  DenmMessage m;
  m.protocol_version = r.u8();
  m.event_id = r.u32();
  m.event_type = static_cast<EventType>(r.u8());
  m.pos_x_cm = r.i32();
  m.pos_y_cm = r.i32();
  m.danger = static_cast<DangerLevel>(r.u8());
  m.ttc_ms = r.u32();
  m.validity_ms = r.u32();
  m.relevance_radius_m = r.u16();
  const std::uint8_t k = r.u8();
  if (k > kDenmMaxTargets) throw CodecError("too many targets");
  m.target_pseudonyms.resize(k);
  for (auto& t : m.target_pseudonyms) t.value = r.u32();
  r.expect_end();
  validate(m);
  return m;
}

PseudonymId rotate_pseudonym(std::uint64_t actor_seed, std::uint64_t epoch_index) {
  const std::uint64_t h = mix(actor_seed, 0x707365756432ULL, epoch_index);
  return PseudonymId{static_cast<std::uint32_t>(h >> 32)};
}

std::int32_t to_cm(double meters) {
  const double cm = std::round(meters * 100.0);
  if (!(cm >= -2147483648.0 && cm <= 2147483647.0))
    throw CodecError("position magnitude exceeds int32 centimeters");
  return static_cast<std::int32_t>(cm);
}

std::uint16_t to_speed_cms(double mps) {
  const double cms = std::round(mps * 100.0);
  if (!(cms >= 0.0 && cms <= 65535.0)) throw CodecError("speed outside uint16 cm/s");
  return static_cast<std::uint16_t>(cms);
}

std::uint16_t to_heading_cdeg(double deg) {
  if (!std::isfinite(deg)) throw CodecError("heading must be finite");
  double wrapped = std::fmod(deg, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  auto cdeg = static_cast<std::uint32_t>(std::lround(wrapped * 100.0));
  if (cdeg >= 36000) cdeg -= 36000; // rounding 359.999 up wraps to 0
  return static_cast<std::uint16_t>(cdeg);
}

} // namespace vrusim
