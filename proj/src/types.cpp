#include "vrusim/types.hpp"

namespace vrusim {

const char* to_string(VruProfile p) {
  switch (p) {
    case VruProfile::Pedestrian: return "pedestrian";
    case VruProfile::Cyclist: return "cyclist";
    case VruProfile::Motorcyclist: return "motorcyclist";
    case VruProfile::Vehicle: return "vehicle";
    case VruProfile::Infrastructure: return "infrastructure";
  }
  return "unknown";
}

const char* to_string(MotionState m) {
  switch (m) {
    case MotionState::Standing: return "standing";
    case MotionState::Walking: return "walking";
    case MotionState::Running: return "running";
    case MotionState::Cycling: return "cycling";
    case MotionState::Riding: return "riding";
    case MotionState::Driving: return "driving";
    case MotionState::Idle: return "idle";
  }
  return "unknown";
}

const char* to_string(DangerLevel d) {
  switch (d) {
    case DangerLevel::None: return "none";
    case DangerLevel::Awareness: return "awareness";
    case DangerLevel::Warning: return "warning";
    case DangerLevel::Imminent: return "imminent";
  }
  return "unknown";
}

VruProfile profile_from_string(const std::string& s) {
  if (s == "pedestrian") return VruProfile::Pedestrian;
  if (s == "cyclist") return VruProfile::Cyclist;
  if (s == "motorcyclist") return VruProfile::Motorcyclist;
  if (s == "vehicle") return VruProfile::Vehicle;
  if (s == "infrastructure") return VruProfile::Infrastructure;
  throw std::invalid_argument("unknown profile: " + s);
}

MotionState motion_from_string(const std::string& s) {
  if (s == "standing") return MotionState::Standing;
  if (s == "walking") return MotionState::Walking;
  if (s == "running") return MotionState::Running;
  if (s == "cycling") return MotionState::Cycling;
  if (s == "riding") return MotionState::Riding;
  if (s == "driving") return MotionState::Driving;
  if (s == "idle") return MotionState::Idle;
  throw std::invalid_argument("unknown motion state: " + s);
}

DangerLevel danger_from_string(const std::string& s) {
  if (s == "none") return DangerLevel::None;
  if (s == "awareness") return DangerLevel::Awareness;
  if (s == "warning") return DangerLevel::Warning;
  if (s == "imminent") return DangerLevel::Imminent;
  throw std::invalid_argument("unknown danger level: " + s);
}

} // namespace vrusim
