#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace plugcast {

inline constexpr int kNumStates = 4;
inline constexpr int kPlugsPerStation = 3;

enum class PlugState : int { available = 0, charging = 1, passive = 2, other = 3 };

inline constexpr std::array<std::string_view, kNumStates> kStateNames{
    "Available", "Charging", "Passive", "Other"};

inline std::optional<PlugState> parse_state(std::string_view name) {
  for (int i = 0; i < kNumStates; ++i) {
    if (kStateNames[static_cast<std::size_t>(i)] == name) return static_cast<PlugState>(i);
  }
  return std::nullopt;
}

// Real-valued occupancy split of one node at one timestamp, ordered
// (available, charging, passive, other).
struct StateVector {
  std::array<double, kNumStates> v{};

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  double sum() const { return v[0] + v[1] + v[2] + v[3]; }
  bool finite() const {
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]) &&
           std::isfinite(v[3]);
  }
  StateVector& operator+=(const StateVector& o) {
    for (int i = 0; i < kNumStates; ++i) v[static_cast<std::size_t>(i)] += o[static_cast<std::size_t>(i)];
    return *this;
  }
  friend bool operator==(const StateVector&, const StateVector&) = default;
};

// Integer plug counts for one station, ordered like StateVector. Valid
// station observations are nonnegative and sum to the plug count.
struct PlugStateVector {
  std::array<int, kNumStates> counts{};

  int& operator[](std::size_t i) { return counts[i]; }
  int operator[](std::size_t i) const { return counts[i]; }
  int sum() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
  bool valid(int plugs = kPlugsPerStation) const {
    return counts[0] >= 0 && counts[1] >= 0 && counts[2] >= 0 && counts[3] >= 0 &&
           sum() == plugs;
  }
  StateVector to_real() const {
    return StateVector{{static_cast<double>(counts[0]), static_cast<double>(counts[1]),
                        static_cast<double>(counts[2]), static_cast<double>(counts[3])}};
  }
  friend bool operator==(const PlugStateVector&, const PlugStateVector&) = default;
  friend auto operator<=>(const PlugStateVector&, const PlugStateVector&) = default;
};

inline constexpr int kNumAreas = 4;

enum class Area : int { south = 0, north = 1, east = 2, west = 3 };

inline constexpr std::array<std::string_view, kNumAreas> kAreaNames{
    "south", "north", "east", "west"};

inline std::string_view area_name(Area a) {
  return kAreaNames[static_cast<std::size_t>(a)];
}

inline std::optional<Area> parse_area(std::string_view name) {
  for (int i = 0; i < kNumAreas; ++i) {
    if (kAreaNames[static_cast<std::size_t>(i)] == name) return static_cast<Area>(i);
  }
  return std::nullopt;
}

inline constexpr std::string_view kGlobalNodeName = "global";

struct StationMeta {
  std::string id;
  double latitude = 0.0;
  double longitude = 0.0;
  Area area = Area::south;

  friend bool operator==(const StationMeta&, const StationMeta&) = default;
};

}  // namespace plugcast
