#pragma once

#include <vector>

#include "snnf/core_geometry.hpp"

namespace snnf {

struct TrajectoryEntry {
  int id = 0;
  Pose pose;  // camera-to-world

  friend bool operator==(const TrajectoryEntry&, const TrajectoryEntry&) = default;
};

/// Ordered camera poses in a fixed world frame.
struct Trajectory {
  std::vector<TrajectoryEntry> entries;

  [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries.empty(); }
  void push(int id, const Pose& pose) { entries.push_back({id, pose}); }

  [[nodiscard]] static Trajectory fromPoses(const std::vector<Pose>& poses, int first_id = 0) {
    Trajectory t;
    for (std::size_t i = 0; i < poses.size(); ++i) t.push(first_id + static_cast<int>(i), poses[i]);
    return t;
  }

  /// Sum of distances between consecutive camera positions.
  [[nodiscard]] double pathLength() const {
    double len = 0.0;
    for (std::size_t i = 1; i < entries.size(); ++i) {
      len += (entries[i].pose.translation() - entries[i - 1].pose.translation()).norm();
    }
    return len;
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

}  // namespace snnf
