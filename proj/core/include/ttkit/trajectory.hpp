#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ttkit/geometry.hpp"

namespace ttkit {

/// One observed or simulated ball sample. Missing modalities stay unset.
struct TrajectorySample {
  double t = 0.0;
  std::optional<Vec3> p3d;    // meters, world frame
  std::optional<Vec3> omega;  // rad/s
  std::optional<Vec2> p2d;    // pixels
  bool visible = true;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  bool timestamps_increasing() const;
  std::size_t count_valid3d() const;
  std::vector<std::size_t> valid3d_indices() const;
  double visibility_fraction() const;
  /// Median spacing of consecutive sample timestamps; 0 for fewer than 2 samples.
  double median_frame_interval() const;
};

}  // namespace ttkit
