#include "ttkit/trajectory.hpp"

#include <algorithm>

namespace ttkit {

bool Trajectory::timestamps_increasing() const {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) return false;
  }
  return true;
}

std::size_t Trajectory::count_valid3d() const {
  std::size_t n = 0;
  for (const auto& s : samples) {
    if (s.p3d) ++n;
  }
  return n;
}

std::vector<std::size_t> Trajectory::valid3d_indices() const {
  std::vector<std::size_t> idx;
  idx.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].p3d) idx.push_back(i);
  }
  return idx;
}

double Trajectory::visibility_fraction() const {
  if (samples.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& s : samples) {
    if (s.visible) ++n;
  }
  return static_cast<double>(n) / static_cast<double>(samples.size());
}

double Trajectory::median_frame_interval() const {
  if (samples.size() < 2) return 0.0;
  std::vector<double> dts;
  dts.reserve(samples.size() - 1);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    dts.push_back(samples[i].t - samples[i - 1].t);
  }
  auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
  std::nth_element(dts.begin(), mid, dts.end());
  return *mid;
}

}  // namespace ttkit
