#pragma once

#include <cmath>
#include <optional>

#include "ttkit/camera.hpp"

namespace ttkit::testing {

inline Mat3 rotation_xyz(double rx_deg, double ry_deg, double rz_deg) {
  const double d = std::numbers::pi / 180.0;
  return (Eigen::AngleAxisd(rx_deg * d, Vec3::UnitX()) *
          Eigen::AngleAxisd(ry_deg * d, Vec3::UnitY()) *
          Eigen::AngleAxisd(rz_deg * d, Vec3::UnitZ()))
      .toRotationMatrix();
}

/// Camera with the given world-to-camera rotation, aimed at the table center,
/// at the distance where the projected table diagonal covers diag_frac of the
/// image width. Returns nullopt when a corner ends up outside the image.
inline std::optional<CameraModel> make_posed_camera(const Mat3& R, double f, int w, int h,
                                                    const WorldGeometry& world,
                                                    double diag_frac = 0.45) {
  CameraModel cam;
  cam.f = f;
  cam.principal_point = {w / 2.0, h / 2.0};
  cam.R = R;
  cam.width = w;
  cam.height = h;

  const Vec3 center(0.0, 0.0, world.table_height);
  const double world_diag = std::hypot(world.table_length, world.table_width);
  const double distance = f * world_diag / (diag_frac * w);
  const Vec3 view_dir = R.transpose() * Vec3::UnitZ();  // optical axis in world
  const Vec3 cam_center = center - distance * view_dir;
  cam.T = -R * cam_center;

  for (const Vec3& corner : table_corners(world)) {
    const auto px = project(cam, corner);
    if (!px) return std::nullopt;
    if (px->x() < 10 || px->x() > w - 10 || px->y() < 10 || px->y() > h - 10) {
      return std::nullopt;
    }
  }
  return cam;
}

inline double rotation_angle_deg(const Mat3& a, const Mat3& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

}  // namespace ttkit::testing
