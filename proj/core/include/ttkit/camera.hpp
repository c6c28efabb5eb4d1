#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ttkit/geometry.hpp"
#include "ttkit/trajectory.hpp"

namespace ttkit {

/// Pinhole camera. R and T map world points into the camera frame:
/// x_c = R p + T; pixels are u = f x/z + cx, v = f y/z + cy.
struct CameraModel {
  double f = 1000.0;  // pixels
  Vec2 principal_point{0.0, 0.0};
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();
  int width = 0;
  int height = 0;

  bool rotation_ok(double tol = 1e-9) const;
};

std::optional<Vec2> project(const CameraModel& cam, const Vec3& p_world);

/// Table corners on the playing surface, ordered near-left, near-right,
/// far-right, far-left. "Near" is the +x half; "left" is -y.
std::array<Vec3, 4> table_corners(const WorldGeometry& w);

struct TableKeypoint {
  std::string name;
  Vec3 p;
};

/// 13 named reference points: the 4 corners, net base/top endpoints, net-top
/// center, short-edge midpoints and half centers.
std::array<TableKeypoint, 13> table_keypoints(const WorldGeometry& w);

struct CalibrationResult {
  CameraModel cam;
  double residual_px = 0.0;  // RMS corner reprojection error
  bool converged = false;
};

struct CalibrationOptions {
  double f_min = 500.0;
  double f_max = 5000.0;
  int f_steps = 20;  // log-spaced grid, each refined locally
  int max_iterations = 60;
};

/// Pose and focal length from the four table corners (pixel order matching
/// table_corners). The principal point is fixed at the image center.
CalibrationResult calibrate_from_corners(const std::array<Vec2, 4>& corner_px, int image_w,
                                         int image_h, const WorldGeometry& w,
                                         const CalibrationOptions& opt = {});

/// Homography mapping pixel homogeneous coordinates to (x, y, 1) on the floor
/// plane z = 0. Throws DegenerateView when the view direction makes the
/// mapping singular.
Mat3 ground_homography(const CameraModel& cam, const WorldGeometry& w);

struct ReprojectionStats {
  std::vector<double> per_sample_px;  // one entry per paired sample
  double max_normalized = 0.0;        // max error / projected table diagonal
  double diagonal_px = 0.0;
};

/// Pixel reprojection errors over samples carrying both p3d and p2d.
/// Normalization divides by the mean projected table-diagonal length.
ReprojectionStats reprojection_error(const Trajectory& traj, const CameraModel& cam,
                                     const WorldGeometry& w);

/// All 13 keypoints projected; empty when any lies behind the camera.
std::optional<std::array<Vec2, 13>> project_keypoints(const CameraModel& cam,
                                                      const WorldGeometry& w);

}  // namespace ttkit
