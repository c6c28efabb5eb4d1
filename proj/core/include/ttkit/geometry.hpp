#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>

namespace ttkit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Spin is rad/s internally; every persisted or displayed value is Hz.
inline double hz_to_rad(double hz) { return hz * two_pi; }
inline double rad_to_hz(double rad) { return rad / two_pi; }
inline Vec3 hz_to_rad(const Vec3& hz) { return hz * two_pi; }
inline Vec3 rad_to_hz(const Vec3& rad) { return rad / two_pi; }

enum class Side { left, right };

inline Side opposite(Side s) { return s == Side::left ? Side::right : Side::left; }
inline const char* to_string(Side s) { return s == Side::left ? "left" : "right"; }

/// Table and ball geometry. World frame: origin at the table center projected
/// to the floor, x along the table length (the net plane is x = 0), y along
/// the width, z up. The playing surface is the plane z = table_height.
struct WorldGeometry {
  double table_length = 2.74;   // m
  double table_width = 1.525;   // m
  double table_height = 0.78;   // m
  double net_height = 0.1525;   // m above the table surface
  double ball_radius = 0.02;    // m
  double ball_mass = 0.0027;    // kg

  double half_length() const { return 0.5 * table_length; }
  double half_width() const { return 0.5 * table_width; }
  double net_top() const { return table_height + net_height; }

  bool on_footprint(double x, double y) const {
    return std::abs(x) <= half_length() && std::abs(y) <= half_width();
  }
  Side side_of(double x) const { return x < 0.0 ? Side::left : Side::right; }

  bool valid() const {
    return table_length > 0 && table_width > 0 && table_height > 0 &&
           net_height > 0 && ball_radius > 0 && ball_mass > 0;
  }
};

}  // namespace ttkit
