#pragma once

#include <Eigen/Geometry>
#include <span>
#include <vector>

#include "ttkit/geometry.hpp"
#include "ttkit/trajectory.hpp"

namespace ttkit {

struct AeroParams {
  double k_d = 3.8e-4;             // drag coefficient bundle
  double k_m = 3.0e-6;             // Magnus coefficient
  Vec3 gravity{0.0, 0.0, -9.81};   // m/s^2
};

struct TableBounceParams {
  // Restitution and friction are not standardized for broadcast tables;
  // these defaults are typical celluloid/ABS ball measurements.
  double cor = 0.93;
  double mu = 0.25;
  // Tangential contact speed uses (v_x + w_y r, v_y + w_x r) by default.
  // The cross-product-consistent variant flips the sign of the w_y r term.
  bool cross_consistent_slip = false;
};

struct RacketImpactParams {
  double cor = 0.75;
  double k_p = 0.002;  // racket friction parameter

  /// Hollow-sphere inertia, (2/3) m r^2.
  double inertia(const WorldGeometry& w) const {
    return (2.0 / 3.0) * w.ball_mass * w.ball_radius * w.ball_radius;
  }
};

struct BallState {
  double t = 0.0;
  Vec3 p = Vec3::Zero();      // m
  Vec3 v = Vec3::Zero();      // m/s
  Vec3 omega = Vec3::Zero();  // rad/s

  bool finite() const {
    return std::isfinite(t) && p.allFinite() && v.allFinite() && omega.allFinite();
  }
};

struct BounceEvent {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  BallState pre;
  BallState post;
};

enum class FlightStop { duration, floor, bounce_limit };

struct FlightResult {
  Trajectory trajectory;
  std::vector<BounceEvent> bounces;
  FlightStop stop = FlightStop::duration;
  BallState final_state;
};

/// a = (-k_d |v| v + k_m (w x v)) / m + g
Vec3 aero_acceleration(const BallState& s, const AeroParams& aero, double ball_mass);

/// One classic RK4 step of the free-flight dynamics; spin is constant in flight.
BallState rk4_step(const BallState& s, double h, const AeroParams& aero, double ball_mass);

struct BounceMatrices {
  Mat3 A, B, C, D;  // v+ = A v- + B w-,  w+ = C v- + D w-
};

/// Contact-slip branch, used below the alpha threshold. Coincides with the
/// fixed-constant branch at alpha = 0.4 exactly.
BounceMatrices sliding_bounce_matrices(double alpha, double cor, double r);
/// Fixed-constant branch, used at and above the alpha threshold.
BounceMatrices rolling_bounce_matrices(double cor, double r);

double tangential_contact_speed(const Vec3& v, const Vec3& omega, double r,
                                bool cross_consistent_slip);

/// alpha = mu (1 + COR) |v_z| / v_s; +inf when v_s == 0.
double bounce_alpha(const BallState& pre, const WorldGeometry& w, const TableBounceParams& bp);

inline constexpr double bounce_alpha_threshold = 0.4;

/// Instantaneous table bounce. Position and time are untouched.
/// Throws BadContact unless the incoming vertical velocity is negative.
BallState table_bounce(const BallState& pre, const WorldGeometry& w,
                       const TableBounceParams& bp);

/// Instantaneous racket impact. The impact maps are applied in the racket
/// frame: v_r = R^T (v_w - V_r), w_r = R^T w_w, with R the racket-to-world
/// rotation of q and V_r the racket velocity. Position and time untouched.
BallState racket_impact(const BallState& pre, const Eigen::Quaterniond& q_racket,
                        const Vec3& racket_velocity, const RacketImpactParams& rp,
                        const WorldGeometry& w);

/// Fixed-step RK4 with exact table-impact events. Within a step that crosses
/// the table plane downward over the footprint, the impact time is located by
/// linear interpolation on z, the state is advanced to it, z snapped to the
/// surface and the bounce applied. Off-table downward crossings continue to
/// the floor z = 0, where the flight stops. Hitting the bounce limit stops
/// the flight at the impact point with the bounce unapplied.
class FlightSimulator {
 public:
  FlightSimulator(const BallState& start, double dt, int max_bounces,
                  const WorldGeometry& w, const AeroParams& aero,
                  const TableBounceParams& bp);

  /// Advances to the given absolute time (steps of at most dt, the last one
  /// shortened to land exactly). Returns false once the flight has stopped.
  bool advance_to(double t_target);

  const BallState& state() const { return state_; }
  const std::vector<BounceEvent>& bounces() const { return bounces_; }
  bool live() const { return live_; }
  FlightStop stop_reason() const { return stop_; }

 private:
  bool step(double h);

  BallState state_;
  double dt_;
  int max_bounces_;
  WorldGeometry world_;
  AeroParams aero_;
  TableBounceParams bounce_;
  std::vector<BounceEvent> bounces_;
  bool live_ = true;
  FlightStop stop_ = FlightStop::duration;
};

/// Integrates for `duration` seconds, sampling on the dt grid (plus the final
/// instant). Deterministic: identical inputs give bit-identical outputs.
FlightResult integrate_flight(const BallState& start, double duration, double dt,
                              const WorldGeometry& w, const AeroParams& aero,
                              const TableBounceParams& bp, int max_bounces = 2);

/// Same dynamics, sampled exactly at the requested times (strictly increasing,
/// all >= start.t). Times past a stopped flight repeat the terminal state.
FlightResult simulate_at_times(const BallState& start, std::span<const double> times,
                               double dt, const WorldGeometry& w, const AeroParams& aero,
                               const TableBounceParams& bp, int max_bounces = 2);

}  // namespace ttkit
