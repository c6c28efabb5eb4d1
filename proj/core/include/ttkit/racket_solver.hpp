#pragma once

#include <Eigen/Geometry>
#include <cstdint>
#include <optional>
#include <vector>

#include "ttkit/ballistics.hpp"

namespace ttkit {

struct StrokeProblem {
  BallState pre;          // incoming ball at the hit instant
  Vec3 omega_target_hz = Vec3::Zero();
  Vec3 p_target = Vec3::Zero();  // bounce location on the table plane
  double t_flight = 0.5;         // s, impact to bounce
  double alpha_w = 1.0;          // spin objective weight (Hz^2 scale)
  double beta_w = 100.0;         // landing objective weight (m^2 scale)
  double net_clearance = 0.02;   // m above the net top
};

struct RacketStroke {
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();  // racket -> world
  Vec3 v = Vec3::Zero();                                  // racket velocity, m/s
  double t_net = 0.0;                                     // net-crossing time
  double bounce_error = std::numeric_limits<double>::infinity();  // m
  double spin_error = std::numeric_limits<double>::infinity();    // Hz
  bool converged = false;
  int iterations = 0;
};

struct StrokeSolverConfig {
  int node_count = 40;  // RK4 nodes over [0, t_flight]
  int multistart = 8;
  int max_inner_iterations = 120;
  std::vector<double> penalty_schedule = {1e2, 1e3, 1e4, 1e5, 1e6};
  double constraint_tol = 1e-6;
  std::uint64_t seed = 0x7261636b6574ULL;
};

struct StrokeRollout {
  Vec3 bounce_point = Vec3::Zero();  // position at t_flight
  Vec3 omega_out = Vec3::Zero();     // rad/s after impact
  std::vector<BallState> nodes;      // node_count + 1 states
  Trajectory trajectory;
};

/// Deterministic forward model shared by the solver and external checks:
/// racket impact, then the flight ODE on a fixed node grid. No contact events
/// inside the window; the last node is the bounce position.
StrokeRollout rollout_stroke(const BallState& pre, const Eigen::Quaterniond& q_racket,
                             const Vec3& racket_velocity, double t_flight, int node_count,
                             const RacketImpactParams& rp, const AeroParams& aero,
                             const WorldGeometry& w);

/// Single-shooting stroke recovery: finds (t_net, q, V) minimizing the
/// weighted spin and landing objective subject to landing on the table plane
/// at t_flight, net clearance at the crossing time, the racket velocity
/// having a non-negative component along the racket normal, and the normal
/// facing the target side. Penalty method with a quasi-Newton inner solver;
/// the quaternion is a free 4-vector normalized before use. Infeasible
/// problems return the best-so-far with converged = false.
RacketStroke solve_stroke(const StrokeProblem& problem, const RacketImpactParams& rp,
                          const AeroParams& aero, const WorldGeometry& w,
                          const StrokeSolverConfig& config = {});

/// Builds a problem whose exact solution is the given stroke, by rolling the
/// impact forward to the first table bounce. Empty when the rollout never
/// bounces on the table or clips the net.
std::optional<StrokeProblem> problem_from_stroke(const BallState& pre,
                                                 const Eigen::Quaterniond& q_racket,
                                                 const Vec3& racket_velocity,
                                                 const RacketImpactParams& rp,
                                                 const AeroParams& aero,
                                                 const TableBounceParams& bp,
                                                 const WorldGeometry& w);

struct StrokeMonteCarloConfig {
  int trials = 500;
  std::uint64_t seed = 1;
  StrokeSolverConfig solver;
  double success_bounce_error = 1e-3;  // m

  // Sampling ranges: hit positions behind the end line, incoming speeds,
  // spins, flight times, targets on the opponent half inset from the edges.
  double hit_behind_min = 0.3, hit_behind_max = 1.0;
  double hit_z_min = 0.8, hit_z_max = 1.3;
  double hit_y = 0.7;
  double speed_min = 3.0, speed_max = 10.0;
  double spin_max_hz = 40.0;
  double t_flight_min = 0.3, t_flight_max = 0.8;
  double target_inset = 0.1;
};

struct StrokeMonteCarloSummary {
  int trials = 0;
  int converged = 0;
  int succeeded = 0;
  double success_rate = 0.0;
  double bounce_error_p50 = 0.0;
  double bounce_error_p90 = 0.0;
  double bounce_error_p99 = 0.0;
  double bounce_error_max = 0.0;
};

StrokeMonteCarloSummary run_stroke_monte_carlo(const StrokeMonteCarloConfig& config,
                                               const RacketImpactParams& rp,
                                               const AeroParams& aero, const WorldGeometry& w);

}  // namespace ttkit
