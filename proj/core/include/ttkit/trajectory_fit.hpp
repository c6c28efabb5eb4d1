#pragma once

#include <vector>

#include "ttkit/ballistics.hpp"
#include "ttkit/trajectory.hpp"

namespace ttkit {

struct FitConfig {
  double huber_delta = 0.05;  // m; residuals beyond this are treated as outliers
  Vec3 p_min{-4.0, -3.0, 0.0};
  Vec3 p_max{4.0, 3.0, 3.0};
  double v_max = 40.0;        // m/s, per axis
  double omega_max_hz = 60.0; // Hz, per axis
  double rk4_dt = 1e-3;
  int max_iterations = 60;
  int multistart_count = 4;
  double convergence_tol = 1e-12;
  int max_bounces = 2;
};

struct FitResult {
  BallState x0;         // fitted state at the first valid observation time
  Trajectory fitted;    // simulated at all observation timestamps
  double rmse = 0.0;    // m, over valid indices
  double max_error = 0.0;
  int n_bounces = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective_history;
};

/// Recovers (p0, v0, w0) from noisy or partial 3D samples by robust bounded
/// nonlinear least squares over the flight simulator. Residuals are taken
/// only over valid (non-missing) 3D samples; a Huber loss downweights
/// outliers; box bounds are enforced by projection. Returns the best of
/// multistart_count starts; on a stalled solve the best-so-far is returned
/// with converged = false rather than throwing.
FitResult ode_fit(const Trajectory& observed, const WorldGeometry& w, const AeroParams& aero,
                  const TableBounceParams& bp, const FitConfig& config);

/// Pointwise Euclidean distances over indices valid in both trajectories.
/// Throws TimestampMismatch when the valid samples do not line up in time.
std::pair<double, double> physics_residual(const Trajectory& observed,
                                           const Trajectory& fitted);  // (rmse, max)

}  // namespace ttkit
