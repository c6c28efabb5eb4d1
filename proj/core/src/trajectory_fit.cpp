#include "ttkit/trajectory_fit.hpp"

#include <algorithm>
#include <cmath>

#include "ttkit/errors.hpp"
#include "ttkit/optim.hpp"

namespace ttkit {

namespace {

double huber(double e, double delta) {
  return e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
}

// x = [p(3), v(3), omega rad/s (3)]
BallState unpack(const Eigen::VectorXd& x, double t0) {
  BallState s;
  s.t = t0;
  s.p = x.segment<3>(0);
  s.v = x.segment<3>(3);
  s.omega = x.segment<3>(6);
  return s;
}

}  // namespace

FitResult ode_fit(const Trajectory& observed, const WorldGeometry& w, const AeroParams& aero,
                  const TableBounceParams& bp, const FitConfig& config) {
  const auto valid = observed.valid3d_indices();
  if (valid.size() < 8) throw TooFewSamples("ode_fit needs at least 8 valid 3D samples");

  std::vector<double> times(valid.size());
  std::vector<Vec3> points(valid.size());
  for (std::size_t i = 0; i < valid.size(); ++i) {
    times[i] = observed.samples[valid[i]].t;
    points[i] = *observed.samples[valid[i]].p3d;
  }
  const double t0 = times.front();

  const auto simulate = [&](const Eigen::VectorXd& x) {
    return simulate_at_times(unpack(x, t0), times, config.rk4_dt, w, aero, bp,
                             config.max_bounces);
  };

  const auto residuals = [&](const Eigen::VectorXd& x) {
    const FlightResult sim = simulate(x);
    Eigen::VectorXd r(3 * times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      const Vec3 d = *sim.trajectory.samples[i].p3d - points[i];
      const double e = d.norm();
      // IRLS weight sqrt(rho'(e)/e) for the Huber loss.
      const double sw = e <= config.huber_delta ? 1.0 : std::sqrt(config.huber_delta / e);
      r.segment<3>(3 * static_cast<Eigen::Index>(i)) = sw * d;
    }
    return r;
  };

  const auto robust_objective = [&](const Eigen::VectorXd& x) {
    const FlightResult sim = simulate(x);
    double f = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      f += huber((*sim.trajectory.samples[i].p3d - points[i]).norm(), config.huber_delta);
    }
    return f;
  };

  // Initial guess: first valid position, least-squares slope of the first
  // three valid samples for velocity, zero spin.
  Eigen::VectorXd x_init(9);
  x_init.segment<3>(0) = points[0];
  {
    const double tm = (times[0] + times[1] + times[2]) / 3.0;
    const Vec3 pm = (points[0] + points[1] + points[2]) / 3.0;
    Vec3 num = Vec3::Zero();
    double den = 0.0;
    for (int i = 0; i < 3; ++i) {
      num += (times[i] - tm) * (points[i] - pm);
      den += (times[i] - tm) * (times[i] - tm);
    }
    x_init.segment<3>(3) = den > 0 ? Vec3(num / den) : Vec3::Zero();
  }
  x_init.segment<3>(6).setZero();

  LevMarOptions opt;
  opt.max_iterations = config.max_iterations;
  opt.objective_tol = config.convergence_tol;
  opt.lower.resize(9);
  opt.upper.resize(9);
  opt.lower.segment<3>(0) = config.p_min;
  opt.upper.segment<3>(0) = config.p_max;
  opt.lower.segment<3>(3).setConstant(-config.v_max);
  opt.upper.segment<3>(3).setConstant(config.v_max);
  opt.lower.segment<3>(6).setConstant(-hz_to_rad(config.omega_max_hz));
  opt.upper.segment<3>(6).setConstant(hz_to_rad(config.omega_max_hz));

  // Spin is the weakly observed parameter; extra starts perturb it.
  static const Vec3 spin_signs[] = {
      {1, 1, 1}, {-1, -1, -1}, {1, -1, 1}, {-1, 1, -1}, {1, 1, -1}, {-1, -1, 1}, {1, -1, -1},
  };
  LevMarOutcome best;
  bool have_best = false;
  int total_iterations = 0;
  for (int k = 0; k < std::max(1, config.multistart_count); ++k) {
    Eigen::VectorXd x_start = x_init;
    if (k > 0) {
      x_start.segment<3>(6) = hz_to_rad(20.0) * spin_signs[(k - 1) % 7];
    }
    LevMarOutcome run = levenberg_marquardt(residuals, robust_objective, x_start, opt);
    total_iterations += run.iterations;
    if (!have_best || run.objective < best.objective) {
      best = std::move(run);
      have_best = true;
    }
    if (best.objective < 1e-10) break;  // already an essentially exact fit
  }

  FitResult out;
  out.x0 = unpack(best.x, t0);
  out.converged = best.converged;
  out.iterations = total_iterations;
  out.objective_history = std::move(best.history);

  // Simulate at every observation timestamp for the returned trajectory.
  std::vector<double> all_times;
  all_times.reserve(observed.size());
  for (const auto& s : observed.samples) {
    if (s.t >= t0) all_times.push_back(s.t);
  }
  const FlightResult sim = simulate_at_times(out.x0, all_times, config.rk4_dt, w, aero, bp,
                                             config.max_bounces);
  out.fitted = sim.trajectory;
  out.n_bounces = static_cast<int>(sim.bounces.size());

  const auto [rmse, max_err] = physics_residual(observed, out.fitted);
  out.rmse = rmse;
  out.max_error = max_err;
  return out;
}

std::pair<double, double> physics_residual(const Trajectory& observed,
                                           const Trajectory& fitted) {
  double sum_sq = 0.0;
  double max_err = 0.0;
  std::size_t n = 0;
  std::size_t j = 0;
  for (const auto& obs : observed.samples) {
    if (!obs.p3d) continue;
    while (j < fitted.samples.size() &&
           (fitted.samples[j].t < obs.t - 1e-9 || !fitted.samples[j].p3d)) {
      ++j;
    }
    if (j >= fitted.samples.size() || std::abs(fitted.samples[j].t - obs.t) > 1e-9) {
      throw TimestampMismatch("no fitted sample at a valid observation time");
    }
    const double e = (*fitted.samples[j].p3d - *obs.p3d).norm();
    sum_sq += e * e;
    max_err = std::max(max_err, e);
    ++n;
    ++j;
  }
  if (n == 0) return {0.0, 0.0};
  return {std::sqrt(sum_sq / static_cast<double>(n)), max_err};
}

}  // namespace ttkit
