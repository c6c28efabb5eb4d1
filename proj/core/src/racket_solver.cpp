#include "ttkit/racket_solver.hpp"

#include <algorithm>
#include <cmath>

#include "ttkit/errors.hpp"
#include "ttkit/optim.hpp"
#include "ttkit/rng.hpp"

namespace ttkit {

namespace {

// Cubic Hermite position on the node grid.
Vec3 interpolate_position(const std::vector<BallState>& nodes, double t) {
  if (nodes.size() < 2) return nodes.empty() ? Vec3::Zero() : nodes.front().p;
  const double t0 = nodes.front().t;
  const double h = nodes[1].t - nodes[0].t;
  const auto last = nodes.size() - 2;
  std::size_t k = 0;
  if (t > t0) k = std::min(static_cast<std::size_t>((t - t0) / h), last);
  const BallState& a = nodes[k];
  const BallState& b = nodes[k + 1];
  const double dt = b.t - a.t;
  const double u = std::clamp((t - a.t) / dt, 0.0, 1.0);
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * a.p + (u3 - 2 * u2 + u) * dt * a.v +
         (-2 * u3 + 3 * u2) * b.p + (u3 - u2) * dt * b.v;
}

struct ConstraintSet {
  double landing = 0.0;    // equality, m
  double net_x = 0.0;      // equality, m
  double net_z = 0.0;      // >= 0, m
  double align = 0.0;      // >= 0
  double face = 0.0;       // >= 0

  bool feasible(double tol) const {
    return std::abs(landing) <= tol && std::abs(net_x) <= tol && net_z >= -tol &&
           align >= -tol && face >= -tol;
  }
  double violation() const {
    return std::abs(landing) + std::abs(net_x) + std::max(0.0, -net_z) +
           std::max(0.0, -align) + std::max(0.0, -face);
  }
};

struct Candidate {
  Eigen::Quaterniond q;
  Vec3 v;
  double t_net = 0.0;
  double objective = std::numeric_limits<double>::infinity();
  ConstraintSet constraints;
  StrokeRollout rollout;
  bool feasible = false;
};

}  // namespace

StrokeRollout rollout_stroke(const BallState& pre, const Eigen::Quaterniond& q_racket,
                             const Vec3& racket_velocity, double t_flight, int node_count,
                             const RacketImpactParams& rp, const AeroParams& aero,
                             const WorldGeometry& w) {
  if (!(t_flight > 0.0) || node_count < 2) throw BadProblem("rollout needs t_flight > 0 and nodes >= 2");

  StrokeRollout out;
  BallState s = racket_impact(pre, q_racket, racket_velocity, rp, w);
  out.omega_out = s.omega;
  out.nodes.reserve(node_count + 1);
  out.nodes.push_back(s);

  const double h = t_flight / node_count;
  for (int k = 0; k < node_count; ++k) {
    s = rk4_step(s, h, aero, w.ball_mass);
    if (!s.finite()) throw NonFiniteState("stroke rollout diverged");
    out.nodes.push_back(s);
  }
  out.bounce_point = out.nodes.back().p;

  out.trajectory.samples.reserve(out.nodes.size());
  for (const auto& n : out.nodes) {
    TrajectorySample ts;
    ts.t = n.t;
    ts.p3d = n.p;
    ts.omega = n.omega;
    out.trajectory.samples.push_back(ts);
  }
  return out;
}

RacketStroke solve_stroke(const StrokeProblem& problem, const RacketImpactParams& rp,
                          const AeroParams& aero, const WorldGeometry& w,
                          const StrokeSolverConfig& config) {
  if (!(problem.t_flight > 0.0)) throw BadProblem("t_flight must be positive");
  if (!w.on_footprint(problem.p_target.x(), problem.p_target.y())) {
    throw BadProblem("target must lie on the table footprint");
  }
  if (problem.alpha_w < 0.0 || problem.beta_w < 0.0) throw BadProblem("negative weight");

  const double face_sign = problem.p_target.x() - problem.pre.p.x() >= 0.0 ? 1.0 : -1.0;
  const double t_lo = 0.02 * problem.t_flight;
  const double t_hi = 0.98 * problem.t_flight;

  const auto evaluate = [&](const Eigen::VectorXd& z, Candidate& c) {
    const Eigen::Vector4d qraw = z.segment<4>(0);
    const double qn = qraw.norm();
    c.q = Eigen::Quaterniond(qraw(0), qraw(1), qraw(2), qraw(3));
    if (qn > 1e-9) c.q.normalize();
    c.v = z.segment<3>(4);
    c.t_net = std::clamp(z(7), t_lo, t_hi);

    c.rollout = rollout_stroke(problem.pre, c.q, c.v, problem.t_flight, config.node_count,
                               rp, aero, w);
    const Vec3 land = c.rollout.bounce_point;
    const Vec3 spin_err = rad_to_hz(c.rollout.omega_out) - problem.omega_target_hz;
    c.objective = problem.alpha_w * spin_err.squaredNorm() +
                  problem.beta_w * (land - problem.p_target).squaredNorm();

    const Vec3 at_net = interpolate_position(c.rollout.nodes, c.rollout.nodes.front().t + c.t_net);
    const Vec3 normal = c.q * Vec3::UnitZ();
    c.constraints.landing = land.z() - w.table_height;
    c.constraints.net_x = at_net.x();
    c.constraints.net_z = at_net.z() - (w.net_top() + problem.net_clearance);
    c.constraints.align = normal.dot(c.v);
    c.constraints.face = face_sign * normal.x();
    c.feasible = c.constraints.feasible(config.constraint_tol);
  };

  const auto penalty = [&](const Eigen::VectorXd& z, double mu) {
    Candidate c;
    evaluate(z, c);
    const auto& k = c.constraints;
    const double clamp_pen = (z(7) - c.t_net) * (z(7) - c.t_net);
    const double qdrift = z.segment<4>(0).squaredNorm() - 1.0;
    double p = c.objective;
    p += mu * (k.landing * k.landing + k.net_x * k.net_x + clamp_pen);
    const double nz = std::min(0.0, k.net_z);
    const double na = std::min(0.0, k.align);
    const double nf = std::min(0.0, k.face);
    p += mu * (nz * nz + na * na + nf * nf);
    p += 0.1 * qdrift * qdrift;
    return p;
  };

  // Geometric seed: a ballistic estimate of the outgoing velocity gives a
  // mirror-style racket normal and the racket speed that produces it.
  const Vec3 g = aero.gravity;
  const Vec3 v_out0 = (problem.p_target - problem.pre.p - 0.5 * g * problem.t_flight * problem.t_flight) /
                      problem.t_flight;
  Vec3 n0 = v_out0 - problem.pre.v;
  if (n0.norm() < 1e-9) n0 = v_out0;
  if (n0.norm() < 1e-9) n0 = Vec3(face_sign, 0, 0);
  n0.normalize();
  if (face_sign * n0.x() < 0.0) n0 = -n0;

  const double vin_n = problem.pre.v.dot(n0);
  const double vout_n = v_out0.dot(n0);
  const double vn = (vout_n + rp.cor * vin_n) / (1.0 + rp.cor);
  const Vec3 vin_t = problem.pre.v - vin_n * n0;
  const Vec3 vout_t = v_out0 - vout_n * n0;
  const double a = rp.k_p / w.ball_mass;
  const Vec3 vt = a > 1e-9 ? Vec3((vout_t - (1.0 - a) * vin_t) / a) : Vec3::Zero();
  const Vec3 v_seed = vn * n0 + vt;
  const Eigen::Quaterniond q_seed = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), n0);

  const double x_hit = std::abs(problem.pre.p.x());
  const double x_tgt = std::abs(problem.p_target.x());
  const double t_net_seed =
      std::clamp(problem.t_flight * x_hit / std::max(x_hit + x_tgt, 1e-9), t_lo, t_hi);

  RandomSource rng(config.seed);
  BfgsOptions inner;
  inner.max_iterations = config.max_inner_iterations;

  Candidate best;
  bool have_best = false;
  int iterations = 0;

  for (int start = 0; start < std::max(1, config.multistart); ++start) {
    Eigen::Quaterniond q0 = q_seed;
    Vec3 v0 = v_seed;
    double tn0 = t_net_seed;
    if (start > 0) {
      const double angle = (0.1 + 0.06 * start) * std::abs(rng.normal());
      q0 = q_seed * Eigen::Quaterniond(Eigen::AngleAxisd(angle, rng.unit_vector()));
      v0 = v_seed + (0.2 + 0.15 * start) * Vec3(rng.normal(), rng.normal(), rng.normal());
      tn0 = std::clamp(t_net_seed * rng.uniform(0.8, 1.2), t_lo, t_hi);
    }

    Eigen::VectorXd z(8);
    z << q0.w(), q0.x(), q0.y(), q0.z(), v0.x(), v0.y(), v0.z(), tn0;

    for (double mu : config.penalty_schedule) {
      const BfgsOutcome run =
          bfgs_minimize([&](const Eigen::VectorXd& zz) { return penalty(zz, mu); }, z, inner);
      z = run.x;
      iterations += run.iterations;
    }

    Candidate c;
    evaluate(z, c);
    const bool better =
        !have_best ||
        (c.feasible && !best.feasible) ||
        (c.feasible == best.feasible &&
         (c.feasible ? c.objective < best.objective
                     : c.constraints.violation() < best.constraints.violation()));
    if (better) {
      best = c;
      have_best = true;
    }
    if (best.feasible && best.objective < 1e-10) break;
  }

  RacketStroke out;
  out.q = best.q;
  out.v = best.v;
  out.t_net = best.t_net;
  out.iterations = iterations;
  out.converged = best.feasible;
  out.bounce_error = (best.rollout.bounce_point - problem.p_target).norm();
  out.spin_error = (rad_to_hz(best.rollout.omega_out) - problem.omega_target_hz).norm();
  return out;
}

std::optional<StrokeProblem> problem_from_stroke(const BallState& pre,
                                                 const Eigen::Quaterniond& q_racket,
                                                 const Vec3& racket_velocity,
                                                 const RacketImpactParams& rp,
                                                 const AeroParams& aero,
                                                 const TableBounceParams& bp,
                                                 const WorldGeometry& w) {
  const Vec3 normal = q_racket * Vec3::UnitZ();
  if (normal.dot(racket_velocity) < 0.0) return std::nullopt;

  const BallState post = racket_impact(pre, q_racket, racket_velocity, rp, w);
  // max_bounces = 0 stops the flight exactly at the first table impact.
  const FlightResult fly = integrate_flight(post, 2.0, 1e-3, w, aero, bp, 0);
  if (fly.stop != FlightStop::bounce_limit) return std::nullopt;

  const BallState& impact = fly.final_state;
  const double t_flight = impact.t - pre.t;
  if (t_flight < 0.1 || t_flight > 1.5) return std::nullopt;

  // Same half or a clipped net makes the target unusable.
  if (impact.p.x() * pre.p.x() >= 0.0) return std::nullopt;
  const double margin = 0.02;
  if (std::abs(impact.p.x()) > w.half_length() - margin ||
      std::abs(impact.p.y()) > w.half_width() - margin) {
    return std::nullopt;
  }
  const double face_sign = impact.p.x() - pre.p.x() >= 0.0 ? 1.0 : -1.0;
  if (face_sign * normal.x() < 0.0) return std::nullopt;

  double z_at_net = -1.0;
  for (std::size_t i = 1; i < fly.trajectory.samples.size(); ++i) {
    const Vec3& p0 = *fly.trajectory.samples[i - 1].p3d;
    const Vec3& p1 = *fly.trajectory.samples[i].p3d;
    if ((p0.x() <= 0.0) != (p1.x() <= 0.0)) {
      const double u = p0.x() / (p0.x() - p1.x());
      z_at_net = p0.z() + u * (p1.z() - p0.z());
      break;
    }
  }
  StrokeProblem problem;
  problem.net_clearance = 0.02;
  if (z_at_net < w.net_top() + problem.net_clearance + 0.005) return std::nullopt;

  problem.pre = pre;
  problem.omega_target_hz = rad_to_hz(post.omega);
  problem.p_target = impact.p;
  problem.t_flight = t_flight;
  return problem;
}

StrokeMonteCarloSummary run_stroke_monte_carlo(const StrokeMonteCarloConfig& config,
                                               const RacketImpactParams& rp,
                                               const AeroParams& aero, const WorldGeometry& w) {
  StrokeMonteCarloSummary out;
  out.trials = config.trials;

  std::vector<double> errors;
  errors.reserve(config.trials);

  for (int trial = 0; trial < config.trials; ++trial) {
    RandomSource rng(config.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(trial + 1));
    const double side = rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;

    StrokeProblem problem;
    problem.pre.t = 0.0;
    problem.pre.p = Vec3(side * (w.half_length() + rng.uniform(config.hit_behind_min, config.hit_behind_max)),
                         rng.uniform(-config.hit_y, config.hit_y),
                         rng.uniform(config.hit_z_min, config.hit_z_max));
    Vec3 dir(side * rng.uniform(0.5, 1.0), rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.15));
    dir.normalize();
    problem.pre.v = rng.uniform(config.speed_min, config.speed_max) * dir;
    problem.pre.omega = hz_to_rad(rng.uniform(0.0, config.spin_max_hz)) * rng.unit_vector();
    problem.omega_target_hz = rng.uniform(0.0, config.spin_max_hz) * rng.unit_vector();
    problem.p_target =
        Vec3(-side * rng.uniform(config.target_inset, w.half_length() - config.target_inset),
             rng.uniform(-(w.half_width() - config.target_inset), w.half_width() - config.target_inset),
             w.table_height);
    problem.t_flight = rng.uniform(config.t_flight_min, config.t_flight_max);

    StrokeSolverConfig solver = config.solver;
    solver.seed = config.seed ^ (0x517cc1b727220a95ULL + static_cast<std::uint64_t>(trial));
    const RacketStroke stroke = solve_stroke(problem, rp, aero, w, solver);

    if (stroke.converged) ++out.converged;
    if (stroke.converged && stroke.bounce_error < config.success_bounce_error) ++out.succeeded;
    errors.push_back(stroke.bounce_error);
  }

  out.success_rate = config.trials > 0 ? static_cast<double>(out.succeeded) / config.trials : 0.0;
  std::sort(errors.begin(), errors.end());
  const auto quantile = [&](double q) {
    if (errors.empty()) return 0.0;
    const auto i = static_cast<std::size_t>(q * (errors.size() - 1));
    return errors[i];
  };
  out.bounce_error_p50 = quantile(0.50);
  out.bounce_error_p90 = quantile(0.90);
  out.bounce_error_p99 = quantile(0.99);
  out.bounce_error_max = errors.empty() ? 0.0 : errors.back();
  return out;
}

}  // namespace ttkit
