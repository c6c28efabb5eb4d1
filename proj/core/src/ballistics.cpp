#include "ttkit/ballistics.hpp"

#include <algorithm>
#include <cmath>

#include "ttkit/errors.hpp"

namespace ttkit {

Vec3 aero_acceleration(const BallState& s, const AeroParams& aero, double ball_mass) {
  const Vec3 drag = -aero.k_d * s.v.norm() * s.v;
  const Vec3 magnus = aero.k_m * s.omega.cross(s.v);
  return (drag + magnus) / ball_mass + aero.gravity;
}

BallState rk4_step(const BallState& s, double h, const AeroParams& aero, double ball_mass) {
  const auto acc = [&](const Vec3& v) {
    return (-aero.k_d * v.norm() * v + aero.k_m * s.omega.cross(v)) / ball_mass +
           aero.gravity;
  };
  const Vec3 a1 = acc(s.v);
  const Vec3 v2 = s.v + 0.5 * h * a1;
  const Vec3 a2 = acc(v2);
  const Vec3 v3 = s.v + 0.5 * h * a2;
  const Vec3 a3 = acc(v3);
  const Vec3 v4 = s.v + h * a3;
  const Vec3 a4 = acc(v4);

  BallState out = s;
  out.t = s.t + h;
  out.p = s.p + (h / 6.0) * (s.v + 2.0 * v2 + 2.0 * v3 + v4);
  out.v = s.v + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  return out;
}

double tangential_contact_speed(const Vec3& v, const Vec3& omega, double r,
                                bool cross_consistent_slip) {
  const double sx = cross_consistent_slip ? v.x() - omega.y() * r : v.x() + omega.y() * r;
  const double sy = v.y() + omega.x() * r;
  return std::sqrt(sx * sx + sy * sy);
}

BounceMatrices sliding_bounce_matrices(double alpha, double cor, double r) {
  BounceMatrices m;
  m.A = Mat3::Zero();
  m.A(0, 0) = 1.0 - alpha;
  m.A(1, 1) = 1.0 - alpha;
  m.A(2, 2) = -cor;

  m.B = Mat3::Zero();
  m.B(0, 1) = alpha * r;
  m.B(1, 0) = -alpha * r;

  m.C = Mat3::Zero();
  m.C(0, 1) = -1.5 * alpha / r;
  m.C(1, 0) = 1.5 * alpha / r;

  m.D = Mat3::Zero();
  m.D(0, 0) = 1.0 - 1.5 * alpha;
  m.D(1, 1) = 1.0 - 1.5 * alpha;
  m.D(2, 2) = 1.0;
  return m;
}

BounceMatrices rolling_bounce_matrices(double cor, double r) {
  BounceMatrices m;
  m.A = Mat3::Zero();
  m.A(0, 0) = 0.6;
  m.A(1, 1) = 0.6;
  m.A(2, 2) = -cor;

  m.B = Mat3::Zero();
  m.B(0, 1) = 0.4 * r;
  m.B(1, 0) = -0.4 * r;

  m.C = Mat3::Zero();
  m.C(0, 1) = -0.6 / r;
  m.C(1, 0) = 0.6 / r;

  m.D = Mat3::Zero();
  m.D(0, 0) = 0.4;
  m.D(1, 1) = 0.4;
  m.D(2, 2) = 1.0;
  return m;
}

double bounce_alpha(const BallState& pre, const WorldGeometry& w, const TableBounceParams& bp) {
  const double vs =
      tangential_contact_speed(pre.v, pre.omega, w.ball_radius, bp.cross_consistent_slip);
  if (vs <= 0.0) return std::numeric_limits<double>::infinity();
  return bp.mu * (1.0 + bp.cor) * std::abs(pre.v.z()) / vs;
}

BallState table_bounce(const BallState& pre, const WorldGeometry& w,
                       const TableBounceParams& bp) {
  if (!(pre.v.z() < 0.0)) throw BadContact("vertical velocity must be negative");

  const double alpha = bounce_alpha(pre, w, bp);
  const BounceMatrices m = alpha < bounce_alpha_threshold
                               ? sliding_bounce_matrices(alpha, bp.cor, w.ball_radius)
                               : rolling_bounce_matrices(bp.cor, w.ball_radius);

  BallState post = pre;
  post.v = m.A * pre.v + m.B * pre.omega;
  post.omega = m.C * pre.v + m.D * pre.omega;
  return post;
}

BallState racket_impact(const BallState& pre, const Eigen::Quaterniond& q_racket,
                        const Vec3& racket_velocity, const RacketImpactParams& rp,
                        const WorldGeometry& w) {
  if (std::abs(q_racket.norm() - 1.0) > 1e-9) throw NonUnitQuaternion();

  const Mat3 R = q_racket.toRotationMatrix();  // racket -> world
  const Vec3 v_r = R.transpose() * (pre.v - racket_velocity);
  const Vec3 w_r = R.transpose() * pre.omega;

  const double r = w.ball_radius;
  const double a = rp.k_p / w.ball_mass;
  const double c = rp.k_p / rp.inertia(w);

  Mat3 A = Mat3::Zero();
  A(0, 0) = 1.0 - a;
  A(1, 1) = 1.0 - a;
  A(2, 2) = -rp.cor;

  Mat3 B = Mat3::Zero();
  B(0, 1) = a * r;
  B(1, 0) = -a * r;

  Mat3 C = Mat3::Zero();
  C(0, 1) = -c * r;
  C(1, 0) = c * r;

  Mat3 D = Mat3::Zero();
  D(0, 0) = 1.0 - c * r * r;
  D(1, 1) = 1.0 - c * r * r;
  D(2, 2) = 1.0;

  const Vec3 v_out = A * v_r + B * w_r;
  const Vec3 w_out = C * v_r + D * w_r;

  BallState post = pre;
  post.v = R * v_out + racket_velocity;
  post.omega = R * w_out;
  return post;
}

FlightSimulator::FlightSimulator(const BallState& start, double dt, int max_bounces,
                                 const WorldGeometry& w, const AeroParams& aero,
                                 const TableBounceParams& bp)
    : state_(start), dt_(dt), max_bounces_(max_bounces), world_(w), aero_(aero), bounce_(bp) {
  if (!(dt > 0.0)) throw BadProblem("dt must be positive");
  if (!start.finite()) throw NonFiniteState("start state");
}

bool FlightSimulator::step(double h) {
  const BallState s0 = state_;
  const BallState s1 = rk4_step(s0, h, aero_, world_.ball_mass);
  if (!s1.finite()) throw NonFiniteState("integration diverged");

  const double zt = world_.table_height;

  // Downward crossing of the table plane.
  if (s0.p.z() >= zt && s1.p.z() <= zt && std::min(s0.v.z(), s1.v.z()) < 0.0 &&
      s0.p.z() - s1.p.z() > 0.0) {
    double theta = (s0.p.z() - zt) / (s0.p.z() - s1.p.z());
    theta = std::clamp(theta, 0.0, 1.0);
    BallState impact = theta > 0.0 ? rk4_step(s0, theta * h, aero_, world_.ball_mass) : s0;
    impact.p.z() = zt;
    if (world_.on_footprint(impact.p.x(), impact.p.y()) && impact.v.z() < 0.0) {
      if (static_cast<int>(bounces_.size()) >= max_bounces_) {
        state_ = impact;
        live_ = false;
        stop_ = FlightStop::bounce_limit;
        return false;
      }
      const BallState post = table_bounce(impact, world_, bounce_);
      bounces_.push_back({impact.t, impact.p, impact, post});
      state_ = post;
      const double rem = (1.0 - theta) * h;
      if (rem > 1e-15) return step(rem);
      return true;
    }
  }

  // Floor contact ends the flight.
  if (s0.p.z() > 0.0 && s1.p.z() <= 0.0) {
    double theta = s0.p.z() / (s0.p.z() - s1.p.z());
    theta = std::clamp(theta, 0.0, 1.0);
    BallState grounded = theta > 0.0 ? rk4_step(s0, theta * h, aero_, world_.ball_mass) : s0;
    grounded.p.z() = 0.0;
    state_ = grounded;
    live_ = false;
    stop_ = FlightStop::floor;
    return false;
  }

  state_ = s1;
  return true;
}

bool FlightSimulator::advance_to(double t_target) {
  while (live_ && state_.t < t_target - 1e-12) {
    const double h = std::min(dt_, t_target - state_.t);
    if (!step(h)) return false;
  }
  if (live_) state_.t = t_target;  // absorb accumulated roundoff
  return live_;
}

namespace {

TrajectorySample sample_of(const BallState& s) {
  TrajectorySample out;
  out.t = s.t;
  out.p3d = s.p;
  out.omega = s.omega;
  out.visible = true;
  return out;
}

}  // namespace

FlightResult integrate_flight(const BallState& start, double duration, double dt,
                              const WorldGeometry& w, const AeroParams& aero,
                              const TableBounceParams& bp, int max_bounces) {
  if (!(duration >= 0.0)) throw BadProblem("duration must be non-negative");
  FlightSimulator sim(start, dt, max_bounces, w, aero, bp);

  FlightResult out;
  out.trajectory.samples.push_back(sample_of(start));

  const auto n_steps = static_cast<long long>(std::floor(duration / dt + 1e-9));
  for (long long k = 1; k <= n_steps; ++k) {
    if (!sim.advance_to(start.t + static_cast<double>(k) * dt)) break;
    out.trajectory.samples.push_back(sample_of(sim.state()));
  }
  if (sim.live() && sim.state().t < start.t + duration - 1e-12) {
    sim.advance_to(start.t + duration);
    out.trajectory.samples.push_back(sample_of(sim.state()));
  }
  if (!sim.live() && sim.state().t > out.trajectory.samples.back().t + 1e-12) {
    out.trajectory.samples.push_back(sample_of(sim.state()));
  }

  out.bounces = sim.bounces();
  out.stop = sim.live() ? FlightStop::duration : sim.stop_reason();
  out.final_state = sim.state();
  return out;
}

FlightResult simulate_at_times(const BallState& start, std::span<const double> times,
                               double dt, const WorldGeometry& w, const AeroParams& aero,
                               const TableBounceParams& bp, int max_bounces) {
  FlightSimulator sim(start, dt, max_bounces, w, aero, bp);

  FlightResult out;
  double prev = start.t - 1.0;
  for (double t : times) {
    if (t < start.t - 1e-12 || t <= prev) throw BadProblem("times must be increasing and >= start.t");
    prev = t;
    sim.advance_to(t);
    TrajectorySample s = sample_of(sim.state());
    s.t = t;  // a stopped flight holds its terminal state
    out.trajectory.samples.push_back(s);
  }
  out.bounces = sim.bounces();
  out.stop = sim.live() ? FlightStop::duration : sim.stop_reason();
  out.final_state = sim.state();
  return out;
}

}  // namespace ttkit
