#include "ttkit/optim.hpp"

#include <cmath>

namespace ttkit {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi) {
  if (lo.size() == 0) return x;
  return x.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

LevMarOutcome levenberg_marquardt(const ResidualFn& residuals, const ScalarFn& objective,
                                  Eigen::VectorXd x0, const LevMarOptions& opt) {
  const bool bounded = opt.lower.size() > 0;
  const ScalarFn obj = objective
                           ? objective
                           : ScalarFn([&](const Eigen::VectorXd& x) {
                               return 0.5 * residuals(x).squaredNorm();
                             });

  LevMarOutcome out;
  out.x = bounded ? project(x0, opt.lower, opt.upper) : x0;
  const int n = static_cast<int>(out.x.size());

  Eigen::VectorXd r = residuals(out.x);
  const int m = static_cast<int>(r.size());
  out.objective = obj(out.x);
  out.history.push_back(out.objective);

  double lambda = opt.lambda_init;
  Eigen::MatrixXd jac(m, n);

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    // Forward differences; at an active upper bound the step goes inward.
    for (int j = 0; j < n; ++j) {
      double h = opt.fd_step * std::max(1.0, std::abs(out.x[j]));
      Eigen::VectorXd xp = out.x;
      if (bounded && xp[j] + h > opt.upper[j]) h = -h;
      xp[j] += h;
      jac.col(j) = (residuals(xp) - r) / h;
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-12);

    bool accepted = false;
    while (lambda <= opt.lambda_max) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * diag;
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      Eigen::VectorXd cand = out.x + step;
      if (bounded) cand = project(cand, opt.lower, opt.upper);

      const double f_cand = obj(cand);
      if (std::isfinite(f_cand) && f_cand < out.objective) {
        const double rel = (out.objective - f_cand) / std::max(out.objective, 1e-300);
        out.x = cand;
        out.objective = f_cand;
        out.history.push_back(f_cand);
        r = residuals(out.x);
        lambda = std::max(lambda * opt.lambda_down, 1e-12);
        ++out.iterations;
        accepted = true;
        if (rel < opt.objective_tol) {
          out.converged = true;
          return out;
        }
        break;
      }
      lambda *= opt.lambda_up;
    }
    if (!accepted) {
      // No descent direction left at maximum damping: local minimum.
      out.converged = true;
      return out;
    }
  }
  return out;
}

BfgsOutcome bfgs_minimize(const ScalarFn& f, Eigen::VectorXd x0, const BfgsOptions& opt) {
  const int n = static_cast<int>(x0.size());

  const auto gradient = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(n);
    for (int j = 0; j < n; ++j) {
      const double h = opt.fd_step * std::max(1.0, std::abs(x[j]));
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      g[j] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
  };

  BfgsOutcome out;
  out.x = std::move(x0);
  out.f = f(out.x);

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = gradient(out.x);

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol * std::max(1.0, std::abs(out.f))) {
      out.converged = true;
      return out;
    }

    Eigen::VectorXd d = -h_inv * g;
    if (!d.allFinite() || d.dot(g) >= 0.0) {
      h_inv.setIdentity();
      d = -g;
    }

    // Armijo backtracking.
    const double slope = g.dot(d);
    double t = 1.0;
    double f_new = out.f;
    Eigen::VectorXd x_new = out.x;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = out.x + t * d;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= out.f + 1e-4 * t * slope) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved || (out.x - x_new).lpNorm<Eigen::Infinity>() < opt.step_tol) {
      out.converged = moved;
      return out;
    }

    const Eigen::VectorXd g_new = gradient(x_new);
    const Eigen::VectorXd s = x_new - out.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
      h_inv = (identity - rho * s * y.transpose()) * h_inv *
                  (identity - rho * y * s.transpose()) +
              rho * s * s.transpose();
    }

    out.x = std::move(x_new);
    out.f = f_new;
    g = g_new;
    ++out.iterations;
  }
  return out;
}

}  // namespace ttkit
