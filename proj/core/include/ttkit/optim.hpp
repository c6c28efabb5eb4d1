#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace ttkit {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

struct LevMarOptions {
  int max_iterations = 60;
  double objective_tol = 1e-12;  // relative decrease per accepted step
  double lambda_init = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 1.0 / 3.0;
  double lambda_max = 1e12;
  double fd_step = 1e-6;  // forward-difference step, scaled per parameter
  Eigen::VectorXd lower;  // empty = unbounded; candidates are projected
  Eigen::VectorXd upper;
};

struct LevMarOutcome {
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // objective after each accepted step
};

/// Damped Gauss-Newton with Marquardt scaling and forward-difference
/// Jacobians. `objective` decides step acceptance; pass the robust loss here
/// when `residuals` carries IRLS weights, or leave it empty for plain 1/2|r|^2.
LevMarOutcome levenberg_marquardt(const ResidualFn& residuals, const ScalarFn& objective,
                                  Eigen::VectorXd x0, const LevMarOptions& opt);

struct BfgsOptions {
  int max_iterations = 150;
  double grad_tol = 1e-7;   // infinity norm, relative to max(1, |f|)
  double step_tol = 1e-12;
  double fd_step = 1e-6;    // central-difference step, scaled per parameter
};

struct BfgsOutcome {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Quasi-Newton minimization with central-difference gradients and an Armijo
/// backtracking line search.
BfgsOutcome bfgs_minimize(const ScalarFn& f, Eigen::VectorXd x0, const BfgsOptions& opt);

}  // namespace ttkit
