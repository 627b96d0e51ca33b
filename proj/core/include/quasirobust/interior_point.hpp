#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace quasirobust::ipm {

/// Value, gradient and Hessian of a smooth concave function. Returns -inf (or
/// NaN-free garbage never used) outside its domain; gradient/Hessian pointers
/// may be null.
using Smooth = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*, Eigen::MatrixXd*)>;

/// maximize f(v) subject to A v + b >= 0 and c_j(v) >= 0, f and c_j concave.
struct Problem {
  int dim = 0;
  Smooth objective;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<Smooth> constraints;
};

struct Options {
  double mu_initial = 1.0;
  double mu_shrink = 0.1;
  double tolerance = 1e-12;  // stop once the barrier bound (m mu) falls below tolerance (1 + |f|)
  int max_newton = 200;      // per barrier stage
};

struct Result {
  Eigen::VectorXd v;
  double objective = 0.0;
  Eigen::VectorXd linear_duals;     // mu / slack
  Eigen::VectorXd nonlinear_duals;  // mu / c_j
  double duality_bound = 0.0;       // m mu at termination
  double stationarity = 0.0;        // |grad f + A^T l + sum l_j grad c_j|_inf
  int iterations = 0;
  bool converged = false;
};

/// Log-barrier path following with damped Newton steps. `start` must be
/// strictly feasible.
Result maximize(const Problem& problem, Eigen::VectorXd start, const Options& options = {});

}  // namespace quasirobust::ipm
