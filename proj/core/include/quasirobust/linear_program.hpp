#pragma once

#include <vector>

#include <Eigen/Dense>

namespace quasirobust::lp {

enum class Relation { LessEqual, Equal, GreaterEqual };

/// minimize c^T x subject to row-wise `A x (rel) b`, with x >= 0 except for the
/// columns flagged free.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd constraints;
  Eigen::VectorXd rhs;
  std::vector<Relation> relations;
  std::vector<bool> free_variables;  // empty: every variable is sign-constrained
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
  Status status = Status::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
};

/// Dense two-phase tableau simplex with Bland's rule. Sized for the small
/// programs that show up at desk scale (tens of rows and columns).
Solution solve(const LinearProgram& program, double tolerance = 1e-11);

}  // namespace quasirobust::lp
