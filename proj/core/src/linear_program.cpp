#include "quasirobust/linear_program.hpp"

#include <cmath>
#include <limits>

#include "quasirobust/errors.hpp"

namespace quasirobust::lp {
namespace {

class Tableau {
 public:
  Tableau(Eigen::MatrixXd a, Eigen::VectorXd b, std::vector<int> basis)
      : a_(std::move(a)), b_(std::move(b)), basis_(std::move(basis)) {}

  // Runs the simplex method on cost vector `c`, columns with allowed[j] false
  // never enter. Returns false when unbounded.
  bool optimize(const Eigen::VectorXd& c, const std::vector<bool>& allowed, double tol) {
    const int cols = static_cast<int>(a_.cols());
    const int max_pivots = 50 * (cols + static_cast<int>(a_.rows())) + 1000;
    for (int iter = 0; iter < max_pivots; ++iter) {
      // reduced costs r_j = c_j - c_B^T column_j
      int entering = -1;
      for (int j = 0; j < cols; ++j) {
        if (!allowed[j] || is_basic(j)) continue;
        double r = c(j);
        for (int i = 0; i < a_.rows(); ++i) r -= c(basis_[i]) * a_(i, j);
        if (r < -tol) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return true;
      int leaving = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < a_.rows(); ++i) {
        if (a_(i, entering) > tol) {
          const double ratio = b_(i) / a_(i, entering);
          if (ratio < best_ratio - tol ||
              (std::abs(ratio - best_ratio) <= tol && leaving >= 0 && basis_[i] < basis_[leaving])) {
            best_ratio = ratio;
            leaving = i;
          }
        }
      }
      if (leaving < 0) return false;
      pivot(leaving, entering);
    }
    throw Error(ErrorCode::NonConvergence, "simplex pivot limit reached");
  }

  void pivot(int row, int col) {
    const double piv = a_(row, col);
    a_.row(row) /= piv;
    b_(row) /= piv;
    for (int i = 0; i < a_.rows(); ++i) {
      if (i == row) continue;
      const double f = a_(i, col);
      if (f == 0.0) continue;
      a_.row(i) -= f * a_.row(row);
      b_(i) -= f * b_(row);
    }
    basis_[row] = col;
  }

  bool is_basic(int j) const {
    for (int v : basis_) {
      if (v == j) return true;
    }
    return false;
  }

  double value(const Eigen::VectorXd& c) const {
    double v = 0.0;
    for (int i = 0; i < a_.rows(); ++i) v += c(basis_[i]) * b_(i);
    return v;
  }

  Eigen::VectorXd point(int cols) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
    for (int i = 0; i < a_.rows(); ++i) x(basis_[i]) = b_(i);
    return x;
  }

  Eigen::MatrixXd& a() { return a_; }
  std::vector<int>& basis() { return basis_; }

  void drop_row(int row) {
    const int m = static_cast<int>(a_.rows());
    Eigen::MatrixXd a(m - 1, a_.cols());
    Eigen::VectorXd b(m - 1);
    std::vector<int> basis;
    for (int i = 0, k = 0; i < m; ++i) {
      if (i == row) continue;
      a.row(k) = a_.row(i);
      b(k) = b_(i);
      basis.push_back(basis_[i]);
      ++k;
    }
    a_ = std::move(a);
    b_ = std::move(b);
    basis_ = std::move(basis);
  }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  std::vector<int> basis_;
};

}  // namespace

Solution solve(const LinearProgram& program, double tolerance) {
  const int n = static_cast<int>(program.objective.size());
  const int m = static_cast<int>(program.constraints.rows());
  if (program.constraints.cols() != n || program.rhs.size() != m ||
      static_cast<int>(program.relations.size()) != m ||
      (!program.free_variables.empty() && static_cast<int>(program.free_variables.size()) != n)) {
    throw Error(ErrorCode::DimensionMismatch, "linear program dimensions are inconsistent");
  }

  // column layout: [original | negative parts of free vars | slacks | artificials]
  std::vector<int> free_cols;
  for (int j = 0; j < n; ++j) {
    if (!program.free_variables.empty() && program.free_variables[j]) free_cols.push_back(j);
  }
  int n_slack = 0;
  for (auto r : program.relations) n_slack += (r != Relation::Equal);
  const int n_split = static_cast<int>(free_cols.size());
  const int slack0 = n + n_split;
  const int art0 = slack0 + n_slack;

  Eigen::MatrixXd rows(m, n + n_split);
  rows.leftCols(n) = program.constraints;
  for (int k = 0; k < n_split; ++k) rows.col(n + k) = -program.constraints.col(free_cols[k]);

  // normalize to b >= 0 and collect slack/artificial structure
  std::vector<Relation> rel = program.relations;
  Eigen::VectorXd b = program.rhs;
  for (int i = 0; i < m; ++i) {
    if (b(i) < 0.0) {
      rows.row(i) *= -1.0;
      b(i) = -b(i);
      if (rel[i] == Relation::LessEqual) rel[i] = Relation::GreaterEqual;
      else if (rel[i] == Relation::GreaterEqual) rel[i] = Relation::LessEqual;
    }
  }
  int n_art = 0;
  for (auto r : rel) n_art += (r != Relation::LessEqual);
  const int cols = art0 + n_art;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, cols);
  a.leftCols(n + n_split) = rows;
  std::vector<int> basis(m);
  for (int i = 0, s = slack0, t = art0; i < m; ++i) {
    if (rel[i] == Relation::LessEqual) {
      a(i, s) = 1.0;
      basis[i] = s++;
    } else if (rel[i] == Relation::GreaterEqual) {
      a(i, s++) = -1.0;
      a(i, t) = 1.0;
      basis[i] = t++;
    } else {
      a(i, t) = 1.0;
      basis[i] = t++;
    }
  }

  const double scale = 1.0 + b.cwiseAbs().maxCoeff() * (m > 0);
  Tableau tab(std::move(a), b, std::move(basis));
  Solution out;

  if (n_art > 0) {
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(cols);
    c1.tail(n_art).setOnes();
    std::vector<bool> allowed(cols, true);
    tab.optimize(c1, allowed, tolerance);
    if (tab.value(c1) > 1e3 * tolerance * scale) {
      out.status = Status::Infeasible;
      return out;
    }
    // drive remaining artificials out of the basis; redundant rows are dropped
    for (int i = 0; i < static_cast<int>(tab.basis().size());) {
      if (tab.basis()[i] < art0) {
        ++i;
        continue;
      }
      int col = -1;
      for (int j = 0; j < art0; ++j) {
        if (std::abs(tab.a()(i, j)) > 1e3 * tolerance && !tab.is_basic(j)) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        tab.pivot(i, col);
        ++i;
      } else {
        tab.drop_row(i);
      }
    }
  }

  Eigen::VectorXd c2 = Eigen::VectorXd::Zero(cols);
  c2.head(n) = program.objective;
  for (int k = 0; k < n_split; ++k) c2(n + k) = -program.objective(free_cols[k]);
  std::vector<bool> allowed(cols, true);
  for (int j = art0; j < cols; ++j) allowed[j] = false;
  if (!tab.optimize(c2, allowed, tolerance)) {
    out.status = Status::Unbounded;
    return out;
  }

  const Eigen::VectorXd full = tab.point(cols);
  out.x = full.head(n);
  for (int k = 0; k < n_split; ++k) out.x(free_cols[k]) -= full(n + k);
  out.objective = program.objective.dot(out.x);
  out.status = Status::Optimal;
  return out;
}

}  // namespace quasirobust::lp
