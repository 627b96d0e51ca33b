#include "quasirobust/measure.hpp"

#include <cmath>
#include <sstream>

#include "quasirobust/errors.hpp"
#include "quasirobust/linear_program.hpp"

namespace quasirobust {

Measure::Measure(Eigen::VectorXd probabilities, Reference reference)
    : q_(std::move(probabilities)), ref_(std::move(reference)) {
  if (!ref_) throw Error(ErrorCode::MeasureInvariantViolated, "measure without reference probabilities");
  if (q_.size() != ref_->size()) {
    std::ostringstream os;
    os << "measure has " << q_.size() << " states, reference has " << ref_->size();
    throw Error(ErrorCode::MeasureInvariantViolated, os.str());
  }
  for (int i = 0; i < q_.size(); ++i) {
    if (!(q_(i) >= 0.0) || !std::isfinite(q_(i))) {
      std::ostringstream os;
      os << "probability " << i << " is " << q_(i);
      throw Error(ErrorCode::MeasureInvariantViolated, os.str());
    }
  }
  if (std::abs(q_.sum() - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "probabilities sum to " << q_.sum();
    throw Error(ErrorCode::MeasureInvariantViolated, os.str());
  }
}

Measure Measure::normalized(Eigen::VectorXd raw, Reference reference) {
  for (int i = 0; i < raw.size(); ++i) {
    if (raw(i) < 0.0 && raw(i) > -1e-9) raw(i) = 0.0;
  }
  const double mass = raw.sum();
  if (!(mass > 0.0)) throw Error(ErrorCode::MeasureInvariantViolated, "measure with no mass");
  raw /= mass;
  return Measure(std::move(raw), std::move(reference));
}

MeasureFamily MeasureFamily::simplex(Reference reference) {
  MeasureFamily f;
  f.kind_ = Kind::FullSimplex;
  f.ref_ = std::move(reference);
  f.vertices_ = Eigen::MatrixXd::Identity(f.ref_->size(), f.ref_->size());
  return f;
}

MeasureFamily MeasureFamily::generators(std::vector<Measure> generators) {
  if (generators.empty()) throw Error(ErrorCode::InvalidArgument, "measure family needs at least one generator");
  MeasureFamily f;
  f.kind_ = Kind::Generators;
  f.ref_ = generators.front().reference_ptr();
  const auto n = f.ref_->size();
  f.vertices_.resize(static_cast<Eigen::Index>(generators.size()), n);
  for (std::size_t k = 0; k < generators.size(); ++k) {
    if (generators[k].size() != n) throw Error(ErrorCode::DimensionMismatch, "generator size differs from reference");
    f.vertices_.row(static_cast<Eigen::Index>(k)) = generators[k].probabilities().transpose();
  }
  f.generators_ = std::move(generators);
  return f;
}

int MeasureFamily::vertex_count() const { return static_cast<int>(vertices_.rows()); }

Measure MeasureFamily::combine(const Eigen::VectorXd& weights) const {
  if (weights.size() != vertices_.rows()) throw Error(ErrorCode::DimensionMismatch, "weight count differs from vertex count");
  return Measure::normalized(vertices_.transpose() * weights, ref_);
}

bool MeasureFamily::hull_weights(const Eigen::VectorXd& q, Eigen::VectorXd& weights, double tolerance) const {
  if (kind_ == Kind::FullSimplex) {
    weights = q;
    return (q.array() >= -tolerance).all() && std::abs(q.sum() - 1.0) <= 1e3 * tolerance;
  }
  // find w >= 0 with V^T w = q, sum w = 1 (phase one only)
  const int k = vertex_count();
  const int n = static_cast<int>(q.size());
  lp::LinearProgram prog;
  prog.objective = Eigen::VectorXd::Zero(k);
  prog.constraints.resize(n + 1, k);
  prog.constraints.topRows(n) = vertices_.transpose();
  prog.constraints.row(n).setOnes();
  prog.rhs.resize(n + 1);
  prog.rhs.head(n) = q;
  prog.rhs(n) = 1.0;
  prog.relations.assign(n + 1, lp::Relation::Equal);
  const auto sol = lp::solve(prog, 1e-12);
  if (sol.status != lp::Status::Optimal) return false;
  if ((vertices_.transpose() * sol.x - q).cwiseAbs().maxCoeff() > tolerance) return false;
  weights = sol.x;
  return true;
}

bool MeasureFamily::contains(const Measure& q, double tolerance) const {
  Eigen::VectorXd w;
  return hull_weights(q.probabilities(), w, tolerance);
}

bool MeasureFamily::same_hull_as(const MeasureFamily& other) const {
  if (kind_ != other.kind_) return false;
  if (kind_ == Kind::FullSimplex) return n_states() == other.n_states();
  if (vertices_.rows() != other.vertices_.rows() || vertices_.cols() != other.vertices_.cols()) return false;
  return (vertices_ - other.vertices_).cwiseAbs().maxCoeff() <= 1e-14;
}

double relative_entropy(const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
  double h = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    if (q(i) > 0.0) h += q(i) * std::log(q(i) / p(i));
  }
  return h;
}

}  // namespace quasirobust
