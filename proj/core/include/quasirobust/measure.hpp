#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace quasirobust {

using Reference = std::shared_ptr<const Eigen::VectorXd>;

/// A probability vector over the states of a market, absolutely continuous
/// with respect to the (strictly positive) reference probabilities it carries.
class Measure {
 public:
  /// Validates nonnegativity, size and total mass (within 1e-12).
  Measure(Eigen::VectorXd probabilities, Reference reference);

  /// Clamps round-off negatives and rescales to unit mass before validation.
  static Measure normalized(Eigen::VectorXd raw, Reference reference);

  const Eigen::VectorXd& probabilities() const { return q_; }
  const Eigen::VectorXd& reference() const { return *ref_; }
  const Reference& reference_ptr() const { return ref_; }
  int size() const { return static_cast<int>(q_.size()); }
  double operator[](int i) const { return q_(i); }

  /// Z = dQ/dP.
  Eigen::VectorXd density() const { return q_.cwiseQuotient(*ref_); }
  /// All states charged (Q equivalent to P).
  bool equivalent() const { return (q_.array() > 0.0).all(); }
  int support_size() const { return static_cast<int>((q_.array() > 0.0).count()); }

 private:
  Eigen::VectorXd q_;
  Reference ref_;
};

/// The set the adversary optimizes over: the convex hull of finitely many
/// generators, or the whole probability simplex.
class MeasureFamily {
 public:
  enum class Kind { Generators, FullSimplex };

  static MeasureFamily simplex(Reference reference);
  static MeasureFamily generators(std::vector<Measure> generators);

  Kind kind() const { return kind_; }
  const std::vector<Measure>& generator_list() const { return generators_; }
  const Reference& reference_ptr() const { return ref_; }
  int n_states() const { return static_cast<int>(ref_->size()); }

  /// Number of hull vertices (generators, or one Dirac per state).
  int vertex_count() const;
  /// Vertices as rows (K x n).
  const Eigen::MatrixXd& vertex_matrix() const { return vertices_; }
  /// Measure with the given barycentric weights over the vertices.
  Measure combine(const Eigen::VectorXd& weights) const;
  /// Hull membership by linear feasibility.
  bool contains(const Measure& q, double tolerance = 1e-10) const;
  /// Barycentric weights of q when it lies in the hull (one representation).
  bool hull_weights(const Eigen::VectorXd& q, Eigen::VectorXd& weights, double tolerance = 1e-10) const;

  bool same_hull_as(const MeasureFamily& other) const;

 private:
  MeasureFamily() = default;
  Kind kind_ = Kind::FullSimplex;
  std::vector<Measure> generators_;
  Reference ref_;
  Eigen::MatrixXd vertices_;
};

/// Relative entropy sum_i q_i ln(q_i / p_i) with 0 ln 0 := 0.
double relative_entropy(const Eigen::VectorXd& q, const Eigen::VectorXd& p);

}  // namespace quasirobust
