#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "quasirobust/ambiguity.hpp"

namespace quasirobust {

/// The quantity t(Q) fed into G. Either linear, t(Q) = sum_i q_i u_i with
/// 0 * (-inf) = 0, or a general callback returning t(Q) and optionally its
/// gradient in q.
struct InnerFunction {
  std::optional<std::vector<ExtendedReal>> linear;
  std::function<ExtendedReal(const Eigen::VectorXd& q, Eigen::VectorXd* gradient)> general;
  bool convex = true;

  static InnerFunction of_utils(std::vector<ExtendedReal> utils);
  ExtendedReal operator()(const Eigen::VectorXd& q, Eigen::VectorXd* gradient) const;
};

struct MeasureSearchOptions {
  int multistarts = 16;
  int max_iterations = 2000;
  double tolerance = 1e-12;
  double tie_tolerance = 1e-8;
  std::uint64_t seed = 0x5eed;
};

struct MeasureSearchResult {
  Eigen::VectorXd q;
  Eigen::VectorXd weights;  // over the vertices of the effective family
  ExtendedReal value;       // G(q, t(q))
  ExtendedReal inner;       // t(q)
  int evaluations = 0;
  bool tie_broken = false;
};

/// The set actually searched: a variant with its own hull searches that hull;
/// other variants search the supplied family. Throws InvalidArgument when a
/// generator family conflicts with the variant's hull.
MeasureFamily effective_family(const AmbiguitySpec& spec, const MeasureFamily& family);

/// argmin over the family of q -> G(q, t(q)).
MeasureSearchResult minimize_over_family(const AmbiguitySpec& spec, const MeasureFamily& family,
                                         const InnerFunction& inner, const MeasureSearchOptions& options = {});

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

}  // namespace quasirobust
