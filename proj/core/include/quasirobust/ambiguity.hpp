#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quasirobust/extended_real.hpp"
#include "quasirobust/measure.hpp"

namespace quasirobust {

/// Strictly increasing concave transform for smooth criteria.
struct Phi {
  enum class Kind { Exponential, Power };
  Kind kind = Kind::Exponential;
  double parameter = 1.0;  // alpha for exponential (0 means linear), beta for power

  double apply(double t) const;
  double inverse(double s) const;
};

/// The index G(Q, t) of a quasiconcave criterion phi(X) = inf_Q G(Q, E^Q[X]).
class AmbiguitySpec {
 public:
  enum class Variant { MultiplePriors, Entropic, PenaltyTable, Smooth, Custom };

  /// G(Q, t) = t on the hull of the family, +inf elsewhere.
  static AmbiguitySpec multiple_priors(MeasureFamily family);
  /// G(Q, t) = t + KL(Q | P) / theta.
  static AmbiguitySpec entropic(double theta, Reference reference);
  /// G(Q, t) = t + gamma(Q), gamma the convex envelope of the tabulated
  /// generator penalties (+inf off the hull).
  static AmbiguitySpec penalty_table(std::vector<Measure> generators, std::vector<double> gamma);
  /// phi^{-1}(sum_k mu_k phi(E^{Q_k}[.])).
  static AmbiguitySpec smooth(Phi phi, std::vector<Measure> measures, std::vector<double> weights);
  /// Tabulated g_k(t) per generator on a common ascending t-grid. G(Q, t) is
  /// the least mixture sum_k w_k g_k(t) over weights representing Q, with the
  /// g_k linearly interpolated in t. Rows are forced non-decreasing by a
  /// running maximum; the declared rows stay available to the axiom checker.
  static AmbiguitySpec custom(std::vector<Measure> generators, std::vector<double> t_grid, Eigen::MatrixXd values,
                              std::optional<double> asymptotic_maximum = std::nullopt);

  Variant variant() const { return variant_; }
  std::string name() const;
  int n_states() const { return static_cast<int>(ref_->size()); }
  const Reference& reference_ptr() const { return ref_; }

  /// AM(G) = lim_{t -> inf} G(Q, t).
  ExtendedReal asymptotic_maximum() const { return am_; }

  /// G(Q, t) = t + penalty(Q) for multiple priors and variational variants.
  bool translation_type() const;
  /// G(Q, .) concave for every Q.
  bool concave_in_t() const;
  /// G(Q, .) strictly increasing on its finite range for every Q in the domain.
  bool strictly_increasing_in_t() const;
  /// True when the variant carries its own hull (multiple priors, penalty table, custom).
  bool has_hull() const;
  const MeasureFamily& hull() const;

  // variant data
  double theta() const { return theta_; }
  const std::vector<double>& gamma() const { return gamma_; }
  const Phi& phi() const { return phi_; }
  const std::vector<Measure>& mixture_measures() const { return mixture_; }
  const Eigen::VectorXd& mixture_weights() const { return mixture_weights_; }
  const std::vector<double>& t_grid() const { return t_grid_; }
  const Eigen::MatrixXd& grid_values() const { return grid_; }
  const Eigen::MatrixXd& declared_grid_values() const { return raw_grid_; }
  bool grid_was_monotonized() const { return monotonized_; }
  /// Hull generators are affinely independent, so weights representing Q are unique.
  bool unique_representation() const { return coordinates_.has_value(); }

  /// Penalty c(Q) of a translation-type variant (+inf off the domain).
  ExtendedReal penalty(const Eigen::VectorXd& q) const;
  /// Custom rows interpolated at t (declared or monotonized), one entry per generator.
  Eigen::VectorXd custom_rows(double t, bool declared = false) const;
  /// Slopes of the monotonized rows at t (right derivative).
  Eigen::VectorXd custom_row_slopes(double t) const;

 private:
  AmbiguitySpec() = default;
  Variant variant_ = Variant::MultiplePriors;
  Reference ref_;
  ExtendedReal am_ = ExtendedReal::pos_inf();
  std::optional<MeasureFamily> hull_;
  double theta_ = 1.0;
  std::vector<double> gamma_;
  Phi phi_;
  std::vector<Measure> mixture_;
  Eigen::VectorXd mixture_weights_;
  std::vector<double> t_grid_;
  Eigen::MatrixXd grid_, raw_grid_;
  bool monotonized_ = false;
  // unique barycentric coordinates when the generators are affinely independent
  std::optional<Eigen::MatrixXd> coordinates_;

  friend ExtendedReal eval_custom(const AmbiguitySpec&, const Eigen::VectorXd&, double, bool);
  friend bool custom_weights(const AmbiguitySpec&, const Eigen::VectorXd&, Eigen::VectorXd&);
};

/// G(Q, t) with G(Q, -inf) = -inf and G(Q, +inf) = AM(G). Throws Unsupported
/// for the smooth variant and GridOutOfRange for custom grids.
ExtendedReal eval_G(const AmbiguitySpec& spec, const Measure& q, ExtendedReal t);

/// Same with the declared (possibly non-monotone) custom rows.
ExtendedReal eval_G_declared(const AmbiguitySpec& spec, const Measure& q, ExtendedReal t);

/// inf{t : G(Q, t) >= m}; +inf when m is beyond the attainable range.
ExtendedReal left_inverse_G(const AmbiguitySpec& spec, const Measure& q, double m);

/// inf over the family of G(Q, sum_i q_i utils_i).
ExtendedReal robust_eval(const AmbiguitySpec& spec, const MeasureFamily& family, const std::vector<ExtendedReal>& utils);

/// phi^{-1}(sum_k mu_k phi(e_k)).
ExtendedReal smooth_eval(const AmbiguitySpec& spec, const std::vector<ExtendedReal>& expectations);

struct AxiomWitness {
  Eigen::VectorXd q, q_prime;
  double t = 0.0, t_prime = 0.0, lambda = 0.0;
};

struct AxiomReport {
  std::size_t samples = 0;
  double monotonicity = 0.0;    // worst G(q, t1) - G(q, t2) over t1 < t2
  double quasiconvexity = 0.0;  // worst G(mix) - max(endpoints)
  double asymptotic_spread = 0.0;
  std::optional<AxiomWitness> monotonicity_witness, quasiconvexity_witness;
  bool applicable = true;

  bool passed(double tolerance = 1e-9) const {
    return monotonicity <= tolerance && quasiconvexity <= tolerance && asymptotic_spread <= tolerance;
  }
};

/// Samples tuples (q, q', t, t', lambda) and records the worst axiom violations.
/// Deterministic for a given seed.
AxiomReport check_G_axioms(const AmbiguitySpec& spec, std::size_t samples, std::uint64_t seed);

/// G(Q, t) <= c.
bool level_set_member(const AmbiguitySpec& spec, const Measure& q, double t, double c);

}  // namespace quasirobust
