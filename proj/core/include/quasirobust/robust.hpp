#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "quasirobust/ambiguity.hpp"
#include "quasirobust/auxiliary.hpp"
#include "quasirobust/market.hpp"
#include "quasirobust/measure_optimizer.hpp"
#include "quasirobust/utility.hpp"

namespace quasirobust {

struct SolverOptions {
  std::uint64_t seed = 1;
  double tolerance = 1e-8;
  int line_searches = 64;
  int exchange_rounds = 200;
  int saddle_samples = 500;
  bool strict_saddle = true;
  MeasureSearchOptions measure;
};

struct SolveReport {
  double x = 0.0;
  double primal_value = 0.0;
  Payoff primal_payoff;
  Eigen::VectorXd holdings;
  std::optional<Measure> worst_case_measure;
  double y_star = 0.0;
  double dual_value = 0.0;
  std::optional<Measure> dual_measure;
  std::optional<double> minimax_lhs, minimax_rhs;
  double duality_gap = 0.0;
  double saddle_residual = 0.0;
  double kkt_closure = 0.0;
  double payoff_deviation_margin = 0.0;
  double measure_deviation_margin = 0.0;
  bool boundary_minimum = false;
  bool converged = true;
  struct {
    int primal = 0, polish = 0, dual = 0, saddle = 0;
  } iterations;
};

/// argmin over the family of G(Q, E^Q[U(payoff)]) and its value. Throws
/// AllInfinite when G is +inf over the whole family.
std::pair<Measure, ExtendedReal> worst_case_measure(const FiniteMarket& market, const AmbiguitySpec& G,
                                                    const MeasureFamily& family, const Payoff& payoff,
                                                    const UtilitySpec& u, const MeasureSearchOptions& options = {});

/// The robust criterion of a payoff (the smooth criterion is evaluated directly).
ExtendedReal robust_value(const AmbiguitySpec& G, const MeasureFamily& family, const Payoff& payoff, const UtilitySpec& u,
                          const MeasureSearchOptions& options = {});

/// u(x) = sup over admissible payoffs of the robust criterion. Fills the
/// primal fields of the report.
SolveReport robust_primal_solve(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                                const UtilitySpec& u, double x, const SolverOptions& options = {});

/// v(y; x) = inf_Q G(Q, v_Q(y) + xy) and the minimizing measure.
std::pair<ExtendedReal, Measure> robust_dual_value(const FiniteMarket& market, const AmbiguitySpec& G,
                                                   const MeasureFamily& family, const UtilitySpec& u, double x, double y,
                                                   const SolverOptions& options = {});

struct DualMinimum {
  double y_star = 0.0;
  double value = 0.0;
  std::optional<Measure> measure;
  bool boundary_minimum = false;
  int evaluations = 0;
};

/// inf_{y > 0} v(y; x) by a geometric scan of y followed by golden refinement.
DualMinimum robust_dual_minimize(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                                 const UtilitySpec& u, double x, const SolverOptions& options = {});

struct MinimaxResult {
  double lhs = 0.0;  // sup inf
  double rhs = 0.0;  // inf sup
  double gap = 0.0;
  std::optional<Measure> rhs_measure;
};

/// Compares sup_X inf_Q with inf_Q sup_X. Requires U >= 0 or G concave in t.
MinimaxResult minimax_check(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                            const UtilitySpec& u, double x, const SolverOptions& options = {});

/// inf_Q G(Q, u_Q(x)), the upper bound in the weak duality chain.
std::pair<ExtendedReal, Measure> inf_sup_value(const FiniteMarket& market, const AmbiguitySpec& G,
                                               const MeasureFamily& family, const UtilitySpec& u, double x,
                                               const SolverOptions& options = {});

/// Full solve: primal, dual, minimax and the sampled saddle inequalities.
SolveReport extract_saddle(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                           const UtilitySpec& u, double x, const SolverOptions& options = {});

struct SweepRow {
  double x = 0.0;
  double u = 0.0;
  std::optional<double> v, gap, y_star;
  Eigen::VectorXd q;
  double distance_to_reference = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  double monotonicity_violation = 0.0;  // max u(x_k) - u(x_{k+1})
  int concavity_violations = 0;         // reported, never asserted
};

/// Primal and dual values over an ascending x-grid, run on up to `jobs` threads.
SweepTable value_sweep(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                       const UtilitySpec& u, const std::vector<double>& xs, const SolverOptions& options = {},
                       int jobs = 1);

}  // namespace quasirobust
