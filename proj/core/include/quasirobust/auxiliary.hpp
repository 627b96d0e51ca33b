#pragma once

#include <vector>

#include <Eigen/Dense>

#include "quasirobust/extended_real.hpp"
#include "quasirobust/market.hpp"
#include "quasirobust/measure.hpp"
#include "quasirobust/utility.hpp"

namespace quasirobust {

/// Outcome of the classical problem under a fixed measure Q.
struct AuxiliarySolution {
  ExtendedReal value;
  Payoff payoff;              // optimal terminal wealth (primal)
  Eigen::VectorXd holdings;   // minimum-norm strategy generating the payoff
  Eigen::VectorXd deflator;   // optimal h (dual routes)
  double multiplier = 0.0;    // y paired with the budget
  double budget = 0.0;        // x paired with the level (dual routes)
  int iterations = 0;
  double kkt_residual = 0.0;
};

/// u_Q(x) = sup over admissible strategies of sum_i q_i U(x + pi . dS_i).
AuxiliarySolution solve_auxiliary_primal(const FiniteMarket& market, const Measure& q, const UtilitySpec& u, double x);

/// v_Q(y) = sup_x (u_Q(x) - xy) by golden-section search over log x, one
/// primal solve per trial budget. Throws Infinite when the bracket diverges.
ExtendedReal auxiliary_dual_value(const FiniteMarket& market, const Measure& q, const UtilitySpec& u, double y);

/// v_Q(y) by a single joint solve over (x, pi) of sum_i q_i U(x + pi . dS_i) - xy.
/// Also returns the maximizing budget and payoff.
AuxiliarySolution auxiliary_conjugate(const FiniteMarket& market, const Measure& q, const UtilitySpec& u, double y);

/// v_Q(y) = inf over h in D(y) of sum_i q_i V(h_i / Z_i), minimized directly
/// over deflators. Independent of the primal routes.
AuxiliarySolution auxiliary_dual_direct(const FiniteMarket& market, const Measure& q, const UtilitySpec& u, double y);

struct ConjugacyReport {
  double max_gap = 0.0;     // max_x |u_Q(x) - inf_y (v_Q(y) + xy)|
  double min_margin = 0.0;  // min over pairs of v_Q(y) + xy - u_Q(x)
  std::vector<double> primal_values, dual_values;
  bool infinite = false;
};

ConjugacyReport conjugacy_report(const FiniteMarket& market, const Measure& q, const UtilitySpec& u,
                                 const std::vector<double>& xs, const std::vector<double>& ys);

/// h_i = Z_i U'(g_i) on {Z > 0}, zero elsewhere, checked against D(y).
/// Throws MembershipFailed when the recovered deflator breaks the budget.
Eigen::VectorXd recover_dual_optimizer(const FiniteMarket& market, const Measure& q, const UtilitySpec& u,
                                       const AuxiliarySolution& primal, double y);

}  // namespace quasirobust
