#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "quasirobust/measure.hpp"

namespace quasirobust {

struct Strategy {
  Eigen::VectorXd holdings;
};

/// Terminal wealth per state and the budget that financed it.
struct Payoff {
  Eigen::VectorXd wealth;
  double budget = 0.0;
};

struct Deflator {
  Eigen::VectorXd values;
  double level = 0.0;
};

struct NoArbitrageResult {
  bool arbitrage_free = false;
  std::optional<Measure> witness;
  double margin = 0.0;  // min_i q_i of the witness
};

/// One-period market with n states and d assets. Immutable; copies share the
/// underlying data and the vertex cache.
class FiniteMarket {
 public:
  /// Validates shapes, nonnegative terminal prices, positive initial prices and
  /// a strictly positive reference summing to one.
  FiniteMarket(Eigen::VectorXd initial_prices, Eigen::MatrixXd terminal_prices, Eigen::VectorXd reference);

  int n_states() const;
  int d_assets() const;
  const Eigen::VectorXd& initial_prices() const;
  const Eigen::MatrixXd& terminal_prices() const;
  const Eigen::VectorXd& reference() const;
  const Reference& reference_ptr() const;
  /// Price increments S_T - 1 S_0^T (n x d).
  const Eigen::MatrixXd& increments() const;

  /// Reduced coordinates: increments = reduced_increments * basis^T on the
  /// range, with null_directions spanning {pi : increments * pi = 0}.
  int rank() const;
  const Eigen::MatrixXd& basis() const;              // d x r
  const Eigen::MatrixXd& reduced_increments() const;  // n x r
  const Eigen::MatrixXd& null_directions() const;     // d x (d - r)

  /// Cached no-arbitrage result.
  const NoArbitrageResult& arbitrage_status() const;
  /// Throws NoArbitrageViolated when the market admits arbitrage.
  void require_no_arbitrage() const;

  /// Vertices of {z : 1 + B z >= 0} in reduced coordinates (budget x = 1).
  /// Computed once and shared between threads.
  const std::vector<Eigen::VectorXd>& unit_vertices() const;

  Measure reference_measure() const;
  Measure measure(Eigen::VectorXd probabilities) const;

 private:
  struct Data;
  std::shared_ptr<Data> data_;
};

NoArbitrageResult check_no_arbitrage(const FiniteMarket& market);

/// x + pi . (S_T - S_0) per state. Throws Inadmissible below -1e-12 and clamps
/// smaller negatives to zero.
Payoff strategy_payoff(const FiniteMarket& market, double x, const Strategy& pi);

/// {pi : A pi >= -x 1} with A the increment matrix.
struct StrategyPolytope {
  Eigen::MatrixXd A;
  Eigen::VectorXd lower;                   // -x per state
  std::vector<Eigen::VectorXd> vertices;   // minimum-norm representatives
  Eigen::VectorXd box_lower, box_upper;    // bounding box of the vertices
  Eigen::MatrixXd null_directions;         // quotiented out, d x (d - r)
};

StrategyPolytope admissible_strategy_polytope(const FiniteMarket& market, double x);

/// max over unit-budget polytope vertices of sum_i p_i h_i (1 + pi . dS_i) <= y + 1e-9.
bool deflator_member(const FiniteMarket& market, const Eigen::VectorXd& h, double y);

/// The largest pairing sum_i p_i h_i X_i over attainable payoffs with unit budget.
double deflator_budget(const FiniteMarket& market, const Eigen::VectorXd& h);

}  // namespace quasirobust
