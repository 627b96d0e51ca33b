#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "quasirobust/ambiguity.hpp"
#include "quasirobust/market.hpp"
#include "quasirobust/measure.hpp"
#include "quasirobust/utility.hpp"

namespace quasirobust {

/// Brute-force reference values. Nothing here calls the solvers: utilities,
/// indices, martingale vertices and superhedging prices are recomputed with
/// elementary code on plain grids.
///
/// Grids are coarse-to-fine: a full lattice at the configured resolution
/// (capped for the higher-dimensional cases) followed by two zoom passes
/// around the incumbent.
struct OracleConfig {
  int strategy_grid_per_dim = 401;
  int simplex_grid_resolution = 201;
  int y_grid = 256;
  std::size_t memory_limit_bytes = std::size_t{1} << 30;

  /// Bytes needed to materialise the nominal grids for this instance size.
  double memory_estimate(int states, int assets, int vertices) const;
};

struct OracleAnswer {
  double value = 0.0;
  /// Local Lipschitz estimate of the grid error at the final spacing.
  double grid_bound = 0.0;
  std::vector<double> holdings;
  std::vector<double> measure;
  std::int64_t evaluations = 0;
};

/// max over the strategy grid of min over the measure grid of G(q, E^q[U(g)]).
OracleAnswer oracle_u(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                      const UtilitySpec& u, double x, const OracleConfig& cfg = {});

/// min over the measure grid of G(q, v_q(y) + xy), v_q from a gridded conjugate.
OracleAnswer oracle_v(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                      const UtilitySpec& u, double x, double y, const OracleConfig& cfg = {});

/// Classical value sup E^q[U(g)] over the strategy grid at budget x.
OracleAnswer oracle_classical(const FiniteMarket& market, const std::vector<double>& q, const UtilitySpec& u, double x,
                              const OracleConfig& cfg = {});

struct BipolarReport {
  int martingale_vertices = 0;
  bool arbitrage_free = false;
  int forward_checks = 0;
  int forward_violations = 0;
  double max_forward_excess = 0.0;
  int reverse_checks = 0;
  int reverse_violations = 0;
  double max_reverse_excess = 0.0;
  bool super_budget_rejected = false;
};

/// Samples both directions of "g attainable at x iff E[g h] <= xy for all
/// deflators h in D(y)".
BipolarReport oracle_bipolar(const FiniteMarket& market, const OracleConfig& cfg = {}, int samples = 100,
                             std::uint64_t seed = 7);

/// Exact no-arbitrage test by enumerating martingale vertices (d <= 2).
bool oracle_no_arbitrage(const FiniteMarket& market);

}  // namespace quasirobust
