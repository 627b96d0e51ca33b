#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "quasirobust/market.hpp"
#include "quasirobust/measure.hpp"

namespace quasirobust {

struct RandomMarketOptions {
  int min_states = 2;
  int max_states = 4;
  int min_assets = 1;
  int max_assets = 2;
  /// Smallest reference probability.
  double min_probability = 0.05;
};

/// Arbitrage-free by construction: S_0 is the expectation of S_T under a
/// Dirichlet measure with full support.
FiniteMarket random_market(std::mt19937_64& rng, const RandomMarketOptions& options = {});

/// Dirichlet(alpha) probability vector of the given size.
Eigen::VectorXd random_probabilities(std::mt19937_64& rng, int n, double alpha = 1.0);

/// Random measures against the market's reference.
std::vector<Measure> random_measures(std::mt19937_64& rng, const FiniteMarket& market, int count, double alpha = 1.0);

}  // namespace quasirobust
