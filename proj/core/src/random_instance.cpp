#include "quasirobust/random_instance.hpp"

#include <algorithm>

namespace quasirobust {

Eigen::VectorXd random_probabilities(std::mt19937_64& rng, int n, double alpha) {
  std::gamma_distribution<double> gam(alpha, 1.0);
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q(i) = std::max(gam(rng), 1e-12);
  return q / q.sum();
}

FiniteMarket random_market(std::mt19937_64& rng, const RandomMarketOptions& o) {
  const int n = std::uniform_int_distribution<int>(o.min_states, o.max_states)(rng);
  const int d = std::uniform_int_distribution<int>(std::min(o.min_assets, n - 1), std::min(o.max_assets, n - 1))(rng);
  std::lognormal_distribution<double> ln(0.0, 0.35);
  Eigen::MatrixXd st(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) st(i, j) = ln(rng);
  }
  const Eigen::VectorXd q = random_probabilities(rng, n, 2.0);
  const Eigen::VectorXd s0 = st.transpose() * q;
  Eigen::VectorXd p = random_probabilities(rng, n, 2.0);
  p = p.cwiseMax(o.min_probability);
  p /= p.sum();
  return FiniteMarket(s0, st, p);
}

std::vector<Measure> random_measures(std::mt19937_64& rng, const FiniteMarket& market, int count, double alpha) {
  std::vector<Measure> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out.emplace_back(random_probabilities(rng, market.n_states(), alpha), market.reference_ptr());
  return out;
}

}  // namespace quasirobust
