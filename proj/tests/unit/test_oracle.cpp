#include <cmath>

#include "common.hpp"
#include "doctest.h"
#include "quasirobust/oracle.hpp"
#include "quasirobust/robust.hpp"

using namespace testing;
using qr::AmbiguitySpec;
using qr::MeasureFamily;
using qr::UtilitySpec;

TEST_CASE("oracle_u reference values") {
  const auto m = two_state();
  const auto simplex = MeasureFamily::simplex(m.reference_ptr());
  const auto single = AmbiguitySpec::multiple_priors(MeasureFamily::generators({m.reference_measure()}));
  const auto a = qr::oracle_u(m, single, simplex, UtilitySpec::log(), 1.0);
  CHECK(std::abs(a.value - kClassicalLog) <= std::max(2e-3, a.grid_bound));
  CHECK(a.value <= kClassicalLog + 1e-12);

  const auto full = qr::oracle_u(m, AmbiguitySpec::multiple_priors(simplex), simplex, UtilitySpec::log(), 1.0);
  CHECK(std::abs(full.value) <= 1e-6);
  CHECK(full.holdings.at(0) == 0.0);
}

TEST_CASE("oracle_v reference values") {
  const auto m = two_state();
  const auto simplex = MeasureFamily::simplex(m.reference_ptr());
  const auto mm = *m.arbitrage_status().witness;
  const auto Gmm = AmbiguitySpec::multiple_priors(MeasureFamily::generators({mm}));
  for (double y : {0.5, 2.0}) {
    const auto v = qr::oracle_v(m, Gmm, simplex, UtilitySpec::log(), 1.0, y);
    CHECK(std::abs(v.value - (-std::log(y) - 1.0 + y)) <= std::max(1e-4, v.grid_bound));
  }
  const auto single = AmbiguitySpec::multiple_priors(MeasureFamily::generators({m.reference_measure()}));
  const auto vs = qr::oracle_v(m, single, simplex, UtilitySpec::log(), 1.0, 1.0);
  CHECK(std::abs(vs.value - kClassicalLog) <= std::max(1e-4, vs.grid_bound));
}

TEST_CASE("oracle agrees with the entropic solver") {
  const auto m = two_state();
  const auto simplex = MeasureFamily::simplex(m.reference_ptr());
  const auto G = AmbiguitySpec::entropic(1.0, m.reference_ptr());
  const auto o = qr::oracle_u(m, G, simplex, UtilitySpec::log(), 1.0);
  const auto rep = qr::robust_primal_solve(m, G, simplex, UtilitySpec::log(), 1.0);
  CHECK(std::abs(o.value - rep.primal_value) <= std::max(2e-3, o.grid_bound));
  for (double y : {0.5, 1.0}) {
    const double dv = qr::robust_dual_value(m, G, simplex, UtilitySpec::log(), 1.0, y).first.value();
    const auto ov = qr::oracle_v(m, G, simplex, UtilitySpec::log(), 1.0, y);
    CHECK(std::abs(dv - ov.value) <= 1e-4);
  }
}

TEST_CASE("oracle grids converge toward the solver on a doubling ladder") {
  const auto m = two_state();
  const auto simplex = MeasureFamily::simplex(m.reference_ptr());
  const auto G = AmbiguitySpec::entropic(1.0, m.reference_ptr());
  const double target = qr::robust_primal_solve(m, G, simplex, UtilitySpec::log(), 1.0).primal_value;
  for (int res : {26, 51, 101, 201}) {
    qr::OracleConfig cfg;
    cfg.strategy_grid_per_dim = 2 * res - 1;
    cfg.simplex_grid_resolution = res;
    const auto o = qr::oracle_u(m, G, simplex, UtilitySpec::log(), 1.0, cfg);
    CHECK(std::abs(o.value - target) <= std::max(2e-3, o.grid_bound));
  }
}

TEST_CASE("bipolar report") {
  for (const auto& m : {two_state(), three_state_two_asset()}) {
    const auto r = qr::oracle_bipolar(m);
    CHECK(r.arbitrage_free);
    CHECK(r.martingale_vertices >= 1);
    CHECK(r.forward_violations == 0);
    CHECK(r.reverse_violations == 0);
    CHECK(r.max_reverse_excess <= 1e-6);
    CHECK(r.super_budget_rejected);
  }
}

TEST_CASE("scale refusal and configuration checks") {
  Eigen::MatrixXd st = Eigen::MatrixXd::Ones(5, 1);
  st(0, 0) = 1.5;
  st(4, 0) = 0.5;
  const qr::FiniteMarket big(vec({1.0}), st, Eigen::VectorXd::Constant(5, 0.2));
  const auto simplex = MeasureFamily::simplex(big.reference_ptr());
  CHECK(error_of([&] { qr::oracle_u(big, AmbiguitySpec::multiple_priors(simplex), simplex, UtilitySpec::log(), 1.0); }) ==
        qr::ErrorCode::ScaleRefused);
  const auto m = two_state();
  qr::OracleConfig tiny;
  tiny.simplex_grid_resolution = 2;
  const auto s2 = MeasureFamily::simplex(m.reference_ptr());
  CHECK(error_of([&] { qr::oracle_u(m, AmbiguitySpec::multiple_priors(s2), s2, UtilitySpec::log(), 1.0, tiny); }) ==
        qr::ErrorCode::InvalidArgument);
  qr::OracleConfig small;
  small.memory_limit_bytes = 16;
  CHECK(error_of([&] { qr::oracle_u(m, AmbiguitySpec::multiple_priors(s2), s2, UtilitySpec::log(), 1.0, small); }) ==
        qr::ErrorCode::ScaleRefused);
}
