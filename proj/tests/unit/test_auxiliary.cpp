#include <cmath>
#include <random>

#include "common.hpp"
#include "doctest.h"
#include "quasirobust/auxiliary.hpp"
#include "quasirobust/random_instance.hpp"

using namespace testing;
using qr::UtilitySpec;

TEST_CASE("classical log problem on the two-state market") {
  const auto m = two_state();
  const auto sol = qr::solve_auxiliary_primal(m, m.reference_measure(), UtilitySpec::log(), 1.0);
  CHECK(sol.value.value() == doctest::Approx(kClassicalLog).epsilon(1e-10));
  CHECK(kClassicalLog == doctest::Approx(0.05889).epsilon(1e-4));
  CHECK(sol.holdings(0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sol.payoff.wealth(0) == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(sol.payoff.wealth(1) == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(sol.kkt_residual <= 1e-8);
}

TEST_CASE("Dirac and martingale measures") {
  const auto m = two_state();
  const auto dirac = qr::solve_auxiliary_primal(m, measure(m, {1.0, 0.0}), UtilitySpec::log(), 1.0);
  CHECK(dirac.value.value() == doctest::Approx(std::log(3.0)).epsilon(1e-8));
  CHECK(dirac.payoff.wealth(1) == doctest::Approx(0.0).epsilon(1e-8));
  const auto mm = *m.arbitrage_status().witness;
  for (const auto& u : {UtilitySpec::log(), UtilitySpec::power(0.5), UtilitySpec::power(-1.0)}) {
    const auto s = qr::solve_auxiliary_primal(m, mm, u, 2.0);
    CHECK(s.value.value() == doctest::Approx(qr::eval_utility(u, 2.0).value()).epsilon(1e-9));
    CHECK(std::abs(s.holdings(0)) <= 1e-6);
  }
}

TEST_CASE("cash lower bound and arbitrage refusal") {
  std::mt19937_64 rng(9);
  for (int s = 0; s < 10; ++s) {
    const auto m = qr::random_market(rng);
    for (const auto& q : qr::random_measures(rng, m, 3)) {
      const auto sol = qr::solve_auxiliary_primal(m, q, UtilitySpec::power(0.5), 1.3);
      CHECK(sol.value.value() >= qr::eval_utility(UtilitySpec::power(0.5), 1.3).value() - 1e-12);
    }
  }
  Eigen::MatrixXd st(2, 1);
  st << 2.0, 1.5;
  const qr::FiniteMarket arb(vec({1.0}), st, vec({0.5, 0.5}));
  CHECK(error_of([&] { qr::solve_auxiliary_primal(arb, arb.reference_measure(), UtilitySpec::log(), 1.0); }) ==
        qr::ErrorCode::NoArbitrageViolated);
}

TEST_CASE("dual value: three independent routes") {
  const auto m = two_state();
  const auto mm = *m.arbitrage_status().witness;
  const auto p = m.reference_measure();
  for (double y : {0.2, 1.0, 3.0}) {
    CHECK(qr::auxiliary_dual_value(m, mm, UtilitySpec::log(), y).value() ==
          doctest::Approx(-std::log(y) - 1.0).epsilon(1e-8));
    const double expect = -std::log(y) - 1.0 + kClassicalLog;
    CHECK(qr::auxiliary_dual_value(m, p, UtilitySpec::log(), y).value() == doctest::Approx(expect).epsilon(1e-8));
    CHECK(qr::auxiliary_conjugate(m, p, UtilitySpec::log(), y).value.value() == doctest::Approx(expect).epsilon(1e-8));
    CHECK(qr::auxiliary_dual_direct(m, p, UtilitySpec::log(), y).value.value() == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("u_Q is increasing and concave, weak duality holds pointwise") {
  std::mt19937_64 rng(31);
  for (int s = 0; s < 4; ++s) {
    const auto m = qr::random_market(rng);
    const auto q = qr::random_measures(rng, m, 1).front();
    std::vector<double> xs, us;
    for (int k = 0; k < 9; ++k) {
      xs.push_back(0.25 * std::pow(2.0, k * 0.5));
      us.push_back(qr::solve_auxiliary_primal(m, q, UtilitySpec::log(), xs.back()).value.value());
    }
    for (std::size_t k = 1; k < xs.size(); ++k) CHECK(us[k] >= us[k - 1] - 1e-8);
    for (std::size_t k = 1; k + 1 < xs.size(); ++k) {
      const double l = (xs[k + 1] - xs[k]) / (xs[k + 1] - xs[k - 1]);
      CHECK(us[k] >= l * us[k - 1] + (1 - l) * us[k + 1] - 1e-8);
    }
    for (double y : {0.1, 0.7, 2.0, 9.0}) {
      const double v = qr::auxiliary_dual_value(m, q, UtilitySpec::log(), y).value();
      for (std::size_t k = 0; k < xs.size(); ++k) CHECK(v + xs[k] * y - us[k] >= -1e-8);
    }
  }
}

TEST_CASE("conjugacy report") {
  const auto m = two_state();
  const auto mm = *m.arbitrage_status().witness;
  std::vector<double> xs, ys;
  for (int k = 0; k <= 10; ++k) {
    xs.push_back(0.1 * std::pow(100.0, k / 10.0));
    ys.push_back(0.1 * std::pow(100.0, k / 10.0));
  }
  const auto rep = qr::conjugacy_report(m, mm, UtilitySpec::log(), xs, ys);
  CHECK(rep.max_gap <= 1e-5);
  CHECK(rep.min_margin >= -1e-8);

  std::mt19937_64 rng(4);
  qr::RandomMarketOptions opts;
  opts.min_states = opts.max_states = 4;
  for (int s = 0; s < 3; ++s) {
    const auto m4 = qr::random_market(rng, opts);
    const Eigen::VectorXd tilt = (-0.5 * m4.terminal_prices().col(0).array()).exp().matrix();
    const auto q = qr::Measure::normalized(m4.reference().cwiseProduct(tilt), m4.reference_ptr());
    const auto r = qr::conjugacy_report(m4, q, UtilitySpec::power(0.5), {0.5, 1.0, 2.0}, {0.3, 1.0, 3.0});
    CHECK(r.max_gap <= 1e-4);
    CHECK(r.min_margin >= -1e-8);
  }
}

TEST_CASE("slopes at the ends of the domain") {
  const auto m = two_state();
  const auto p = m.reference_measure();
  const auto u = UtilitySpec::log();
  auto uq = [&](double x) { return qr::solve_auxiliary_primal(m, p, u, x).value.value(); };
  auto vq = [&](double y) { return qr::auxiliary_dual_value(m, p, u, y).value(); };
  CHECK((uq(2e-6) - uq(1e-6)) / 1e-6 > 1e3);
  CHECK((uq(2e4) - uq(1e4)) / 1e4 < 1e-3);
  CHECK((vq(2e4) - vq(1e4)) / 1e4 > -1e-3);
  CHECK((vq(2e-6) - vq(1e-6)) / 1e-6 < -1e3);
}

TEST_CASE("dual optimizer recovery") {
  const auto m = two_state();
  const auto p = m.reference_measure();
  const auto u = UtilitySpec::log();
  const auto sol = qr::solve_auxiliary_primal(m, p, u, 1.0);
  const double y = 1.0;
  const Eigen::VectorXd h = qr::recover_dual_optimizer(m, p, u, sol, y);
  CHECK(h(0) == doctest::Approx(1.0 / 1.5).epsilon(1e-6));
  CHECK(h(1) == doctest::Approx(1.0 / 0.75).epsilon(1e-6));
  CHECK(qr::deflator_member(m, h, y));

  const auto mm = *m.arbitrage_status().witness;
  const auto cash = qr::solve_auxiliary_primal(m, mm, u, 2.0);
  const Eigen::VectorXd hc = qr::recover_dual_optimizer(m, mm, u, cash, 0.5);
  CHECK((hc - 0.5 * mm.density()).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(qr::deflator_budget(m, hc) == doctest::Approx(0.5).epsilon(1e-8));

  const auto dirac = measure(m, {1.0, 0.0});
  const auto ds = qr::solve_auxiliary_primal(m, dirac, u, 1.0);
  const Eigen::VectorXd hd = qr::recover_dual_optimizer(m, dirac, u, ds, 1.0);
  CHECK(hd(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
  CHECK(hd(1) == 0.0);
  CHECK(qr::deflator_member(m, hd, 1.0));
  CHECK(error_of([&] { qr::recover_dual_optimizer(m, dirac, u, ds, 0.5); }) == qr::ErrorCode::MembershipFailed);
}
