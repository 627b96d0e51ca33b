#include <cmath>
#include <random>

#include "common.hpp"
#include "doctest.h"

using namespace testing;
using qr::UtilitySpec;

TEST_CASE("utility values at reference points") {
  const auto log_u = UtilitySpec::log();
  const auto pow_u = UtilitySpec::power(0.5);
  CHECK(qr::eval_utility(log_u, 1.0).value() == doctest::Approx(0.0));
  CHECK(qr::eval_utility(pow_u, 4.0).value() == doctest::Approx(4.0));
  CHECK(qr::eval_utility(log_u, 0.0).is_neg_inf());
  CHECK(qr::eval_utility(pow_u, 0.0).value() == 0.0);
  CHECK(qr::eval_utility(UtilitySpec::power(-1.0), 0.0).is_neg_inf());
  CHECK(error_of([&] { qr::eval_utility(log_u, -0.1); }) == qr::ErrorCode::NegativeWealth);
}

TEST_CASE("marginal, inverse marginal and conjugate") {
  const auto log_u = UtilitySpec::log();
  const auto pow_u = UtilitySpec::power(0.5);
  CHECK(qr::marginal(log_u, 2.0) == doctest::Approx(0.5));
  CHECK(qr::marginal(pow_u, 4.0) == doctest::Approx(0.5));
  CHECK(qr::marginal(pow_u, 16.0) == doctest::Approx(0.25));
  CHECK(qr::marginal(log_u, 1e-6) >= 1e6 * (1 - 1e-12));
  CHECK(qr::inverse_marginal(log_u, 0.5) == doctest::Approx(2.0));
  CHECK(qr::inverse_marginal(pow_u, 0.25) == doctest::Approx(16.0));
  CHECK(qr::inverse_marginal(pow_u, 0.5) == doctest::Approx(4.0));
  CHECK(qr::conjugate(log_u, 1.0).value() == doctest::Approx(-1.0));
  CHECK(qr::conjugate(pow_u, 1.0).value() == doctest::Approx(1.0));
  CHECK(error_of([&] { qr::inverse_marginal(log_u, 0.0); }) == qr::ErrorCode::NonpositiveDual);
  CHECK(error_of([&] { qr::conjugate(log_u, -1.0); }) == qr::ErrorCode::NonpositiveDual);
}

TEST_CASE("inverse marginal round trip on a grid") {
  for (const auto& u : {UtilitySpec::log(), UtilitySpec::power(0.5), UtilitySpec::power(-2.0), UtilitySpec::power(0.3)}) {
    for (int k = -20; k <= 20; ++k) {
      const double y = std::pow(10.0, k / 5.0);
      CHECK(std::abs(qr::marginal(u, qr::inverse_marginal(u, y)) - y) <= 1e-10 * y);
    }
  }
}

TEST_CASE("Fenchel-Young with equality at x = I(y)") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lx(-5.0, 5.0);
  for (const auto& u : {UtilitySpec::log(), UtilitySpec::power(0.5), UtilitySpec::power(-1.0)}) {
    for (int s = 0; s < 500; ++s) {
      const double x = std::exp(lx(rng)), y = std::exp(lx(rng));
      CHECK(qr::eval_utility(u, x).value() <= qr::conjugate(u, y).value() + x * y + 1e-8 * (1 + std::abs(x * y)));
      const double xi = qr::inverse_marginal(u, y);
      const double lhs = qr::eval_utility(u, xi).value();
      const double rhs = qr::conjugate(u, y).value() + xi * y;
      CHECK(std::abs(lhs - rhs) <= 1e-8 * (1 + std::abs(rhs)));
    }
  }
}

TEST_CASE("monotone, strictly concave, Inada on sampled grids") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lx(-4.0, 4.0), lam(0.01, 0.99);
  for (const auto& u : {UtilitySpec::log(), UtilitySpec::power(0.5), UtilitySpec::power(-0.5)}) {
    for (int s = 0; s < 300; ++s) {
      double a = std::exp(lx(rng)), b = std::exp(lx(rng));
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      const double l = lam(rng);
      CHECK(qr::eval_utility(u, a).value() < qr::eval_utility(u, b).value());
      CHECK(qr::eval_utility(u, l * a + (1 - l) * b).value() >
            l * qr::eval_utility(u, a).value() + (1 - l) * qr::eval_utility(u, b).value());
      CHECK(qr::marginal(u, a) > qr::marginal(u, b));
    }
    CHECK(qr::marginal(u, 1e-9) > 1e3);
    CHECK(qr::marginal(u, 1e9) < 1e-3);
  }
}

TEST_CASE("conjugate is convex and non-increasing") {
  for (const auto& u : {UtilitySpec::log(), UtilitySpec::power(0.5)}) {
    double prev = INFINITY;
    for (int k = -30; k <= 30; ++k) {
      const double y = std::pow(10.0, k / 10.0), h = y * 1e-3;
      const double v = qr::conjugate(u, y).value();
      CHECK(v <= prev);
      prev = v;
      CHECK(qr::conjugate(u, y - h).value() + qr::conjugate(u, y + h).value() - 2 * v >= -1e-12 * (1 + std::abs(v)));
    }
  }
}

TEST_CASE("asymptotic elasticity") {
  CHECK(qr::asymptotic_elasticity(UtilitySpec::power(0.5)) == doctest::Approx(0.5));
  CHECK(qr::asymptotic_elasticity(UtilitySpec::log()) == doctest::Approx(0.0));
  std::vector<std::pair<double, double>> pts;
  for (int k = -20; k <= 60; ++k) {
    const double x = std::pow(10.0, k / 10.0);
    pts.emplace_back(x, std::pow(x, 0.3) / 0.3);
  }
  CHECK(std::abs(qr::asymptotic_elasticity(UtilitySpec::table(pts)) - 0.3) <= 1e-3);
  CHECK(error_of([] { qr::asymptotic_elasticity(UtilitySpec::power(-1.0)); }) == qr::ErrorCode::NotApplicable);
}

TEST_CASE("tabulated utility interpolates inside the grid and refuses outside") {
  const auto t = UtilitySpec::table({{0.5, -0.6931471805599453}, {1.0, 0.0}, {2.0, 0.6931471805599453}, {4.0, 1.3862943611198906}});
  CHECK(qr::eval_utility(t, 1.0).value() == doctest::Approx(0.0));
  CHECK(qr::eval_utility(t, 1.5).value() > 0.0);
  CHECK(qr::eval_utility(t, 1.5).value() < std::log(2.0));
  CHECK(qr::marginal(t, 1.5) > qr::marginal(t, 3.0));
  CHECK(error_of([&] { qr::eval_utility(t, 8.0); }) != static_cast<qr::ErrorCode>(-1));
}
