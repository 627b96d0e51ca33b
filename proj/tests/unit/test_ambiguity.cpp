#include <cmath>
#include <random>

#include "common.hpp"
#include "doctest.h"
#include "quasirobust/measure_optimizer.hpp"
#include "quasirobust/random_instance.hpp"

using namespace testing;
using qr::AmbiguitySpec;
using qr::ExtendedReal;
using qr::MeasureFamily;

namespace {

std::vector<ExtendedReal> utils(std::initializer_list<double> v) { return {v.begin(), v.end()}; }

AmbiguitySpec hull_priors(const qr::FiniteMarket& m) {
  return AmbiguitySpec::multiple_priors(
      MeasureFamily::generators({measure(m, {0.7, 0.3}), measure(m, {0.4, 0.6})}));
}

AmbiguitySpec custom_spec(const qr::FiniteMarket& m) {
  Eigen::MatrixXd values(2, 4);
  values << 0.0, 1.0, 2.0, 3.0,
            0.2, 1.5, 2.5, 3.0;
  return AmbiguitySpec::custom({measure(m, {0.8, 0.2}), measure(m, {0.2, 0.8})}, {0.0, 1.0, 2.0, 3.0}, values);
}

}  // namespace

TEST_CASE("eval_G closed forms and conventions") {
  const auto m = two_state();
  const auto ent = AmbiguitySpec::entropic(1.0, m.reference_ptr());
  CHECK(qr::eval_G(ent, m.reference_measure(), 3.0).value() == doctest::Approx(3.0));
  CHECK(qr::eval_G(ent, measure(m, {1.0, 0.0}), 0.0).value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(qr::eval_G(ent, m.reference_measure(), ExtendedReal::neg_inf()).is_neg_inf());
  CHECK(qr::eval_G(ent, m.reference_measure(), ExtendedReal::pos_inf()).is_pos_inf());

  const auto mp = hull_priors(m);
  CHECK(qr::eval_G(mp, measure(m, {0.9, 0.1}), 0.0).is_pos_inf());
  CHECK(qr::eval_G(mp, measure(m, {0.5, 0.5}), 1.25).value() == 1.25);
}

TEST_CASE("left inverse") {
  const auto m = two_state();
  const auto ent = AmbiguitySpec::entropic(1.0, m.reference_ptr());
  CHECK(qr::left_inverse_G(ent, m.reference_measure(), 3.0).value() == doctest::Approx(3.0));
  const auto q = measure(m, {0.9, 0.1});
  CHECK(qr::left_inverse_G(ent, q, 1.0).value() == doctest::Approx(1.0 - qr::relative_entropy(q.probabilities(), m.reference())));
  CHECK(qr::left_inverse_G(hull_priors(m), measure(m, {0.5, 0.5}), -1.0).value() == -1.0);
  CHECK(qr::left_inverse_G(custom_spec(m), measure(m, {0.8, 0.2}), 10.0).is_pos_inf());
}

TEST_CASE("left-inverse equivalence on 1000 sampled pairs") {
  const auto m = two_state();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const std::vector<AmbiguitySpec> specs{AmbiguitySpec::entropic(0.7, m.reference_ptr()), hull_priors(m), custom_spec(m)};
  for (const auto& G : specs) {
    const auto fam = qr::effective_family(G, MeasureFamily::simplex(m.reference_ptr()));
    int checked = 0;
    for (int s = 0; s < 1000; ++s) {
      const auto q = fam.combine(qr::random_probabilities(rng, fam.vertex_count()));
      const double t = 3.0 * uni(rng), mlev = 3.5 * uni(rng) - 0.25;
      const ExtendedReal g = qr::eval_G(G, q, t);
      const ExtendedReal li = qr::left_inverse_G(G, q, mlev);
      if (std::abs(g.value() - mlev) <= 1e-9 || std::abs(t - li.value()) <= 1e-9) continue;
      CHECK((g.value() >= mlev) == (t >= li.value()));
      ++checked;
    }
    CHECK(checked > 900);
  }
}

TEST_CASE("robust_eval reference cases") {
  const auto m = two_state();
  Eigen::MatrixXd st(3, 1);
  st << 2.0, 1.0, 0.5;
  const qr::FiniteMarket m3(vec({1.0}), st, vec({0.2, 0.3, 0.5}));
  const auto simplex3 = MeasureFamily::simplex(m3.reference_ptr());
  CHECK(qr::robust_eval(AmbiguitySpec::multiple_priors(simplex3), simplex3, utils({1, 2, 3})).value() == 1.0);

  const auto single = MeasureFamily::generators({m3.reference_measure()});
  const auto u = utils({0.3, -1.2, 2.5});
  CHECK(qr::robust_eval(AmbiguitySpec::multiple_priors(single), single, u).value() == 0.2 * 0.3 + 0.3 * -1.2 + 0.5 * 2.5);

  const auto ent = AmbiguitySpec::entropic(1.0, m.reference_ptr());
  const double expected = -std::log(0.5 * (1.0 + std::exp(-1.0)));
  CHECK(qr::robust_eval(ent, MeasureFamily::simplex(m.reference_ptr()), utils({0, 1})).value() ==
        doctest::Approx(expected).epsilon(1e-9));
  CHECK(expected == doctest::Approx(0.3799).epsilon(1e-4));
}

TEST_CASE("robust_eval is monotone and quasiconcave in the utilities") {
  const auto m = three_state_two_asset();
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const auto simplex = MeasureFamily::simplex(m.reference_ptr());
  const std::vector<AmbiguitySpec> specs{
      AmbiguitySpec::entropic(2.0, m.reference_ptr()),
      AmbiguitySpec::multiple_priors(MeasureFamily::generators(qr::random_measures(rng, m, 3))),
      AmbiguitySpec::multiple_priors(simplex)};
  for (const auto& G : specs) {
    for (int s = 0; s < 40; ++s) {
      std::vector<ExtendedReal> a, b, lo, mix;
      const double l = uni(rng);
      for (int i = 0; i < 3; ++i) {
        const double x = nd(rng), y = nd(rng);
        a.emplace_back(x);
        b.emplace_back(y);
        lo.emplace_back(x - std::abs(nd(rng)));
        mix.emplace_back(l * x + (1 - l) * y);
      }
      const double ra = qr::robust_eval(G, simplex, a).value();
      const double rb = qr::robust_eval(G, simplex, b).value();
      CHECK(qr::robust_eval(G, simplex, lo).value() <= ra + 1e-9);
      CHECK(qr::robust_eval(G, simplex, mix).value() >= std::min(ra, rb) - 1e-9);
    }
  }
}

TEST_CASE("smooth criterion") {
  const auto m = two_state();
  const auto q1 = measure(m, {0.6, 0.4}), q2 = measure(m, {0.3, 0.7});
  qr::Phi linear{qr::Phi::Kind::Exponential, 0.0};
  CHECK(qr::smooth_eval(AmbiguitySpec::smooth(linear, {q1, q2}, {0.5, 0.5}), utils({1, 3})).value() == doctest::Approx(2.0));
  qr::Phi e1{qr::Phi::Kind::Exponential, 1.0};
  CHECK(qr::smooth_eval(AmbiguitySpec::smooth(e1, {q1, q2}, {0.5, 0.5}), utils({0, 1})).value() ==
        doctest::Approx(-std::log(0.5 * (1 + std::exp(-1.0)))).epsilon(1e-12));
  for (const auto& phi : {e1, qr::Phi{qr::Phi::Kind::Power, 0.5}}) {
    CHECK(qr::smooth_eval(AmbiguitySpec::smooth(phi, {q1}, {1.0}), utils({1.7})).value() == doctest::Approx(1.7));
  }
  CHECK(error_of([&] {
          qr::smooth_eval(AmbiguitySpec::smooth(qr::Phi{qr::Phi::Kind::Power, 0.5}, {q1, q2}, {0.5, 0.5}), utils({-1, 1}));
        }) == qr::ErrorCode::DomainError);
}

TEST_CASE("axiom checker: built-in variants are clean") {
  const auto m = three_state_two_asset();
  std::mt19937_64 rng(3);
  const auto gens = qr::random_measures(rng, m, 3);
  const std::vector<AmbiguitySpec> specs{
      AmbiguitySpec::entropic(1.0, m.reference_ptr()),
      AmbiguitySpec::multiple_priors(MeasureFamily::generators(gens)),
      AmbiguitySpec::multiple_priors(MeasureFamily::simplex(m.reference_ptr())),
      AmbiguitySpec::penalty_table(gens, {0.0, 0.3, 0.1})};
  for (const auto& G : specs) {
    for (std::uint64_t seed : {1u, 2u, 99u}) {
      const auto rep = qr::check_G_axioms(G, 2000, seed);
      CHECK(rep.passed(1e-9));
    }
  }
}

TEST_CASE("axiom checker flags a non-monotone custom row with a witness") {
  const auto m = two_state();
  Eigen::MatrixXd values(2, 5);
  values << 0.0, 2.5, 5.0, 7.5, 10.0,
            0.0, 3.0, 1.0, 7.5, 10.0;
  const auto G = AmbiguitySpec::custom({measure(m, {0.8, 0.2}), measure(m, {0.2, 0.8})}, {0, 2.5, 5, 7.5, 10}, values);
  CHECK(G.grid_was_monotonized());
  const auto rep = qr::check_G_axioms(G, 10000, 1);
  CHECK(rep.monotonicity > 1e-9);
  REQUIRE(rep.monotonicity_witness.has_value());
  CHECK(rep.monotonicity_witness->t < rep.monotonicity_witness->t_prime);
  CHECK_FALSE(rep.passed(1e-9));
  const auto again = qr::check_G_axioms(G, 10000, 1);
  CHECK(again.monotonicity == rep.monotonicity);
  CHECK(again.quasiconvexity == rep.quasiconvexity);
}

TEST_CASE("level sets") {
  const auto m = two_state();
  const auto ent = AmbiguitySpec::entropic(1.0, m.reference_ptr());
  CHECK(qr::level_set_member(ent, m.reference_measure(), 0.0, 0.0));
  CHECK_FALSE(qr::level_set_member(hull_priors(m), measure(m, {0.95, 0.05}), 0.0, 1e6));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  int members = 0;
  for (int s = 0; s < 2000 && members < 500; ++s) {
    const double a = uni(rng), b = uni(rng);
    const auto q = measure(m, {a, 1 - a}), q2 = measure(m, {b, 1 - b});
    const double t = 0.2, c = 0.35;
    if (!qr::level_set_member(ent, q, t, c) || !qr::level_set_member(ent, q2, t, c)) continue;
    ++members;
    CHECK(qr::level_set_member(ent, measure(m, {0.5 * (a + b), 1 - 0.5 * (a + b)}), t, c));
  }
  CHECK(members == 500);
}
