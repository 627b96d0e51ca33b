// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "quasirobust/auxiliary.hpp"
#include "quasirobust/oracle.hpp"
#include "quasirobust/random_instance.hpp"
#include "quasirobust/robust.hpp"
#include "quasirobust_cli/instance.hpp"

using namespace quasirobust;

namespace {

namespace tol {
constexpr double kReductionValue = 1e-6;
constexpr double kReductionPayoff = 1e-5;
constexpr double kReductionSeconds = 1.0;
constexpr double kWeakDuality = 1e-6;
constexpr int kWeakDualityY = 20;
constexpr double kStrongDuality = 1e-3;
constexpr double kStrongDualitySeconds = 30.0;
constexpr double kMinimax = 1e-3;
constexpr double kOracleFloor = 2e-3;
constexpr double kSaddleResidual = 1e-5;
constexpr double kSaddleMargin = -1e-6;
constexpr int kSaddleSamples = 500;
constexpr double kConjugacyGap = 1e-4;
constexpr double kSlopeAtZero = 1e3;
constexpr double kSlopeAtInfinity = 1e-3;
constexpr double kAxiom = 1e-9;
constexpr std::size_t kAxiomSamples = 10000;
constexpr double kWorstCaseValue = 1e-6;
constexpr double kWorstCasePayoff = 1e-5;
constexpr double kLadderMargin = -1e-6;
constexpr double kBipolarReverse = 1e-6;
constexpr int kBipolarSamples = 100;
}  // namespace tol

constexpr std::uint64_t kSuiteSeed = 2024;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

MeasureFamily simplex(const FiniteMarket& m) { return MeasureFamily::simplex(m.reference_ptr()); }

AmbiguitySpec singleton(const FiniteMarket& m) {
  return AmbiguitySpec::multiple_priors(MeasureFamily::generators({m.reference_measure()}));
}

FiniteMarket two_state() {
  Eigen::VectorXd s0(1), p(2);
  Eigen::MatrixXd st(2, 1);
  s0 << 1.0;
  st << 2.0, 0.5;
  p << 0.5, 0.5;
  return FiniteMarket(s0, st, p);
}

std::vector<FiniteMarket> random_suite(std::uint64_t seed, int count, const RandomMarketOptions& opts = {}) {
  std::mt19937_64 rng(seed);
  std::vector<FiniteMarket> out;
  for (int k = 0; k < count; ++k) out.push_back(random_market(rng, opts));
  return out;
}

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1)));
  return v;
}

struct Config {
  std::string label;
  FiniteMarket market;
  AmbiguitySpec G;
  UtilitySpec u;
};

// random markets crossed with singleton/log, a two-generator hull/power 0.5 and entropic/log
std::vector<Config> duality_suite() {
  std::vector<Config> out;
  std::mt19937_64 rng(kSuiteSeed + 1);
  int k = 0;
  for (const auto& m : random_suite(kSuiteSeed + 1, 10)) {
    const std::string id = "random#" + std::to_string(k++);
    out.push_back({id + " singleton/log", m, singleton(m), UtilitySpec::log()});
    out.push_back({id + " hull/power", m, AmbiguitySpec::multiple_priors(MeasureFamily::generators(random_measures(rng, m, 2, 2.0))),
                   UtilitySpec::power(0.5)});
    out.push_back({id + " entropic/log", m, AmbiguitySpec::entropic(1.0, m.reference_ptr()), UtilitySpec::log()});
  }
  return out;
}

// instances meeting the dichotomy: power 0.5 for general G, log for variational G
std::vector<Config> saddle_suite() {
  std::vector<Config> out;
  const auto m2 = two_state();
  for (double theta : {0.5, 1.0, 2.0}) {
    out.push_back({"two-state entropic theta=" + fmt(theta) + "/log", m2, AmbiguitySpec::entropic(theta, m2.reference_ptr()),
                   UtilitySpec::log()});
  }
  std::mt19937_64 rng(kSuiteSeed + 2);
  RandomMarketOptions opts;
  opts.min_states = 3;
  opts.max_states = 3;
  const auto markets = random_suite(kSuiteSeed + 2, 6, opts);
  for (std::size_t k = 0; k < markets.size(); ++k) {
    const auto& m = markets[k];
    const std::string id = "random#" + std::to_string(k);
    if (k < 3) {
      out.push_back({id + " hull/power", m, AmbiguitySpec::multiple_priors(MeasureFamily::generators(random_measures(rng, m, 2, 2.0))),
                     UtilitySpec::power(0.5)});
    } else if (k < 5) {
      out.push_back({id + " entropic/log", m, AmbiguitySpec::entropic(1.0, m.reference_ptr()), UtilitySpec::log()});
    } else {
      out.push_back({id + " entropic/power", m, AmbiguitySpec::entropic(2.0, m.reference_ptr()), UtilitySpec::power(0.5)});
    }
  }
  return out;
}

struct SaddleRun {
  std::string label;
  SolveReport report;
  double seconds = 0.0;
  double oracle_value = 0.0, oracle_bound = 0.0;
};

const std::vector<SaddleRun>& saddle_runs() {
  static const std::vector<SaddleRun> runs = [] {
    std::vector<SaddleRun> out;
    for (const auto& c : saddle_suite()) {
      SolverOptions o;
      o.saddle_samples = tol::kSaddleSamples;
      o.strict_saddle = false;
      SaddleRun r;
      r.label = c.label;
      const auto t0 = std::chrono::steady_clock::now();
      r.report = extract_saddle(c.market, c.G, simplex(c.market), c.u, 1.0, o);
      r.seconds = seconds_since(t0);
      const auto oracle = oracle_u(c.market, c.G, simplex(c.market), c.u, 1.0);
      r.oracle_value = oracle.value;
      r.oracle_bound = oracle.grid_bound;
      out.push_back(std::move(r));
    }
    return out;
  }();
  return runs;
}

Outcome classical_reduction() {
  Outcome o;
  double dv = 0.0, dg = 0.0, slowest = 0.0;
  int k = 0;
  for (const auto& m : random_suite(kSuiteSeed, 50)) {
    const auto u = (k++ % 2 == 0) ? UtilitySpec::log() : UtilitySpec::power(0.5);
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = robust_primal_solve(m, singleton(m), simplex(m), u, 1.0);
    slowest = std::max(slowest, seconds_since(t0));
    const auto cl = solve_auxiliary_primal(m, m.reference_measure(), u, 1.0);
    dv = std::max(dv, std::abs(rep.primal_value - cl.value.value()));
    dg = std::max(dg, (rep.primal_payoff.wealth - cl.payoff.wealth).cwiseAbs().maxCoeff());
  }
  o.pass = dv <= tol::kReductionValue && dg <= tol::kReductionPayoff && slowest < tol::kReductionSeconds;
  o.detail = "50 instances, max|value diff|=" + fmt(dv) + " (tol 1e-6), max|payoff diff|=" + fmt(dg) +
             " (tol 1e-5), slowest " + fmt(slowest) + " s (limit 1 s)";
  return o;
}

Outcome weak_duality() {
  Outcome o;
  int violations = 0, pairs = 0;
  double worst = INFINITY;
  for (const auto& c : duality_suite()) {
    const double u = robust_primal_solve(c.market, c.G, simplex(c.market), c.u, 1.0).primal_value;
    const double centre = c.u.du(1.0);
    for (double y : geometric(centre * 1e-2, centre * 1e2, tol::kWeakDualityY)) {
      const double v = robust_dual_value(c.market, c.G, simplex(c.market), c.u, 1.0, y).first.value();
      worst = std::min(worst, v - u);
      ++pairs;
      if (u > v + tol::kWeakDuality) ++violations;
    }
  }
  o.pass = violations == 0;
  o.detail = std::to_string(pairs) + " (instance, y) pairs, violations=" + std::to_string(violations) +
             ", min v(y;x)-u(x)=" + fmt(worst) + " (tol -1e-6)";
  return o;
}

Outcome strong_duality() {
  Outcome o;
  double gap = 0.0, slowest = 0.0;
  for (const auto& r : saddle_runs()) {
    gap = std::max(gap, std::abs(r.report.dual_value - r.report.primal_value));
    slowest = std::max(slowest, r.seconds);
  }
  o.pass = gap <= tol::kStrongDuality && slowest < tol::kStrongDualitySeconds;
  o.detail = std::to_string(saddle_runs().size()) + " instances, max|u(x)-inf_y v(y;x)|=" + fmt(gap) +
             " (tol 1e-3), slowest full solve " + fmt(slowest) + " s (limit 30 s)";
  return o;
}

Outcome minimax() {
  Outcome o;
  double gap = 0.0, oracle_excess = -INFINITY;
  for (const auto& r : saddle_runs()) {
    const double lhs = r.report.minimax_lhs.value_or(r.report.primal_value);
    const double rhs = r.report.minimax_rhs.value_or(NAN);
    gap = std::max(gap, std::abs(lhs - rhs));
    const double limit = std::max(tol::kOracleFloor, r.oracle_bound);
    oracle_excess = std::max({oracle_excess, std::abs(lhs - r.oracle_value) - limit, std::abs(rhs - r.oracle_value) - limit});
  }
  o.pass = gap <= tol::kMinimax && oracle_excess <= 0.0;
  o.detail = "max|lhs-rhs|=" + fmt(gap) + " (tol 1e-3), worst oracle distance minus max(2e-3, grid bound)=" +
             fmt(oracle_excess) + " (must be <= 0)";
  return o;
}

Outcome saddle() {
  Outcome o;
  double residual = 0.0, payoff_margin = INFINITY, measure_margin = INFINITY;
  for (const auto& r : saddle_runs()) {
    residual = std::max(residual, r.report.saddle_residual);
    payoff_margin = std::min(payoff_margin, r.report.payoff_deviation_margin);
    measure_margin = std::min(measure_margin, r.report.measure_deviation_margin);
  }
  o.pass = residual <= tol::kSaddleResidual && payoff_margin >= tol::kSaddleMargin && measure_margin >= tol::kSaddleMargin;
  o.detail = "max residual=" + fmt(residual) + " (tol 1e-5), min payoff-deviation margin=" + fmt(payoff_margin) +
             ", min measure-deviation margin=" + fmt(measure_margin) + " (tol -1e-6, 500 deviations each)";
  return o;
}

Outcome conjugacy() {
  Outcome o;
  double gap = 0.0, slope0 = INFINITY, slope_inf = 0.0;
  int measures = 0;
  std::mt19937_64 rng(kSuiteSeed + 3);
  int k = 0;
  for (const auto& m : random_suite(kSuiteSeed + 3, 5)) {
    const auto u = (k++ % 2 == 0) ? UtilitySpec::log() : UtilitySpec::power(0.5);
    std::vector<Measure> qs{m.reference_measure(), *m.arbitrage_status().witness};
    for (auto& q : random_measures(rng, m, 10)) qs.push_back(q);
    const auto xs = geometric(0.25, 4.0, 5);
    const auto ys = geometric(u.du(4.0) / 4.0, u.du(0.25) * 4.0, 13);
    for (const auto& q : qs) {
      ++measures;
      gap = std::max(gap, conjugacy_report(m, q, u, xs, ys).max_gap);
      // secant slopes along x = 1e-2 .. 1e-10 and y = 1e2 .. 1e6; the innermost point is tested
      double s0 = 0.0, sinf = 0.0;
      for (int e = 2; e <= 10; ++e) {
        const double h = std::pow(10.0, -e);
        s0 = (solve_auxiliary_primal(m, q, u, 2.0 * h).value.value() - solve_auxiliary_primal(m, q, u, h).value.value()) / h;
      }
      for (int e = 2; e <= 6; ++e) {
        const double h = std::pow(10.0, e);
        sinf = std::abs(auxiliary_dual_value(m, q, u, 2.0 * h).value() - auxiliary_dual_value(m, q, u, h).value()) / h;
      }
      slope0 = std::min(slope0, s0);
      slope_inf = std::max(slope_inf, sinf);
    }
  }
  o.pass = gap <= tol::kConjugacyGap && slope0 > tol::kSlopeAtZero && slope_inf < tol::kSlopeAtInfinity;
  o.detail = std::to_string(measures) + " measures, max Fenchel gap=" + fmt(gap) + " (tol 1e-4), min u_Q'(0+)=" +
             fmt(slope0) + " at x=1e-10 (> 1e3), max |v_Q'(inf)|=" + fmt(slope_inf) + " at y=1e6 (< 1e-3)";
  return o;
}

Outcome axioms(const std::string& instance_dir) {
  Outcome o;
  const auto m = random_suite(kSuiteSeed + 4, 1).front();
  std::mt19937_64 rng(kSuiteSeed + 4);
  const auto gens = random_measures(rng, m, 3);
  std::vector<std::pair<std::string, AmbiguitySpec>> variants{
      {"multiple_priors/simplex", AmbiguitySpec::multiple_priors(simplex(m))},
      {"multiple_priors/hull", AmbiguitySpec::multiple_priors(MeasureFamily::generators(gens))},
      {"entropic", AmbiguitySpec::entropic(1.0, m.reference_ptr())},
      {"penalty_table", AmbiguitySpec::penalty_table(gens, {0.0, 0.4, 0.1})},
  };
  const auto demo = cli::load_instance(instance_dir + "/custom_demo.json");
  variants.emplace_back("custom (shipped demo)", *demo.ambiguity);
  double worst = 0.0;
  for (const auto& [name, G] : variants) {
    const auto rep = check_G_axioms(G, tol::kAxiomSamples, kSuiteSeed);
    worst = std::max({worst, rep.monotonicity, rep.quasiconvexity, rep.asymptotic_spread});
  }
  const auto adv = cli::load_instance(instance_dir + "/adversarial_custom.json");
  const auto arep = check_G_axioms(*adv.ambiguity, tol::kAxiomSamples, kSuiteSeed);
  const bool flagged = !arep.passed(tol::kAxiom) && arep.monotonicity_witness.has_value();
  o.pass = worst <= tol::kAxiom && flagged;
  o.detail = std::to_string(variants.size()) + " built-in variants x 1e4 tuples, worst violation=" + fmt(worst) +
             " (tol 1e-9); adversarial grid " + (flagged ? "flagged" : "NOT flagged") +
             " (monotonicity " + fmt(arep.monotonicity) + ")";
  return o;
}

Outcome worst_case_identity() {
  Outcome o;
  double dv = 0.0, spread = 0.0;
  int k = 0;
  for (const auto& m : random_suite(kSuiteSeed + 5, 20)) {
    const auto u = (k++ % 2 == 0) ? UtilitySpec::log() : UtilitySpec::power(0.5);
    const auto rep = robust_primal_solve(m, AmbiguitySpec::multiple_priors(simplex(m)), simplex(m), u, 1.0);
    dv = std::max(dv, std::abs(rep.primal_value - u.u(1.0)));
    spread = std::max(spread, rep.primal_payoff.wealth.maxCoeff() - rep.primal_payoff.wealth.minCoeff());
  }
  o.pass = dv <= tol::kWorstCaseValue && spread <= tol::kWorstCasePayoff;
  o.detail = "20 instances, max|u(x)-U(x)|=" + fmt(dv) + " (tol 1e-6), max payoff spread=" + fmt(spread) + " (tol 1e-5)";
  return o;
}

Outcome entropic_ladder(const std::string& fixture_dir) {
  Outcome o;
  std::ifstream in(fixture_dir + "/entropic_ladder.json");
  const auto fx = nlohmann::json::parse(in);
  const auto m = two_state();
  const double x = fx["instance"]["x"].get<double>();
  const double lower = robust_primal_solve(m, AmbiguitySpec::multiple_priors(simplex(m)), simplex(m), UtilitySpec::log(), x).primal_value;
  const double upper = robust_primal_solve(m, singleton(m), simplex(m), UtilitySpec::log(), x).primal_value;
  std::vector<double> thetas, values;
  double bound_margin = INFINITY, fixture_excess = -INFINITY;
  for (const auto& row : fx["ladder"]) {
    const double theta = row["theta"].get<double>();
    const double v =
        robust_primal_solve(m, AmbiguitySpec::entropic(theta, m.reference_ptr()), simplex(m), UtilitySpec::log(), x).primal_value;
    thetas.push_back(theta);
    values.push_back(v);
    bound_margin = std::min({bound_margin, v - lower, upper - v});
    const double limit = std::max(tol::kOracleFloor, row["grid_bound"].get<double>());
    fixture_excess = std::max(fixture_excess, std::abs(v - row["value"].get<double>()) - limit);
  }
  double monotone_margin = INFINITY;
  for (std::size_t k = 1; k < values.size(); ++k) monotone_margin = std::min(monotone_margin, values[k] - values[k - 1]);
  const bool monotone = monotone_margin >= tol::kLadderMargin;
  const bool bounded = bound_margin >= tol::kLadderMargin;
  o.pass = monotone && bounded && fixture_excess <= 0.0;
  std::ostringstream s;
  s << "u(theta)=";
  for (std::size_t k = 0; k < values.size(); ++k) s << (k ? ", " : "") << fmt(values[k]) << " @" << thetas[k];
  s << "; non-decreasing in theta: min step=" << fmt(monotone_margin) << " (tol -1e-6) " << (monotone ? "ok" : "VIOLATED")
    << "; within [" << fmt(lower) << ", " << fmt(upper) << "] margin=" << fmt(bound_margin) << " " << (bounded ? "ok" : "VIOLATED")
    << "; fixture distance minus max(2e-3, bound)=" << fmt(fixture_excess);
  o.detail = s.str();
  return o;
}

Outcome bipolar() {
  Outcome o;
  int forward = 0, instances = 0;
  double reverse = 0.0;
  bool rejected = true;
  for (const auto& m : random_suite(kSuiteSeed + 6, 10)) {
    ++instances;
    const auto r = oracle_bipolar(m, {}, tol::kBipolarSamples, kSuiteSeed + instances);
    forward += r.forward_violations;
    reverse = std::max(reverse, r.max_reverse_excess);
    rejected = rejected && r.super_budget_rejected;
  }
  o.pass = forward == 0 && reverse <= tol::kBipolarReverse && rejected;
  o.detail = std::to_string(instances) + " instances x 100 samples, forward violations=" + std::to_string(forward) +
             ", max reverse excess=" + fmt(reverse) + " (tol 1e-6), super-budget payoffs " + (rejected ? "rejected" : "ACCEPTED");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the robust utility solvers"};
  std::vector<int> only;
  std::string fixtures = QUASIROBUST_FIXTURE_DIR;
  std::string instances = QUASIROBUST_INSTANCE_DIR;
  app.add_option("--criterion,-c", only, "Run only these criteria (1-10)")->check(CLI::Range(1, 10));
  app.add_option("--fixtures", fixtures, "Fixture directory");
  app.add_option("--instances", instances, "Shipped instance directory");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"classical reduction", classical_reduction},
      {"weak duality chain", weak_duality},
      {"strong duality", strong_duality},
      {"minimax interchange", minimax},
      {"saddle relation", saddle},
      {"conjugacy", conjugacy},
      {"G-axiom suite", [&] { return axioms(instances); }},
      {"worst case over everything", worst_case_identity},
      {"entropic sanity ladder", [&] { return entropic_ladder(fixtures); }},
      {"bipolar", bipolar},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("aborted: ") + e.what();
    }
    failed += out.pass ? 0 : 1;
    std::printf("criterion %2d  %s  %-28s %s [%.1f s]\n", id, out.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
