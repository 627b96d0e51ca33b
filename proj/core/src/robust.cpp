#include "quasirobust/robust.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <thread>

#include "internal.hpp"
#include "quasirobust/errors.hpp"
#include "quasirobust/interior_point.hpp"

namespace quasirobust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<ExtendedReal> utilities(const UtilitySpec& u, const Eigen::VectorXd& wealth) {
  std::vector<ExtendedReal> out;
  out.reserve(static_cast<std::size_t>(wealth.size()));
  for (Eigen::Index i = 0; i < wealth.size(); ++i) out.push_back(eval_utility(u, std::max(wealth(i), 0.0)));
  return out;
}

ExtendedReal expectation(const Eigen::VectorXd& q, const std::vector<ExtendedReal>& utils) {
  ExtendedReal s = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) s += ExtendedReal(q(i)) * utils[static_cast<std::size_t>(i)];
  return s;
}

Eigen::VectorXd wealth_of(const FiniteMarket& m, double x, const Eigen::VectorXd& z) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(m.n_states(), x);
  if (z.size()) w += m.reduced_increments() * z;
  return w;
}

Payoff payoff_of(const FiniteMarket& m, double x, const Eigen::VectorXd& z) {
  Eigen::VectorXd w = wealth_of(m, x, z);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = std::max(w(i), 0.0);
  return Payoff{std::move(w), x};
}

// q -> sum_i q_i U(x + B_i z) as a constraint block in (z, s) coordinates
struct StateObjective {
  const FiniteMarket& m;
  const UtilitySpec& u;
  double x;

  double operator()(const Eigen::VectorXd& q, const Eigen::VectorXd& z, Eigen::VectorXd* g, Eigen::MatrixXd* H) const {
    const Eigen::MatrixXd& B = m.reduced_increments();
    const Eigen::VectorXd w = wealth_of(m, x, z);
    Eigen::VectorXd d1, d2;
    const double f = detail::expected_utility(u, q, w, (g || H) ? &d1 : nullptr, H ? &d2 : nullptr);
    if (g) *g = B.transpose() * d1;
    if (H) *H = B.transpose() * d2.asDiagonal() * B;
    return f;
  }
};

struct Cut {
  Eigen::VectorXd q;
  double shift = 0.0;  // translation variants: G(q, t) <= t + shift
};

// max_z min_k (f_k(z) + level_k) in epigraph form; returns z and the epigraph value
std::pair<Eigen::VectorXd, double> epigraph_solve(const FiniteMarket& m, const StateObjective& F,
                                                  const std::vector<Cut>& cuts, const std::vector<double>& levels,
                                                  Eigen::VectorXd z0, int& iterations) {
  const int r = m.rank();
  const int n = m.n_states();
  ipm::Problem P;
  P.dim = r + 1;
  P.A = Eigen::MatrixXd::Zero(n, r + 1);
  P.A.leftCols(r) = m.reduced_increments();
  P.b = Eigen::VectorXd::Constant(n, F.x);
  P.objective = [r](const Eigen::VectorXd& v, Eigen::VectorXd* g, Eigen::MatrixXd* H) {
    if (g) *g = Eigen::VectorXd::Unit(r + 1, r);
    if (H) H->setZero(r + 1, r + 1);
    return v(r);
  };
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    P.constraints.push_back([&, k, r](const Eigen::VectorXd& v, Eigen::VectorXd* g, Eigen::MatrixXd* H) {
      Eigen::VectorXd gz;
      Eigen::MatrixXd Hz;
      const double f = F(cuts[k].q, v.head(r), g ? &gz : nullptr, H ? &Hz : nullptr);
      if (g) {
        g->resize(r + 1);
        g->head(r) = gz;
        (*g)(r) = -1.0;
      }
      if (H) {
        H->setZero(r + 1, r + 1);
        H->topLeftCorner(r, r) = Hz;
      }
      return f + levels[k] - v(r);
    });
  }
  double smin = kInf;
  for (std::size_t k = 0; k < cuts.size(); ++k) smin = std::min(smin, F(cuts[k].q, z0, nullptr, nullptr) + levels[k]);
  Eigen::VectorXd start(r + 1);
  start.head(r) = z0;
  start(r) = smin - 1.0;
  const auto res = ipm::maximize(P, start);
  iterations += res.iterations;
  return {res.v.head(r), res.v(r)};
}

Eigen::VectorXd shrink_inside(const Eigen::VectorXd& z) { return 0.999 * z; }

bool already_cut(const std::vector<Cut>& cuts, const Eigen::VectorXd& q) {
  for (const auto& c : cuts) {
    if ((c.q - q).cwiseAbs().maxCoeff() <= 1e-12) return true;
  }
  return false;
}

void check_assumption(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                      const UtilitySpec& u, double x) {
  if (G.variant() == AmbiguitySpec::Variant::Smooth) {
    std::vector<ExtendedReal> e;
    for (const auto& q : G.mixture_measures()) e.push_back(solve_auxiliary_primal(market, q, u, x).value);
    if (smooth_eval(G, e).is_finite()) return;
    throw Error(ErrorCode::AssumptionViolated, "smooth criterion of the classical values is not finite");
  }
  const MeasureFamily eff = effective_family(G, family);
  std::vector<Eigen::VectorXd> cands;
  for (int k = 0; k < eff.vertex_count(); ++k) cands.push_back(eff.vertex_matrix().row(k).transpose());
  cands.push_back(market.reference());
  std::ostringstream why;
  for (const auto& qv : cands) {
    const Measure q(qv, market.reference_ptr());
    const ExtendedReal uq = solve_auxiliary_primal(market, q, u, x).value;
    if (!uq.is_finite()) {
      why << " u_Q(x) infinite;";
      continue;
    }
    try {
      if (eval_G(G, q, uq).is_finite()) return;
      why << " G(Q, u_Q(x)) infinite;";
    } catch (const Error& e) {
      if (e.code() != ErrorCode::GridOutOfRange) throw;
      why << " " << e.what() << ";";
    }
  }
  throw Error(ErrorCode::AssumptionViolated, "no candidate measure gives a finite G(Q, u_Q(x)):" + why.str());
}

// F(z) for the polish line searches
double criterion(const FiniteMarket& m, const AmbiguitySpec& G, const MeasureFamily& family, const UtilitySpec& u,
                 double x, const Eigen::VectorXd& z, const MeasureSearchOptions& mo) {
  const Eigen::VectorXd w = wealth_of(m, x, z);
  if (w.minCoeff() < -1e-12 * std::max(1.0, x)) return -kInf;
  return robust_value(G, family, payoff_of(m, x, z), u, mo).value();
}

Eigen::VectorXd random_weights(std::mt19937_64& rng, int k, double sparsity = 0.0) {
  std::exponential_distribution<double> ex(1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::VectorXd w(k);
  for (int i = 0; i < k; ++i) w(i) = (sparsity > 0.0 && uni(rng) < sparsity) ? 0.0 : ex(rng);
  if (!(w.sum() > 0.0)) w(std::uniform_int_distribution<int>(0, k - 1)(rng)) = 1.0;
  return w / w.sum();
}

Eigen::VectorXd random_strategy(const FiniteMarket& m, double x, std::mt19937_64& rng) {
  const auto& V = m.unit_vertices();
  const Eigen::VectorXd lam = random_weights(rng, static_cast<int>(V.size()));
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m.rank());
  for (std::size_t k = 0; k < V.size(); ++k) z += lam(static_cast<Eigen::Index>(k)) * x * V[k];
  return z;
}

// derivative-free polish: golden-section along segments toward random polytope points
Eigen::VectorXd polish(const FiniteMarket& m, const AmbiguitySpec& G, const MeasureFamily& family, const UtilitySpec& u,
                       double x, Eigen::VectorXd z, double& value, const SolverOptions& opt, int& evaluations) {
  if (m.rank() == 0) return z;
  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int ls = 0; ls < opt.line_searches; ++ls) {
    Eigen::VectorXd target = random_strategy(m, x, rng);
    if (ls % 2 == 1) target = z + 0.01 * (target - z);
    const Eigen::VectorXd dir = target - z;
    const double len = dir.norm();
    if (!(len > 0.0)) continue;
    auto f = [&](double t) {
      ++evaluations;
      return criterion(m, G, family, u, x, z + t * dir, opt.measure);
    };
    double a = 0.0, b = 1.0;
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = f(c), fd = f(d);
    while ((b - a) * len > opt.tolerance) {
      if (fc >= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - ratio * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + ratio * (b - a);
        fd = f(d);
      }
    }
    const double t = fc >= fd ? c : d;
    const double ft = std::max(fc, fd);
    if (ft > value) {
      value = ft;
      z = z + t * dir;
    }
  }
  return z;
}

SolveReport smooth_primal(const FiniteMarket& m, const AmbiguitySpec& G, const UtilitySpec& u, double x) {
  const int r = m.rank();
  const StateObjective F{m, u, x};
  const auto& mus = G.mixture_measures();
  const Eigen::VectorXd& mu = G.mixture_weights();
  const Phi& phi = G.phi();
  auto dphi = [&](double t, double* d2) {
    if (phi.kind == Phi::Kind::Exponential) {
      const double e = std::exp(-phi.parameter * t);
      *d2 = -phi.parameter * e;
      return e;
    }
    *d2 = (phi.parameter - 1.0) * std::pow(t, phi.parameter - 2.0);
    return std::pow(t, phi.parameter - 1.0);
  };
  SolveReport rep;
  rep.x = x;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(r);
  if (r > 0) {
    ipm::Problem P;
    P.dim = r;
    P.A = m.reduced_increments();
    P.b = Eigen::VectorXd::Constant(m.n_states(), x);
    P.objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd* g, Eigen::MatrixXd* H) {
      double f = 0.0;
      if (g) g->setZero(r);
      if (H) H->setZero(r, r);
      for (std::size_t k = 0; k < mus.size(); ++k) {
        Eigen::VectorXd gk;
        Eigen::MatrixXd Hk;
        const double e = F(mus[k].probabilities(), v, (g || H) ? &gk : nullptr, H ? &Hk : nullptr);
        if (!std::isfinite(e)) return -kInf;
        if (phi.kind == Phi::Kind::Power && !(e > 0.0)) return -kInf;
        const double w = mu(static_cast<Eigen::Index>(k));
        f += w * phi.apply(e);
        double d2 = 0.0;
        const double d1 = dphi(e, &d2);
        if (g) *g += w * d1 * gk;
        if (H) *H += w * (d2 * gk * gk.transpose() + d1 * Hk);
      }
      return f;
    };
    const auto res = ipm::maximize(P, z);
    z = res.v;
    rep.iterations.primal = res.iterations;
  }
  rep.primal_payoff = payoff_of(m, x, z);
  rep.holdings = r > 0 ? Eigen::VectorXd(m.basis() * z) : Eigen::VectorXd::Zero(m.d_assets());
  rep.primal_value = robust_eval(G, MeasureFamily::simplex(m.reference_ptr()), utilities(u, rep.primal_payoff.wealth)).value();
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(m.n_states());
  for (std::size_t k = 0; k < mus.size(); ++k) avg += mu(static_cast<Eigen::Index>(k)) * mus[k].probabilities();
  rep.worst_case_measure = Measure::normalized(avg, m.reference_ptr());
  return rep;
}

double supply_level(const AmbiguitySpec& G, const Measure& q, ExtendedReal t) {
  const ExtendedReal g = eval_G(G, q, t);
  return g.value();
}

}  // namespace

std::pair<Measure, ExtendedReal> worst_case_measure(const FiniteMarket& market, const AmbiguitySpec& G,
                                                    const MeasureFamily& family, const Payoff& payoff,
                                                    const UtilitySpec& u, const MeasureSearchOptions& options) {
  if (payoff.wealth.size() != market.n_states()) throw Error(ErrorCode::DimensionMismatch, "payoff size differs from state count");
  if (payoff.wealth.minCoeff() < 0.0) throw Error(ErrorCode::Inadmissible, "payoff has negative wealth");
  const auto res = minimize_over_family(G, family, InnerFunction::of_utils(utilities(u, payoff.wealth)), options);
  if (res.value.is_pos_inf()) throw Error(ErrorCode::AllInfinite, "G is +inf over the whole family");
  return {Measure::normalized(res.q, market.reference_ptr()), res.value};
}

ExtendedReal robust_value(const AmbiguitySpec& G, const MeasureFamily& family, const Payoff& payoff, const UtilitySpec& u,
                          const MeasureSearchOptions& options) {
  const auto utils = utilities(u, payoff.wealth);
  if (G.variant() == AmbiguitySpec::Variant::Smooth) return robust_eval(G, family, utils);
  return minimize_over_family(G, family, InnerFunction::of_utils(utils), options).value;
}

SolveReport robust_primal_solve(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                                const UtilitySpec& u, double x, const SolverOptions& opt) {
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  market.require_no_arbitrage();
  check_assumption(market, G, family, u, x);
  if (G.variant() == AmbiguitySpec::Variant::Smooth) return smooth_primal(market, G, u, x);

  const int r = market.rank();
  const MeasureFamily eff = effective_family(G, family);
  const StateObjective F{market, u, x};
  SolveReport rep;
  rep.x = x;

  auto evaluate = [&](const Eigen::VectorXd& z) {
    const Payoff pay = payoff_of(market, x, z);
    return minimize_over_family(G, eff, InnerFunction::of_utils(utilities(u, pay.wealth)), opt.measure);
  };

  Eigen::VectorXd z = Eigen::VectorXd::Zero(r);
  MeasureSearchResult at = evaluate(z);
  double best = at.value.value();

  if (r > 0) {
    std::vector<Cut> cuts;
    auto add_cut = [&](const Eigen::VectorXd& q, double shift) {
      if (!already_cut(cuts, q)) cuts.push_back({q, shift});
    };
    for (int k = 0; k < eff.vertex_count(); ++k) {
      const Eigen::VectorXd q = eff.vertex_matrix().row(k).transpose();
      if (G.translation_type()) {
        const ExtendedReal c = G.penalty(q);
        if (c.is_finite()) add_cut(q, c.value());
      } else {
        add_cut(q, 0.0);
      }
    }
    if (G.translation_type()) {
      const ExtendedReal c = G.penalty(market.reference());
      if (c.is_finite()) add_cut(market.reference(), c.value());
    }
    add_cut(at.q, G.translation_type() ? at.value.value() - at.inner.value() : 0.0);

    bool converged = false;
    Eigen::VectorXd zk = z;
    for (int round = 0; round < opt.exchange_rounds; ++round) {
      double upper = 0.0;
      if (G.translation_type()) {
        std::vector<double> levels;
        for (const auto& c : cuts) levels.push_back(c.shift);
        auto sol = epigraph_solve(market, F, cuts, levels, shrink_inside(zk), rep.iterations.primal);
        zk = sol.first;
        upper = sol.second;
      } else {
        // bisection on the level m with left inverses of the custom index
        auto ginv = [&](const Cut& c, double mlev) { return left_inverse_G(G, Measure(c.q, market.reference_ptr()), mlev); };
        double lo = kInf;
        for (const auto& c : cuts) lo = std::min(lo, supply_level(G, Measure(c.q, market.reference_ptr()), F(c.q, zk, nullptr, nullptr)));
        double hi = -kInf;
        for (const auto& c : cuts) {
          const Measure q(c.q, market.reference_ptr());
          hi = std::max(hi, supply_level(G, q, solve_auxiliary_primal(market, q, u, x).value));
        }
        hi = std::max(hi, lo);
        Eigen::VectorXd zlo = zk;
        for (int it = 0; it < 100 && hi - lo > 1e-11 * (1.0 + std::abs(lo)); ++it) {
          const double mid = 0.5 * (lo + hi);
          std::vector<double> levels;
          bool possible = true;
          for (const auto& c : cuts) {
            const ExtendedReal L = ginv(c, mid);
            if (L.is_pos_inf()) possible = false;
            levels.push_back(L.is_neg_inf() ? 1e300 : -L.value());
          }
          if (possible) {
            auto sol = epigraph_solve(market, F, cuts, levels, shrink_inside(zlo), rep.iterations.primal);
            if (sol.second >= -1e-13) {
              lo = mid;
              zlo = sol.first;
              continue;
            }
          }
          hi = mid;
        }
        zk = zlo;
        upper = hi;
      }
      MeasureSearchResult res = evaluate(zk);
      const double val = res.value.value();
      if (val > best) {
        best = val;
        z = zk;
        at = res;
      }
      if (upper - val <= 1e-10 * (1.0 + std::abs(val))) {
        converged = true;
        break;
      }
      if (already_cut(cuts, res.q)) {
        converged = upper - val <= opt.tolerance * (1.0 + std::abs(val));
        break;
      }
      add_cut(res.q, G.translation_type() ? val - res.inner.value() : 0.0);
    }
    rep.converged = converged;
    z = polish(market, G, eff, u, x, z, best, opt, rep.iterations.polish);
    at = evaluate(z);
  }

  rep.primal_payoff = payoff_of(market, x, z);
  rep.holdings = r > 0 ? Eigen::VectorXd(market.basis() * z) : Eigen::VectorXd::Zero(market.d_assets());
  rep.primal_value = at.value.value();
  rep.worst_case_measure = Measure::normalized(at.q, market.reference_ptr());
  return rep;
}

std::pair<ExtendedReal, Measure> robust_dual_value(const FiniteMarket& market, const AmbiguitySpec& G,
                                                   const MeasureFamily& family, const UtilitySpec& u, double x, double y,
                                                   const SolverOptions& opt) {
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  if (!(y > 0.0)) throw Error(ErrorCode::NonpositiveDual, "dual level must be positive");
  if (G.variant() == AmbiguitySpec::Variant::Smooth) {
    throw Error(ErrorCode::Unsupported, "the dual problem needs an index G; the smooth criterion is solved in the primal only");
  }
  market.require_no_arbitrage();
  InnerFunction inner;
  inner.general = [&](const Eigen::VectorXd& q, Eigen::VectorXd* grad) -> ExtendedReal {
    AuxiliarySolution sol;
    try {
      sol = auxiliary_conjugate(market, Measure::normalized(q, market.reference_ptr()), u, y);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Infinite) throw;
      if (grad) grad->setZero(q.size());
      return ExtendedReal::pos_inf();
    }
    if (grad) {
      grad->resize(q.size());
      for (Eigen::Index i = 0; i < q.size(); ++i) (*grad)(i) = u.u(std::max(sol.payoff.wealth(i), 1e-300));
    }
    return sol.value + ExtendedReal(x * y);
  };
  inner.convex = true;
  const auto res = minimize_over_family(G, family, inner, opt.measure);
  return {res.value, Measure::normalized(res.q, market.reference_ptr())};
}

std::pair<ExtendedReal, Measure> inf_sup_value(const FiniteMarket& market, const AmbiguitySpec& G,
                                               const MeasureFamily& family, const UtilitySpec& u, double x,
                                               const SolverOptions& opt) {
  if (G.variant() == AmbiguitySpec::Variant::Smooth) {
    throw Error(ErrorCode::Unsupported, "the inf-sup side needs an index G");
  }
  InnerFunction inner;
  inner.general = [&](const Eigen::VectorXd& q, Eigen::VectorXd* grad) -> ExtendedReal {
    const auto sol = solve_auxiliary_primal(market, Measure::normalized(q, market.reference_ptr()), u, x);
    if (grad) {
      grad->resize(q.size());
      for (Eigen::Index i = 0; i < q.size(); ++i) (*grad)(i) = u.u(std::max(sol.payoff.wealth(i), 1e-300));
    }
    return sol.value;
  };
  inner.convex = true;
  const auto res = minimize_over_family(G, family, inner, opt.measure);
  return {res.value, Measure::normalized(res.q, market.reference_ptr())};
}

DualMinimum robust_dual_minimize(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                                 const UtilitySpec& u, double x, const SolverOptions& opt) {
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  DualMinimum out;
  const double center = u.du(x);
  std::vector<double> ly;
  std::vector<double> vals;
  SolverOptions coarse = opt;
  coarse.measure.tolerance = std::max(opt.measure.tolerance, 1e-8);
  coarse.measure.max_iterations = std::min(opt.measure.max_iterations, 200);
  auto value_at = [&](double l, const SolverOptions& o) {
    ++out.evaluations;
    try {
      return robust_dual_value(market, G, family, u, x, std::exp(l), o).first.value();
    } catch (const Error& e) {
      // level above the tabulated t-range
      if (e.code() != ErrorCode::GridOutOfRange) throw;
      return std::numeric_limits<double>::infinity();
    }
  };
  const int points = 48;
  const double lo = std::log(center * 1e-4), hi = std::log(center * 1e4);
  for (int k = 0; k < points; ++k) {
    const double l = lo + (hi - lo) * k / (points - 1);
    ly.push_back(l);
    vals.push_back(value_at(l, coarse));
  }
  auto argmin = [&] { return static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin()); };
  std::size_t k = argmin();
  const double spacing = (hi - lo) / (points - 1);
  if (k == 0 || k + 1 == ly.size()) {
    // widen once on the offending side
    const bool left = k == 0;
    std::vector<double> extra_l, extra_v;
    for (int j = 1; j <= points / 3; ++j) {
      const double l = left ? lo - j * spacing * 3.0 : hi + j * spacing * 3.0;
      extra_l.push_back(l);
      extra_v.push_back(value_at(l, coarse));
    }
    if (left) {
      std::reverse(extra_l.begin(), extra_l.end());
      std::reverse(extra_v.begin(), extra_v.end());
      ly.insert(ly.begin(), extra_l.begin(), extra_l.end());
      vals.insert(vals.begin(), extra_v.begin(), extra_v.end());
    } else {
      ly.insert(ly.end(), extra_l.begin(), extra_l.end());
      vals.insert(vals.end(), extra_v.begin(), extra_v.end());
    }
    k = argmin();
    out.boundary_minimum = k == 0 || k + 1 == ly.size();
  }
  double a = ly[k > 0 ? k - 1 : k], b = ly[k + 1 < ly.size() ? k + 1 : k];
  double best_l = ly[k], best_v = vals[k];
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = value_at(c, opt), fd = value_at(d, opt);
  while (b - a > 1e-8) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = value_at(c, opt);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = value_at(d, opt);
    }
  }
  if (fc < best_v) {
    best_v = fc;
    best_l = c;
  }
  if (fd < best_v) {
    best_v = fd;
    best_l = d;
  }
  out.y_star = std::exp(best_l);
  auto fin = robust_dual_value(market, G, family, u, x, out.y_star, opt);
  out.value = fin.first.value();
  out.measure = fin.second;
  return out;
}

MinimaxResult minimax_check(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                            const UtilitySpec& u, double x, const SolverOptions& opt) {
  const bool nonnegative_u = (u.family() == UtilitySpec::Family::Power && u.exponent() > 0.0) ||
                             (u.family() == UtilitySpec::Family::Table && u.knots_u().front() >= 0.0);
  if (G.variant() == AmbiguitySpec::Variant::Smooth || !(nonnegative_u || G.concave_in_t())) {
    throw Error(ErrorCode::PreconditionViolated, "minimax interchange needs U >= 0 or G(Q, .) concave");
  }
  MinimaxResult out;
  out.lhs = robust_primal_solve(market, G, family, u, x, opt).primal_value;
  auto rhs = inf_sup_value(market, G, family, u, x, opt);
  out.rhs = rhs.first.value();
  out.rhs_measure = rhs.second;
  out.gap = out.lhs - out.rhs;
  return out;
}

SolveReport extract_saddle(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                           const UtilitySpec& u, double x, const SolverOptions& opt) {
  if (G.variant() == AmbiguitySpec::Variant::Smooth) {
    throw Error(ErrorCode::Unsupported, "saddle extraction needs an index G");
  }
  if (!G.strictly_increasing_in_t()) {
    throw Error(ErrorCode::PreconditionViolated, "saddle extraction needs G(Q, .) strictly increasing");
  }
  SolveReport rep = robust_primal_solve(market, G, family, u, x, opt);
  const DualMinimum dual = robust_dual_minimize(market, G, family, u, x, opt);
  rep.y_star = dual.y_star;
  rep.dual_value = dual.value;
  rep.dual_measure = dual.measure;
  rep.boundary_minimum = dual.boundary_minimum;
  rep.iterations.dual = dual.evaluations;
  rep.duality_gap = rep.dual_value - rep.primal_value;
  rep.minimax_lhs = rep.primal_value;
  try {
    const bool nonnegative_u = (u.family() == UtilitySpec::Family::Power && u.exponent() > 0.0);
    if (nonnegative_u || G.concave_in_t()) rep.minimax_rhs = inf_sup_value(market, G, family, u, x, opt).first.value();
  } catch (const Error&) {
    rep.minimax_rhs.reset();
  }

  const Measure& qhat = *rep.dual_measure;
  const Eigen::VectorXd zhat = qhat.density();
  const Eigen::VectorXd& g = rep.primal_payoff.wealth;
  Eigen::VectorXd Y;
  if (u.family() != UtilitySpec::Family::Table) Y = auxiliary_dual_direct(market, qhat, u, rep.y_star).deflator;
  for (int i = 0; i < market.n_states(); ++i) {
    if (!(qhat[i] > 1e-9)) continue;
    const double closure = std::abs(g(i) - u.inv_du(zhat(i) * u.du(g(i)) / zhat(i)));
    rep.kkt_closure = std::max(rep.kkt_closure, closure);
    const double r = Y.size() ? std::abs(g(i) - u.inv_du(Y(i) / zhat(i))) : closure;
    rep.saddle_residual = std::max(rep.saddle_residual, r);
  }

  // sampled saddle inequalities
  const MeasureFamily eff = effective_family(G, family);
  const auto utils_hat = utilities(u, g);
  const ExtendedReal base = eval_G(G, qhat, expectation(qhat.probabilities(), utils_hat));
  std::mt19937_64 rng(opt.seed + 17);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int r = market.rank();
  Eigen::VectorXd zstar = Eigen::VectorXd::Zero(r);
  if (r > 0) zstar = market.basis().transpose() * rep.holdings;
  rep.payoff_deviation_margin = kInf;
  rep.measure_deviation_margin = kInf;
  std::ostringstream witness;
  for (int s = 0; s < opt.saddle_samples; ++s) {
    Eigen::VectorXd zr = r > 0 ? random_strategy(market, x, rng) : Eigen::VectorXd(0);
    if (s % 2 == 1 && r > 0) zr = zstar + 0.05 * uni(rng) * (zr - zstar);
    const Payoff dev = payoff_of(market, x, zr);
    const ExtendedReal val = eval_G(G, qhat, expectation(qhat.probabilities(), utilities(u, dev.wealth)));
    const double margin = (base - val).value();
    if (margin < rep.payoff_deviation_margin) {
      rep.payoff_deviation_margin = margin;
      if (margin < -1e-6) witness << "payoff deviation " << dev.wealth.transpose() << " improves by " << -margin << "; ";
    }
  }
  for (int s = 0; s < opt.saddle_samples; ++s) {
    Eigen::VectorXd w = random_weights(rng, eff.vertex_count(), 0.3);
    Eigen::VectorXd q = eff.vertex_matrix().transpose() * w;
    if (s % 2 == 1) q = qhat.probabilities() + 0.05 * uni(rng) * (q - qhat.probabilities());
    const Measure qm = Measure::normalized(q, market.reference_ptr());
    const ExtendedReal val = eval_G(G, qm, expectation(qm.probabilities(), utils_hat));
    const double margin = (val - base).value();
    if (margin < rep.measure_deviation_margin) {
      rep.measure_deviation_margin = margin;
      if (margin < -1e-6) witness << "measure " << q.transpose() << " lowers the criterion by " << -margin << "; ";
    }
  }
  rep.iterations.saddle = 2 * opt.saddle_samples;
  if (opt.strict_saddle && (rep.payoff_deviation_margin < -1e-6 || rep.measure_deviation_margin < -1e-6)) {
    throw Error(ErrorCode::SaddleInequalityViolated, witness.str());
  }
  return rep;
}

SweepTable value_sweep(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                       const UtilitySpec& u, const std::vector<double>& xs, const SolverOptions& opt, int jobs) {
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!(xs[k] > 0.0) || (k > 0 && !(xs[k] > xs[k - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "x-grid must be positive and ascending");
    }
  }
  SweepTable table;
  table.rows.resize(xs.size());
  std::vector<std::exception_ptr> errors(xs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < xs.size(); k = next++) {
      try {
        SweepRow row;
        row.x = xs[k];
        const SolveReport rep = robust_primal_solve(market, G, family, u, xs[k], opt);
        row.u = rep.primal_value;
        row.q = rep.worst_case_measure->probabilities();
        row.distance_to_reference = (row.q - market.reference()).cwiseAbs().sum();
        if (G.variant() != AmbiguitySpec::Variant::Smooth) {
          const DualMinimum d = robust_dual_minimize(market, G, family, u, xs[k], opt);
          row.v = d.value;
          row.gap = d.value - rep.primal_value;
          row.y_star = d.y_star;
        }
        table.rows[k] = std::move(row);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(xs.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t k = 0; k + 1 < table.rows.size(); ++k) {
    table.monotonicity_violation = std::max(table.monotonicity_violation, table.rows[k].u - table.rows[k + 1].u);
  }
  for (std::size_t k = 1; k + 1 < table.rows.size(); ++k) {
    const double x0 = xs[k - 1], x1 = xs[k], x2 = xs[k + 1];
    const double chord = table.rows[k - 1].u + (table.rows[k + 1].u - table.rows[k - 1].u) * (x1 - x0) / (x2 - x0);
    if (table.rows[k].u < chord - 1e-8) ++table.concavity_violations;
  }
  return table;
}

}  // namespace quasirobust
