#include "quasirobust/auxiliary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quasirobust/errors.hpp"
#include "internal.hpp"
#include "quasirobust/interior_point.hpp"

namespace quasirobust {

using detail::expected_utility;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOverflowGuard = 1e300;

void check_inputs(const FiniteMarket& market, const Measure& q) {
  if (q.size() != market.n_states()) throw Error(ErrorCode::DimensionMismatch, "measure size differs from state count");
  market.require_no_arbitrage();
}

ExtendedReal exact_value(const UtilitySpec& u, const Eigen::VectorXd& q, const Eigen::VectorXd& w) {
  ExtendedReal s = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) s += ExtendedReal(q(i)) * eval_utility(u, std::max(w(i), 0.0));
  return s;
}

Payoff make_payoff(Eigen::VectorXd w, double x) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) < -1e-12 * std::max(1.0, x)) throw Error(ErrorCode::Inadmissible, "solver returned negative wealth");
    w(i) = std::max(w(i), 0.0);
  }
  return Payoff{std::move(w), x};
}

// Multipliers of the wealth constraints. On states pinned at zero wealth the
// barrier estimate mu / slack is swamped by rounding, so they are recomputed
// from stationarity B^T (q U' + lambda) = 0 restricted to the active set.
Eigen::VectorXd boundary_multipliers(const Eigen::MatrixXd& B, const Eigen::VectorXd& qdu, const Eigen::VectorXd& w,
                                     const Eigen::VectorXd& barrier, double x) {
  const auto n = w.size();
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w(i) <= 1e-8 * x) active.push_back(i);
  }
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
  if (active.empty()) return lambda;
  Eigen::MatrixXd BA(B.cols(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) BA.col(static_cast<Eigen::Index>(k)) = B.row(active[k]).transpose();
  const Eigen::VectorXd rhs = -(B.transpose() * qdu);
  const Eigen::VectorXd la = BA.completeOrthogonalDecomposition().solve(rhs);
  if ((BA * la - rhs).cwiseAbs().maxCoeff() > 1e-6 * (1.0 + rhs.cwiseAbs().maxCoeff()) || la.minCoeff() < -1e-8) {
    for (auto i : active) lambda(i) = barrier(i);
    return lambda;
  }
  for (std::size_t k = 0; k < active.size(); ++k) lambda(active[k]) = std::max(la(static_cast<Eigen::Index>(k)), 0.0);
  return lambda;
}

}  // namespace

AuxiliarySolution solve_auxiliary_primal(const FiniteMarket& market, const Measure& q, const UtilitySpec& u, double x) {
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  check_inputs(market, q);
  const Eigen::MatrixXd& B = market.reduced_increments();
  const int n = market.n_states();
  const int r = market.rank();
  const Eigen::VectorXd& qv = q.probabilities();

  AuxiliarySolution out;
  out.budget = x;
  if (r == 0) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, x);
    out.value = exact_value(u, qv, w);
    out.payoff = Payoff{w, x};
    out.holdings = Eigen::VectorXd::Zero(market.d_assets());
    out.multiplier = u.du(x);
    return out;
  }

  ipm::Problem P;
  P.dim = r;
  P.A = B;
  P.b = Eigen::VectorXd::Constant(n, x);
  P.objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd* g, Eigen::MatrixXd* H) {
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(n, x) + B * z;
    Eigen::VectorXd d1, d2;
    const double f = expected_utility(u, qv, w, (g || H) ? &d1 : nullptr, H ? &d2 : nullptr);
    if (g) *g = B.transpose() * d1;
    if (H) *H = B.transpose() * d2.asDiagonal() * B;
    return f;
  };
  const auto res = ipm::maximize(P, Eigen::VectorXd::Zero(r));
  if (res.objective > kOverflowGuard) throw Error(ErrorCode::Unbounded, "auxiliary value exceeds the overflow guard");

  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, x) + B * res.v;
  out.payoff = make_payoff(w, x);
  out.value = exact_value(u, qv, out.payoff.wealth);
  out.holdings = market.basis() * res.v;
  Eigen::VectorXd d1;
  expected_utility(u, qv, w, &d1, nullptr);
  const Eigen::VectorXd lambda = boundary_multipliers(B, d1, w, res.linear_duals, x);
  out.multiplier = d1.sum() + lambda.sum();
  out.iterations = res.iterations;
  out.kkt_residual = std::max((B.transpose() * (d1 + lambda)).cwiseAbs().maxCoeff(),
                              lambda.cwiseProduct(w.cwiseMax(0.0)).cwiseAbs().maxCoeff());
  return out;
}

AuxiliarySolution auxiliary_conjugate(const FiniteMarket& market, const Measure& q, const UtilitySpec& u, double y) {
  if (!(y > 0.0)) throw Error(ErrorCode::NonpositiveDual, "dual level must be positive");
  check_inputs(market, q);
  const Eigen::MatrixXd& B = market.reduced_increments();
  const int n = market.n_states();
  const int r = market.rank();
  const Eigen::VectorXd& qv = q.probabilities();

  ipm::Problem P;
  P.dim = r + 1;
  P.A.resize(n, r + 1);
  P.A.col(0).setOnes();
  P.A.rightCols(r) = B;
  P.b = Eigen::VectorXd::Zero(n);
  P.objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd* g, Eigen::MatrixXd* H) {
    const Eigen::VectorXd w = P.A * v;
    Eigen::VectorXd d1, d2;
    const double f = expected_utility(u, qv, w, (g || H) ? &d1 : nullptr, H ? &d2 : nullptr);
    if (g) {
      *g = P.A.transpose() * d1;
      (*g)(0) -= y;
    }
    if (H) *H = P.A.transpose() * d2.asDiagonal() * P.A;
    return f - v(0) * y;
  };
  Eigen::VectorXd start = Eigen::VectorXd::Zero(r + 1);
  start(0) = std::clamp(u.inv_du(y), 1e-8, 1e8);
  const auto res = ipm::maximize(P, start);
  const double x = res.v(0);
  if (!(x < 1e15) || res.objective > kOverflowGuard) {
    throw Error(ErrorCode::Infinite, "conjugate budget diverges: v_Q(y) is infinite");
  }
  AuxiliarySolution out;
  out.budget = x;
  out.multiplier = y;
  out.payoff = make_payoff(P.A * res.v, x);
  out.value = exact_value(u, qv, out.payoff.wealth) - ExtendedReal(x * y);
  out.holdings = market.basis() * res.v.tail(r);
  out.iterations = res.iterations;
  out.kkt_residual = std::max(res.stationarity, res.duality_bound);
  return out;
}

ExtendedReal auxiliary_dual_value(const FiniteMarket& market, const Measure& q, const UtilitySpec& u, double y) {
  if (!(y > 0.0)) throw Error(ErrorCode::NonpositiveDual, "dual level must be positive");
  check_inputs(market, q);
  auto phi = [&](double lx) {
    const double x = std::exp(lx);
    return solve_auxiliary_primal(market, q, u, x).value - ExtendedReal(x * y);
  };
  double la = std::log(1e-6), lb = std::log(1e6);
  const double step = std::log(10.0);
  for (int grow = 0; grow < 60; ++grow) {
    const bool left_ok = phi(la + step) > phi(la) || la < std::log(1e-30);
    const bool right_ok = phi(lb - step) > phi(lb);
    if (left_ok && right_ok) break;
    if (!left_ok) la -= step;
    if (!right_ok) {
      lb += step;
      if (lb > std::log(1e30)) throw Error(ErrorCode::Infinite, "conjugate bracket diverges: v_Q(y) is infinite");
    }
  }
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = lb - ratio * (lb - la), d = la + ratio * (lb - la);
  ExtendedReal fc = phi(c), fd = phi(d);
  ExtendedReal best = std::max(fc, fd);
  while (lb - la > 1e-10) {
    if (fc >= fd) {
      lb = d;
      d = c;
      fd = fc;
      c = lb - ratio * (lb - la);
      fc = phi(c);
      best = std::max(best, fc);
    } else {
      la = c;
      c = d;
      fc = fd;
      d = la + ratio * (lb - la);
      fd = phi(d);
      best = std::max(best, fd);
    }
  }
  return best;
}

AuxiliarySolution auxiliary_dual_direct(const FiniteMarket& market, const Measure& q, const UtilitySpec& u, double y) {
  if (!(y > 0.0)) throw Error(ErrorCode::NonpositiveDual, "dual level must be positive");
  check_inputs(market, q);
  if (u.family() == UtilitySpec::Family::Table) {
    throw Error(ErrorCode::Unsupported, "direct dual route needs a smooth conjugate");
  }
  const int n = market.n_states();
  const Eigen::VectorXd& p = market.reference();
  const Eigen::VectorXd& qv = q.probabilities();
  const Eigen::MatrixXd& B = market.reduced_increments();
  const auto& vertices = market.unit_vertices();
  const int nv = static_cast<int>(vertices.size());

  ipm::Problem P;
  P.dim = n;
  P.A = Eigen::MatrixXd::Zero(n + nv, n);
  P.b = Eigen::VectorXd::Zero(n + nv);
  P.A.topRows(n).setIdentity();
  for (int k = 0; k < nv; ++k) {
    const Eigen::VectorXd gross =
        Eigen::VectorXd::Ones(n) + (vertices[static_cast<std::size_t>(k)].size() ? Eigen::VectorXd(B * vertices[static_cast<std::size_t>(k)]) : Eigen::VectorXd::Zero(n));
    P.A.row(n + k) = -(p.cwiseProduct(gross)).transpose();
    P.b(n + k) = y;
  }
  P.objective = [&](const Eigen::VectorXd& h, Eigen::VectorXd* g, Eigen::MatrixXd* H) {
    if (g) g->setZero(n);
    if (H) H->setZero(n, n);
    double f = 0.0;
    for (int i = 0; i < n; ++i) {
      if (qv(i) == 0.0) continue;
      if (!(h(i) > 0.0)) return -kInf;
      const double z = qv(i) / p(i);
      const double eta = h(i) / z;
      f -= qv(i) * u.v(eta);
      if (g) (*g)(i) = -p(i) * u.dv(eta);
      if (H) (*H)(i, i) = -p(i) * u.d2v(eta) / z;
    }
    return f;
  };
  const auto& witness = *market.arbitrage_status().witness;
  const Eigen::VectorXd start = 0.5 * y * witness.density();
  const auto res = ipm::maximize(P, start);

  AuxiliarySolution out;
  out.multiplier = y;
  out.deflator = res.v.cwiseMax(0.0);
  out.value = -res.objective;
  out.iterations = res.iterations;
  out.kkt_residual = std::max(res.stationarity, res.duality_bound);
  // the budget paired with y: E^{Q*}[I(h / Z)] under the martingale witness
  // when Q charges every state, the barrier multipliers otherwise
  if (q.equivalent()) {
    double x = 0.0;
    for (int i = 0; i < n; ++i) x += witness[i] * u.inv_du(out.deflator(i) * p(i) / qv(i));
    out.budget = x;
  } else {
    out.budget = res.linear_duals.tail(nv).sum();
  }
  return out;
}

ConjugacyReport conjugacy_report(const FiniteMarket& market, const Measure& q, const UtilitySpec& u,
                                 const std::vector<double>& xs, const std::vector<double>& ys) {
  ConjugacyReport rep;
  for (double x : xs) rep.primal_values.push_back(solve_auxiliary_primal(market, q, u, x).value.value());
  auto dual = [&](double y) -> double {
    try {
      return auxiliary_conjugate(market, q, u, y).value.value();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Infinite) throw;
      return kInf;
    }
  };
  for (double y : ys) rep.dual_values.push_back(dual(y));
  rep.min_margin = kInf;
  for (std::size_t a = 0; a < xs.size(); ++a) {
    double best = kInf;
    std::size_t k = 0;
    for (std::size_t b = 0; b < ys.size(); ++b) {
      const double val = rep.dual_values[b] + xs[a] * ys[b];
      rep.min_margin = std::min(rep.min_margin, val - rep.primal_values[a]);
      if (val < best) {
        best = val;
        k = b;
      }
    }
    if (!std::isfinite(best)) {
      rep.infinite = true;
      rep.max_gap = kInf;
      continue;
    }
    // refine between the neighbours of the best grid point
    double la = std::log(ys[k > 0 ? k - 1 : k]);
    double lb = std::log(ys[k + 1 < ys.size() ? k + 1 : k]);
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    auto f = [&](double ly) { return dual(std::exp(ly)) + xs[a] * std::exp(ly); };
    double c = lb - ratio * (lb - la), d = la + ratio * (lb - la);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 80 && lb - la > 1e-12; ++it) {
      if (fc <= fd) {
        lb = d;
        d = c;
        fd = fc;
        c = lb - ratio * (lb - la);
        fc = f(c);
      } else {
        la = c;
        c = d;
        fc = fd;
        d = la + ratio * (lb - la);
        fd = f(d);
      }
    }
    best = std::min({best, fc, fd});
    rep.max_gap = std::max(rep.max_gap, std::abs(rep.primal_values[a] - best));
  }
  return rep;
}

Eigen::VectorXd recover_dual_optimizer(const FiniteMarket& market, const Measure& q, const UtilitySpec& u,
                                       const AuxiliarySolution& primal, double y) {
  const int n = market.n_states();
  if (primal.payoff.wealth.size() != n) throw Error(ErrorCode::DimensionMismatch, "primal payoff size differs from state count");
  const Eigen::VectorXd z = q.density();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (z(i) > 0.0) h(i) = z(i) * u.du(primal.payoff.wealth(i));
  }
  const double budget = deflator_budget(market, h);
  if (!(budget <= y + 1e-9 * std::max(1.0, y))) {
    throw Error(ErrorCode::MembershipFailed,
                "recovered deflator pays " + std::to_string(budget) + " against level " + std::to_string(y));
  }
  return h;
}

namespace detail {

double expected_utility(const UtilitySpec& u, const Eigen::VectorXd& q, const Eigen::VectorXd& w, Eigen::VectorXd* du,
                        Eigen::VectorXd* d2u) {
  const auto n = q.size();
  if (du) du->setZero(n);
  if (d2u) d2u->setZero(n);
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (q(i) == 0.0) continue;
    if (!(w(i) > 0.0)) {
      const double u0 = u.u(0.0);
      if (!std::isfinite(u0) || du) return -kInf;
      s += q(i) * u0;
      continue;
    }
    s += q(i) * u.u(w(i));
    if (du) (*du)(i) = q(i) * u.du(w(i));
    if (d2u) (*d2u)(i) = q(i) * u.d2u(w(i));
  }
  return s;
}

}  // namespace detail

}  // namespace quasirobust
