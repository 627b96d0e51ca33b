#include "quasirobust/interior_point.hpp"

#include <cmath>
#include <limits>

#include "quasirobust/errors.hpp"

namespace quasirobust::ipm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Barrier {
  const Problem& P;
  double mu = 1.0;

  // phi = f + mu (sum log slack + sum log c_j)
  double operator()(const Eigen::VectorXd& v, Eigen::VectorXd* g, Eigen::MatrixXd* H) const {
    const int m = static_cast<int>(P.A.rows());
    Eigen::VectorXd s(m);
    if (m > 0) s = P.A * v + P.b;
    for (int i = 0; i < m; ++i) {
      if (!(s(i) > 0.0)) return kNegInf;
    }
    std::vector<double> cv(P.constraints.size());
    std::vector<Eigen::VectorXd> cg(P.constraints.size());
    std::vector<Eigen::MatrixXd> cH(P.constraints.size());
    for (std::size_t j = 0; j < P.constraints.size(); ++j) {
      cv[j] = P.constraints[j](v, g ? &cg[j] : nullptr, H ? &cH[j] : nullptr);
      if (!(cv[j] > 0.0)) return kNegInf;
    }
    double f = P.objective(v, g, H);
    if (!std::isfinite(f)) return kNegInf;
    for (int i = 0; i < m; ++i) f += mu * std::log(s(i));
    for (double c : cv) f += mu * std::log(c);
    if (g) {
      if (m > 0) *g += mu * (P.A.transpose() * s.cwiseInverse());
      for (std::size_t j = 0; j < cv.size(); ++j) *g += (mu / cv[j]) * cg[j];
    }
    if (H) {
      if (m > 0) *H -= mu * (P.A.transpose() * s.array().square().inverse().matrix().asDiagonal() * P.A);
      for (std::size_t j = 0; j < cv.size(); ++j) {
        *H += (mu / cv[j]) * cH[j] - (mu / (cv[j] * cv[j])) * (cg[j] * cg[j].transpose());
      }
    }
    return f;
  }
};

}  // namespace

Result maximize(const Problem& P, Eigen::VectorXd v, const Options& opt) {
  const int n = P.dim;
  const int m = static_cast<int>(P.A.rows()) + static_cast<int>(P.constraints.size());
  Barrier phi{P, opt.mu_initial};
  Result out;
  if (!std::isfinite(phi(v, nullptr, nullptr))) throw Error(ErrorCode::InvalidArgument, "interior point start is not strictly feasible");

  Eigen::VectorXd g(n);
  Eigen::MatrixXd H(n, n);
  while (true) {
    int stalls = 0;
    for (int it = 0; it < opt.max_newton; ++it) {
      g.setZero();
      H.setZero();
      const double f = phi(v, &g, &H);
      ++out.iterations;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(-H);
      Eigen::VectorXd d;
      if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
        d = ldlt.solve(g);
      } else {
        const double shift = 1e-10 * (1.0 + H.cwiseAbs().maxCoeff());
        d = (-H + shift * Eigen::MatrixXd::Identity(n, n)).ldlt().solve(g);
      }
      const double decrement = g.dot(d);
      if (!(decrement > 1e-20 * (1.0 + std::abs(f)))) break;
      double t = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 80; ++bt) {
        const Eigen::VectorXd vn = v + t * d;
        const double fn = phi(vn, nullptr, nullptr);
        if (std::isfinite(fn) && fn >= f + 0.25 * t * decrement) {
          v = vn;
          moved = true;
          stalls = fn - f <= 1e-15 * (1.0 + std::abs(f)) ? stalls + 1 : 0;
          break;
        }
        t *= 0.5;
      }
      if (!moved || stalls >= 2) break;
    }
    if (m == 0 || m * phi.mu <= opt.tolerance * (1.0 + std::abs(P.objective(v, nullptr, nullptr)))) break;
    phi.mu *= opt.mu_shrink;
  }

  out.v = v;
  out.objective = P.objective(v, nullptr, nullptr);
  out.duality_bound = m * phi.mu;
  const int ml = static_cast<int>(P.A.rows());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  P.objective(v, &grad, nullptr);
  out.linear_duals.resize(ml);
  if (ml > 0) {
    const Eigen::VectorXd s = P.A * v + P.b;
    out.linear_duals = phi.mu * s.cwiseInverse();
    grad += P.A.transpose() * out.linear_duals;
  }
  out.nonlinear_duals.resize(static_cast<Eigen::Index>(P.constraints.size()));
  for (std::size_t j = 0; j < P.constraints.size(); ++j) {
    Eigen::VectorXd cg = Eigen::VectorXd::Zero(n);
    const double c = P.constraints[j](v, &cg, nullptr);
    out.nonlinear_duals(static_cast<Eigen::Index>(j)) = phi.mu / c;
    grad += (phi.mu / c) * cg;
  }
  out.stationarity = n > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  out.converged = std::isfinite(out.objective);
  return out;
}

}  // namespace quasirobust::ipm
