#include "quasirobust/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "quasirobust/errors.hpp"

namespace quasirobust {

bool oracle_no_arbitrage(const FiniteMarket& market);

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using Vec = std::vector<double>;

// ---------------------------------------------------------------- utility

struct PlainUtility {
  UtilitySpec::Family family;
  double p = 0.0;
  Vec xs, us;

  explicit PlainUtility(const UtilitySpec& spec)
      : family(spec.family()), p(spec.exponent()), xs(spec.knots_x()), us(spec.knots_u()) {}

  double operator()(double w) const {
    w = std::max(w, 0.0);
    switch (family) {
      case UtilitySpec::Family::Log:
        return w > 0.0 ? std::log(w) : -kInf;
      case UtilitySpec::Family::Power:
        if (w > 0.0) return std::pow(w, p) / p;
        return p > 0.0 ? 0.0 : -kInf;
      case UtilitySpec::Family::Table: {
        if (w < xs.front() - 1e-12 || w > xs.back() + 1e-12) {
          throw Error(ErrorCode::GridOutOfRange, "wealth " + std::to_string(w) + " outside the utility table");
        }
        std::size_t k = 1;
        while (k + 1 < xs.size() && xs[k] < w) ++k;
        const double a = (w - xs[k - 1]) / (xs[k] - xs[k - 1]);
        return us[k - 1] + std::clamp(a, 0.0, 1.0) * (us[k] - us[k - 1]);
      }
    }
    return -kInf;
  }
};

double expect(const Vec& q, const Vec& utils) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    if (utils[i] == -kInf) return -kInf;
    s += q[i] * utils[i];
  }
  return s;
}

// ---------------------------------------------------------------- index

struct PlainIndex {
  AmbiguitySpec::Variant variant;
  double theta = 0.0;
  Vec p;
  Vec gamma;
  std::vector<Vec> rows;  // custom, monotone in t
  Vec tgrid;
  std::vector<Vec> vertices;  // K x n
  Phi phi{};
  std::vector<Vec> mixture;
  Vec mixture_weights;

  PlainIndex(const AmbiguitySpec& G, const MeasureFamily& family) : variant(G.variant()) {
    const Eigen::VectorXd& ref = *G.reference_ptr();
    p.assign(ref.data(), ref.data() + ref.size());
    const MeasureFamily* fam = &family;
    if (G.has_hull() && !(G.hull().kind() == MeasureFamily::Kind::FullSimplex && family.kind() != MeasureFamily::Kind::FullSimplex)) {
      fam = &G.hull();
    }
    const Eigen::MatrixXd& V = fam->vertex_matrix();
    for (Eigen::Index k = 0; k < V.rows(); ++k) {
      Vec row(static_cast<std::size_t>(V.cols()));
      for (Eigen::Index i = 0; i < V.cols(); ++i) row[static_cast<std::size_t>(i)] = V(k, i);
      vertices.push_back(std::move(row));
    }
    switch (variant) {
      case AmbiguitySpec::Variant::Entropic:
        theta = G.theta();
        break;
      case AmbiguitySpec::Variant::PenaltyTable:
        gamma = G.gamma();
        break;
      case AmbiguitySpec::Variant::Custom: {
        tgrid = G.t_grid();
        const Eigen::MatrixXd& raw = G.declared_grid_values();
        for (Eigen::Index k = 0; k < raw.rows(); ++k) {
          Vec row(static_cast<std::size_t>(raw.cols()));
          double run = -kInf;
          for (Eigen::Index j = 0; j < raw.cols(); ++j) {
            run = std::max(run, raw(k, j));
            row[static_cast<std::size_t>(j)] = run;
          }
          rows.push_back(std::move(row));
        }
        break;
      }
      case AmbiguitySpec::Variant::Smooth: {
        phi = G.phi();
        for (const auto& m : G.mixture_measures()) {
          const Eigen::VectorXd& q = m.probabilities();
          mixture.emplace_back(q.data(), q.data() + q.size());
        }
        const Eigen::VectorXd& mw = G.mixture_weights();
        mixture_weights.assign(mw.data(), mw.data() + mw.size());
        break;
      }
      case AmbiguitySpec::Variant::MultiplePriors:
        break;
    }
  }

  int K() const { return static_cast<int>(vertices.size()); }

  Vec measure(const Vec& w) const {
    Vec q(p.size(), 0.0);
    for (std::size_t k = 0; k < vertices.size(); ++k) {
      if (w[k] == 0.0) continue;
      for (std::size_t i = 0; i < q.size(); ++i) q[i] += w[k] * vertices[k][i];
    }
    return q;
  }

  double row_value(std::size_t k, double t) const {
    if (t < tgrid.front() - 1e-12 || t > tgrid.back() + 1e-12) {
      throw Error(ErrorCode::GridOutOfRange, "t = " + std::to_string(t) + " outside the tabulated index");
    }
    std::size_t j = 1;
    while (j + 1 < tgrid.size() && tgrid[j] < t) ++j;
    const double a = std::clamp((t - tgrid[j - 1]) / (tgrid[j] - tgrid[j - 1]), 0.0, 1.0);
    return rows[k][j - 1] + a * (rows[k][j] - rows[k][j - 1]);
  }

  // G(q(w), t) with the weight-space representation of the penalty
  double value(const Vec& w, const Vec& q, double t) const {
    if (t == -kInf) return -kInf;
    switch (variant) {
      case AmbiguitySpec::Variant::MultiplePriors:
        return t;
      case AmbiguitySpec::Variant::Entropic: {
        double kl = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
          if (q[i] > 0.0) kl += q[i] * std::log(q[i] / p[i]);
        }
        return t + kl / theta;
      }
      case AmbiguitySpec::Variant::PenaltyTable: {
        double c = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) c += w[k] * gamma[k];
        return t + c;
      }
      case AmbiguitySpec::Variant::Custom: {
        double s = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
          if (w[k] != 0.0) s += w[k] * row_value(k, t);
        }
        return s;
      }
      case AmbiguitySpec::Variant::Smooth:
        break;
    }
    throw Error(ErrorCode::Unsupported, "no index for the smooth criterion");
  }

  double phi_apply(double t) const {
    if (phi.kind == Phi::Kind::Exponential) {
      return phi.parameter == 0.0 ? t : (1.0 - std::exp(-phi.parameter * t)) / phi.parameter;
    }
    return std::pow(t, phi.parameter) / phi.parameter;
  }

  double phi_inverse(double s) const {
    if (phi.kind == Phi::Kind::Exponential) {
      return phi.parameter == 0.0 ? s : -std::log(1.0 - phi.parameter * s) / phi.parameter;
    }
    return std::pow(phi.parameter * s, 1.0 / phi.parameter);
  }

  double smooth(const Vec& utils) const {
    double s = 0.0;
    for (std::size_t k = 0; k < mixture.size(); ++k) {
      const double e = expect(mixture[k], utils);
      if (e == -kInf) return -kInf;
      if (phi.kind == Phi::Kind::Power && !(e > 0.0)) return -kInf;
      s += mixture_weights[k] * phi_apply(e);
    }
    return phi_inverse(s);
  }
};

// ---------------------------------------------------------------- weight grid

void compositions(int parts, int total, Vec& cur, const std::function<void(const Vec&)>& fn, int res) {
  if (parts == 1) {
    cur.push_back(static_cast<double>(total) / res);
    fn(cur);
    cur.pop_back();
    return;
  }
  for (int a = 0; a <= total; ++a) {
    cur.push_back(static_cast<double>(a) / res);
    compositions(parts - 1, total - a, cur, fn, res);
    cur.pop_back();
  }
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

int coarse_resolution(int K, int configured) {
  switch (K) {
    case 1:
    case 2: return configured - 1;
    case 3: return std::min(configured - 1, 60);
    case 4: return std::min(configured - 1, 24);
    case 5: return std::min(configured - 1, 12);
    default: return std::min(configured - 1, 8);
  }
}

struct Search {
  double value;
  Vec arg;
  double bound;
};

// offsets in the first K-1 weights; the last weight absorbs the remainder
void local_lattice(const Vec& center, double h, int reach, const std::function<void(const Vec&)>& fn) {
  const int K = static_cast<int>(center.size());
  if (K == 1) {
    fn(center);
    return;
  }
  std::vector<int> off(static_cast<std::size_t>(K - 1), -reach);
  Vec w(static_cast<std::size_t>(K));
  while (true) {
    double rest = 1.0;
    bool ok = true;
    for (int k = 0; k + 1 < K; ++k) {
      w[static_cast<std::size_t>(k)] = center[static_cast<std::size_t>(k)] + off[static_cast<std::size_t>(k)] * h;
      if (w[static_cast<std::size_t>(k)] < -1e-14) ok = false;
      w[static_cast<std::size_t>(k)] = std::max(w[static_cast<std::size_t>(k)], 0.0);
      rest -= w[static_cast<std::size_t>(k)];
    }
    if (rest < -1e-14) ok = false;
    w[static_cast<std::size_t>(K - 1)] = std::max(rest, 0.0);
    if (ok) fn(w);
    int k = 0;
    while (k < K - 1 && ++off[static_cast<std::size_t>(k)] > reach) off[static_cast<std::size_t>(k++)] = -reach;
    if (k == K - 1) break;
  }
}

Search minimize_weights(int K, int configured, const std::function<double(const Vec&)>& f) {
  const int res = coarse_resolution(K, configured);
  Search s{kInf, Vec(static_cast<std::size_t>(K), 1.0 / K), 0.0};
  bool any = false;
  auto visit = [&](const Vec& w) {
    const double v = f(w);
    if (!any || v < s.value) {
      s.value = v;
      s.arg = w;
      any = true;
    }
  };
  Vec cur;
  compositions(K, res, cur, visit, res);
  double h = 1.0 / res;
  for (int pass = 0; pass < 2; ++pass) {
    h /= 5.0;
    const Vec c = s.arg;
    local_lattice(c, h, 5, visit);
  }
  if (std::isfinite(s.value)) {
    const Vec c = s.arg;
    local_lattice(c, h, 1, [&](const Vec& w) {
      const double v = f(w);
      if (std::isfinite(v)) s.bound = std::max(s.bound, std::abs(v - s.value));
    });
  }
  return s;
}

// ---------------------------------------------------------------- strategies

struct StrategySpace {
  int n = 0;
  int dim = 0;               // effective dimension, 0..2
  std::vector<int> columns;  // asset indices spanning the payoff space
  std::vector<Vec> C;        // n x dim
  Vec lo, hi;                // box per coordinate at unit budget
};

StrategySpace strategy_space(const FiniteMarket& market) {
  if (!oracle_no_arbitrage(market)) {
    throw Error(ErrorCode::ArbitrageDetected, "admissible strategies are unbounded; the market admits arbitrage");
  }
  const Eigen::MatrixXd& D = market.increments();
  StrategySpace sp;
  sp.n = static_cast<int>(D.rows());
  const int d = static_cast<int>(D.cols());
  auto col = [&](int j) {
    Vec c(static_cast<std::size_t>(sp.n));
    for (int i = 0; i < sp.n; ++i) c[static_cast<std::size_t>(i)] = D(i, j);
    return c;
  };
  auto norm2 = [](const Vec& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
  };
  std::vector<Vec> cols;
  for (int j = 0; j < d; ++j) cols.push_back(col(j));
  if (d == 2) {
    const double a = norm2(cols[0]), b = norm2(cols[1]);
    double ab = 0.0;
    for (int i = 0; i < sp.n; ++i) ab += cols[0][static_cast<std::size_t>(i)] * cols[1][static_cast<std::size_t>(i)];
    if (a * b - ab * ab > 1e-12 * a * b && a > 0.0 && b > 0.0) {
      sp.columns = {0, 1};
    } else if (std::max(a, b) > 0.0) {
      sp.columns = {a >= b ? 0 : 1};
    }
  } else if (d == 1 && norm2(cols[0]) > 0.0) {
    sp.columns = {0};
  }
  sp.dim = static_cast<int>(sp.columns.size());
  sp.C.assign(static_cast<std::size_t>(sp.n), Vec(static_cast<std::size_t>(sp.dim)));
  for (int i = 0; i < sp.n; ++i) {
    for (int k = 0; k < sp.dim; ++k) sp.C[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = cols[static_cast<std::size_t>(sp.columns[static_cast<std::size_t>(k)])][static_cast<std::size_t>(i)];
  }
  const double big = 1e300;
  if (sp.dim == 1) {
    double lo = -big, hi = big;
    for (int i = 0; i < sp.n; ++i) {
      const double c = sp.C[static_cast<std::size_t>(i)][0];
      if (c > 0.0) lo = std::max(lo, -1.0 / c);
      if (c < 0.0) hi = std::min(hi, 1.0 / -c);
    }
    sp.lo = {lo};
    sp.hi = {hi};
  } else if (sp.dim == 2) {
    Vec lo{big, big}, hi{-big, -big};
    for (int i = 0; i < sp.n; ++i) {
      for (int j = i + 1; j < sp.n; ++j) {
        const Vec& a = sp.C[static_cast<std::size_t>(i)];
        const Vec& b = sp.C[static_cast<std::size_t>(j)];
        const double det = a[0] * b[1] - a[1] * b[0];
        if (std::abs(det) < 1e-14) continue;
        const Vec t{(-b[1] + a[1]) / det, (-a[0] + b[0]) / det};
        bool feasible = true;
        for (int s = 0; s < sp.n; ++s) {
          const Vec& c = sp.C[static_cast<std::size_t>(s)];
          if (1.0 + c[0] * t[0] + c[1] * t[1] < -1e-9) feasible = false;
        }
        if (!feasible) continue;
        for (int k = 0; k < 2; ++k) {
          lo[static_cast<std::size_t>(k)] = std::min(lo[static_cast<std::size_t>(k)], t[static_cast<std::size_t>(k)]);
          hi[static_cast<std::size_t>(k)] = std::max(hi[static_cast<std::size_t>(k)], t[static_cast<std::size_t>(k)]);
        }
      }
    }
    sp.lo = lo;
    sp.hi = hi;
  }
  for (int k = 0; k < sp.dim; ++k) {
    if (!(sp.hi[static_cast<std::size_t>(k)] - sp.lo[static_cast<std::size_t>(k)] < 1e200) ||
        sp.lo[static_cast<std::size_t>(k)] > 0.0 || sp.hi[static_cast<std::size_t>(k)] < 0.0) {
      throw Error(ErrorCode::ArbitrageDetected, "admissible strategies are unbounded; the market admits arbitrage");
    }
  }
  return sp;
}

// payoff at budget x for scaled coordinates theta (holdings per unit budget)
bool payoff(const StrategySpace& sp, double x, const Vec& theta, Vec& g) {
  g.assign(static_cast<std::size_t>(sp.n), x);
  for (int i = 0; i < sp.n; ++i) {
    for (int k = 0; k < sp.dim; ++k) g[static_cast<std::size_t>(i)] += x * sp.C[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * theta[static_cast<std::size_t>(k)];
    if (g[static_cast<std::size_t>(i)] < -1e-12 * x) return false;
    g[static_cast<std::size_t>(i)] = std::max(g[static_cast<std::size_t>(i)], 0.0);
  }
  return true;
}

void box_lattice(const StrategySpace& sp, const Vec& center, const Vec& h, const std::vector<long>& kmin,
                 const std::vector<long>& kmax, const std::function<void(const Vec&)>& fn) {
  if (sp.dim == 0) {
    fn({});
    return;
  }
  std::vector<long> k = kmin;
  Vec t(static_cast<std::size_t>(sp.dim));
  while (true) {
    for (int j = 0; j < sp.dim; ++j) t[static_cast<std::size_t>(j)] = center[static_cast<std::size_t>(j)] + static_cast<double>(k[static_cast<std::size_t>(j)]) * h[static_cast<std::size_t>(j)];
    fn(t);
    int j = 0;
    while (j < sp.dim && ++k[static_cast<std::size_t>(j)] > kmax[static_cast<std::size_t>(j)]) {
      k[static_cast<std::size_t>(j)] = kmin[static_cast<std::size_t>(j)];
      ++j;
    }
    if (j == sp.dim) break;
  }
}

// maximises f(payoff) over the admissible lattice; lattice contains the cash position
Search maximize_strategies(const StrategySpace& sp, double x, int points, const std::function<double(const Vec&)>& f,
                           std::int64_t& evaluations) {
  Search s{-kInf, Vec(static_cast<std::size_t>(sp.dim), 0.0), 0.0};
  Vec g;
  bool any = false;
  auto visit = [&](const Vec& t) {
    if (!payoff(sp, x, t, g)) return;
    ++evaluations;
    const double v = f(g);
    if (!any || v > s.value) {
      s.value = v;
      s.arg = t;
      any = true;
    }
  };
  Vec h(static_cast<std::size_t>(sp.dim));
  std::vector<long> kmin(static_cast<std::size_t>(sp.dim)), kmax(static_cast<std::size_t>(sp.dim));
  for (int j = 0; j < sp.dim; ++j) {
    const double lo = sp.lo[static_cast<std::size_t>(j)], hi = sp.hi[static_cast<std::size_t>(j)];
    h[static_cast<std::size_t>(j)] = (hi - lo) / (points - 1);
    kmin[static_cast<std::size_t>(j)] = static_cast<long>(std::ceil(lo / h[static_cast<std::size_t>(j)] - 1e-9));
    kmax[static_cast<std::size_t>(j)] = static_cast<long>(std::floor(hi / h[static_cast<std::size_t>(j)] + 1e-9));
  }
  box_lattice(sp, Vec(static_cast<std::size_t>(sp.dim), 0.0), h, kmin, kmax, visit);
  if (sp.dim == 0) return s;
  const std::vector<long> lo10(static_cast<std::size_t>(sp.dim), -10), hi10(static_cast<std::size_t>(sp.dim), 10);
  for (int pass = 0; pass < 2; ++pass) {
    for (double& v : h) v /= 10.0;
    const Vec c = s.arg;
    box_lattice(sp, c, h, lo10, hi10, visit);
  }
  if (std::isfinite(s.value)) {
    const Vec c = s.arg;
    const std::vector<long> lo1(static_cast<std::size_t>(sp.dim), -1), hi1(static_cast<std::size_t>(sp.dim), 1);
    box_lattice(sp, c, h, lo1, hi1, [&](const Vec& t) {
      if (!payoff(sp, x, t, g)) return;
      const double v = f(g);
      if (std::isfinite(v)) s.bound = std::max(s.bound, std::abs(v - s.value));
    });
  }
  return s;
}

Vec holdings_of(const FiniteMarket& market, const StrategySpace& sp, double x, const Vec& theta) {
  Vec out(static_cast<std::size_t>(market.d_assets()), 0.0);
  for (int k = 0; k < sp.dim; ++k) out[static_cast<std::size_t>(sp.columns[static_cast<std::size_t>(k)])] = x * theta[static_cast<std::size_t>(k)];
  return out;
}

void check_scale(const FiniteMarket& market, int K, const OracleConfig& cfg) {
  if (cfg.strategy_grid_per_dim < 3 || cfg.simplex_grid_resolution < 3 || cfg.y_grid < 3) {
    throw Error(ErrorCode::InvalidArgument, "oracle grids need at least three points");
  }
  if (market.n_states() > 4 || market.d_assets() > 2) {
    throw Error(ErrorCode::ScaleRefused, "oracle runs only on n <= 4 states and d <= 2 assets");
  }
  const double bytes = cfg.memory_estimate(market.n_states(), market.d_assets(), K);
  if (bytes > static_cast<double>(cfg.memory_limit_bytes)) {
    throw Error(ErrorCode::ScaleRefused, "oracle grids would need " + std::to_string(bytes / (1 << 20)) + " MiB");
  }
}

int outer_points(const StrategySpace& sp, int configured) { return sp.dim == 2 ? std::min(configured, 81) : configured; }

// ---------------------------------------------------------------- martingale vertices

// solves the (rows x m) system A z = b; true when the solution is unique and consistent
bool solve_unique(std::vector<Vec> A, Vec b, Vec& z) {
  const int rows = static_cast<int>(A.size());
  const int m = A.empty() ? 0 : static_cast<int>(A[0].size());
  int r = 0;
  std::vector<int> pivot_col;
  for (int c = 0; c < m && r < rows; ++c) {
    int best = r;
    for (int i = r + 1; i < rows; ++i) {
      if (std::abs(A[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]) > std::abs(A[static_cast<std::size_t>(best)][static_cast<std::size_t>(c)])) best = i;
    }
    if (std::abs(A[static_cast<std::size_t>(best)][static_cast<std::size_t>(c)]) < 1e-12) return false;
    std::swap(A[static_cast<std::size_t>(r)], A[static_cast<std::size_t>(best)]);
    std::swap(b[static_cast<std::size_t>(r)], b[static_cast<std::size_t>(best)]);
    for (int i = 0; i < rows; ++i) {
      if (i == r) continue;
      const double f = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] / A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (f == 0.0) continue;
      for (int j = c; j < m; ++j) A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -= f * A[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
      b[static_cast<std::size_t>(i)] -= f * b[static_cast<std::size_t>(r)];
    }
    pivot_col.push_back(c);
    ++r;
  }
  if (r < m) return false;
  for (int i = r; i < rows; ++i) {
    if (std::abs(b[static_cast<std::size_t>(i)]) > 1e-10) return false;
  }
  z.assign(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < r; ++i) z[static_cast<std::size_t>(pivot_col[static_cast<std::size_t>(i)])] = b[static_cast<std::size_t>(i)] / A[static_cast<std::size_t>(i)][static_cast<std::size_t>(pivot_col[static_cast<std::size_t>(i)])];
  return true;
}

void subsets(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

std::vector<Vec> martingale_vertices(const FiniteMarket& market) {
  const Eigen::MatrixXd& D = market.increments();
  const int n = static_cast<int>(D.rows());
  const int d = static_cast<int>(D.cols());
  std::vector<Vec> out;
  for (int m = 1; m <= std::min(n, d + 1); ++m) {
    subsets(n, m, [&](const std::vector<int>& S) {
      std::vector<Vec> A(static_cast<std::size_t>(d + 1), Vec(static_cast<std::size_t>(m)));
      Vec b(static_cast<std::size_t>(d + 1), 0.0);
      b[0] = 1.0;
      for (int c = 0; c < m; ++c) {
        A[0][static_cast<std::size_t>(c)] = 1.0;
        for (int j = 0; j < d; ++j) A[static_cast<std::size_t>(j + 1)][static_cast<std::size_t>(c)] = D(S[static_cast<std::size_t>(c)], j);
      }
      Vec z;
      if (!solve_unique(A, b, z)) return;
      for (double v : z) {
        if (v < -1e-12) return;
      }
      Vec q(static_cast<std::size_t>(n), 0.0);
      for (int c = 0; c < m; ++c) q[static_cast<std::size_t>(S[static_cast<std::size_t>(c)])] = std::max(z[static_cast<std::size_t>(c)], 0.0);
      for (const auto& e : out) {
        double diff = 0.0;
        for (int i = 0; i < n; ++i) diff = std::max(diff, std::abs(e[static_cast<std::size_t>(i)] - q[static_cast<std::size_t>(i)]));
        if (diff < 1e-12) return;
      }
      out.push_back(std::move(q));
    });
  }
  return out;
}

// min x' with x' + C theta >= g, by enumerating vertices of the constraint arrangement
double superhedging_price(const StrategySpace& sp, const Vec& g) {
  const int m = sp.dim + 1;
  double best = kInf;
  subsets(sp.n, m, [&](const std::vector<int>& S) {
    std::vector<Vec> A(static_cast<std::size_t>(m), Vec(static_cast<std::size_t>(m)));
    Vec b(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) {
      const int i = S[static_cast<std::size_t>(r)];
      A[static_cast<std::size_t>(r)][0] = 1.0;
      for (int k = 0; k < sp.dim; ++k) A[static_cast<std::size_t>(r)][static_cast<std::size_t>(k + 1)] = sp.C[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      b[static_cast<std::size_t>(r)] = g[static_cast<std::size_t>(i)];
    }
    Vec z;
    if (!solve_unique(A, b, z)) return;
    for (int i = 0; i < sp.n; ++i) {
      double w = z[0];
      for (int k = 0; k < sp.dim; ++k) w += sp.C[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * z[static_cast<std::size_t>(k + 1)];
      if (w < g[static_cast<std::size_t>(i)] - 1e-10 * (1.0 + std::abs(g[static_cast<std::size_t>(i)]))) return;
    }
    best = std::min(best, z[0]);
  });
  return best;
}

}  // namespace

double OracleConfig::memory_estimate(int states, int assets, int vertices) const {
  const double strat = std::pow(static_cast<double>(strategy_grid_per_dim), std::min(assets, 2)) * (states + assets);
  const int K = std::max(vertices, 1);
  const double simplex = binomial(simplex_grid_resolution - 1 + K - 1, K - 1) * (K + states);
  return 8.0 * (strat + simplex + y_grid);
}

OracleAnswer oracle_u(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                      const UtilitySpec& u, double x, const OracleConfig& cfg) {
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  const PlainIndex idx(G, family);
  check_scale(market, idx.K(), cfg);
  const PlainUtility U(u);
  const StrategySpace sp = strategy_space(market);
  OracleAnswer out;
  Vec utils(static_cast<std::size_t>(sp.n));
  Vec inner_arg;
  double inner_bound = 0.0;
  auto criterion = [&](const Vec& g) {
    for (int i = 0; i < sp.n; ++i) utils[static_cast<std::size_t>(i)] = U(g[static_cast<std::size_t>(i)]);
    if (idx.variant == AmbiguitySpec::Variant::Smooth) return idx.smooth(utils);
    const Search s = minimize_weights(idx.K(), cfg.simplex_grid_resolution, [&](const Vec& w) {
      const Vec q = idx.measure(w);
      return idx.value(w, q, expect(q, utils));
    });
    inner_arg = s.arg;
    inner_bound = s.bound;
    return s.value;
  };
  const Search s = maximize_strategies(sp, x, outer_points(sp, cfg.strategy_grid_per_dim), criterion, out.evaluations);
  Vec g;
  payoff(sp, x, s.arg, g);
  criterion(g);
  out.value = s.value;
  out.grid_bound = s.bound + inner_bound;
  out.holdings = holdings_of(market, sp, x, s.arg);
  if (idx.variant != AmbiguitySpec::Variant::Smooth) out.measure = idx.measure(inner_arg);
  return out;
}

OracleAnswer oracle_classical(const FiniteMarket& market, const std::vector<double>& q, const UtilitySpec& u, double x,
                              const OracleConfig& cfg) {
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  check_scale(market, 1, cfg);
  const PlainUtility U(u);
  const StrategySpace sp = strategy_space(market);
  OracleAnswer out;
  Vec utils(static_cast<std::size_t>(sp.n));
  const Search s = maximize_strategies(sp, x, outer_points(sp, cfg.strategy_grid_per_dim), [&](const Vec& g) {
    for (int i = 0; i < sp.n; ++i) utils[static_cast<std::size_t>(i)] = U(g[static_cast<std::size_t>(i)]);
    return expect(q, utils);
  }, out.evaluations);
  out.value = s.value;
  out.grid_bound = s.bound;
  out.holdings = holdings_of(market, sp, x, s.arg);
  out.measure = q;
  return out;
}

OracleAnswer oracle_v(const FiniteMarket& market, const AmbiguitySpec& G, const MeasureFamily& family,
                      const UtilitySpec& u, double x, double y, const OracleConfig& cfg) {
  if (!(x > 0.0) || !(y > 0.0)) throw Error(ErrorCode::InvalidArgument, "x and y must be positive");
  if (G.variant() == AmbiguitySpec::Variant::Smooth) throw Error(ErrorCode::Unsupported, "the smooth criterion has no dual");
  if (u.family() == UtilitySpec::Family::Table) {
    throw Error(ErrorCode::Unsupported, "the dual oracle relies on homogeneity and needs a log or power utility");
  }
  const PlainIndex idx(G, family);
  check_scale(market, idx.K(), cfg);
  const PlainUtility U(u);
  const StrategySpace sp = strategy_space(market);
  const int classical_points = sp.dim == 2 ? std::min(cfg.strategy_grid_per_dim, 41) : std::min(cfg.strategy_grid_per_dim, 201);
  const bool log_family = u.family() == UtilitySpec::Family::Log;
  const double pexp = u.exponent();
  OracleAnswer out;
  double conj_bound = 0.0;
  Vec utils(static_cast<std::size_t>(sp.n));

  // v_q(y) = sup_x' u_q(x') - x'y with u_q(x') from u_q(1) by homogeneity
  auto v_q = [&](const Vec& q, double* bound) {
    const Search c = maximize_strategies(sp, 1.0, classical_points, [&](const Vec& g) {
      for (int i = 0; i < sp.n; ++i) utils[static_cast<std::size_t>(i)] = U(g[static_cast<std::size_t>(i)]);
      return expect(q, utils);
    }, out.evaluations);
    const double c1 = c.value;
    auto h = [&](double lx) {
      const double xp = std::exp(lx);
      return (log_family ? lx + c1 : std::pow(xp, pexp) * c1) - xp * y;
    };
    const double lc = -std::log(y);
    double lo = lc - 6.0 * std::log(10.0), hi = lc + 6.0 * std::log(10.0);
    double best_l = lc, best = -kInf;
    double step = (hi - lo) / (cfg.y_grid - 1);
    for (int k = 0; k < cfg.y_grid; ++k) {
      const double l = lo + k * step;
      const double v = h(l);
      if (v > best) {
        best = v;
        best_l = l;
      }
    }
    for (int pass = 0; pass < 2; ++pass) {
      const double c0 = best_l;
      step /= 10.0;
      for (int k = -10; k <= 10; ++k) {
        const double v = h(c0 + k * step);
        if (v > best) {
          best = v;
          best_l = c0 + k * step;
        }
      }
    }
    if (bound) *bound = c.bound * (log_family ? 1.0 : std::pow(std::exp(best_l), pexp)) + std::abs(h(best_l + step) - best);
    return best;
  };

  const Search s = minimize_weights(idx.K(), cfg.simplex_grid_resolution, [&](const Vec& w) {
    const Vec q = idx.measure(w);
    return idx.value(w, q, v_q(q, nullptr) + x * y);
  });
  const Vec q = idx.measure(s.arg);
  v_q(q, &conj_bound);
  out.value = s.value;
  out.grid_bound = s.bound + conj_bound;
  out.measure = q;
  return out;
}

bool oracle_no_arbitrage(const FiniteMarket& market) {
  if (market.d_assets() > 2) throw Error(ErrorCode::ScaleRefused, "exact no-arbitrage oracle needs d <= 2");
  const auto V = martingale_vertices(market);
  if (V.empty()) return false;
  for (int i = 0; i < market.n_states(); ++i) {
    bool charged = false;
    for (const auto& q : V) charged = charged || q[static_cast<std::size_t>(i)] > 1e-12;
    if (!charged) return false;
  }
  return true;
}

BipolarReport oracle_bipolar(const FiniteMarket& market, const OracleConfig& cfg, int samples, std::uint64_t seed) {
  check_scale(market, 1, cfg);
  BipolarReport rep;
  const auto V = martingale_vertices(market);
  rep.martingale_vertices = static_cast<int>(V.size());
  rep.arbitrage_free = oracle_no_arbitrage(market);
  if (!rep.arbitrage_free) return rep;
  const StrategySpace sp = strategy_space(market);
  const int n = sp.n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::exponential_distribution<double> ex(1.0);

  auto pairing = [&](const Vec& g, const Vec& h) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += g[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)];
    return s;
  };
  // deflators at y = 1 written as h_i P_i so the pairing is a plain sum: vertices,
  // their mixtures and dominated versions
  std::vector<Vec> deflators = V;
  for (int k = 0; k < samples; ++k) {
    Vec h(static_cast<std::size_t>(n), 0.0);
    double tot = 0.0;
    std::vector<double> lam(V.size());
    for (auto& l : lam) tot += (l = ex(rng));
    for (std::size_t v = 0; v < V.size(); ++v) {
      for (int i = 0; i < n; ++i) h[static_cast<std::size_t>(i)] += lam[v] / tot * V[v][static_cast<std::size_t>(i)];
    }
    if (k % 2 == 1) {
      for (double& e : h) e *= uni(rng);
    }
    deflators.push_back(std::move(h));
  }

  // forward: attainable payoffs at x = 1 and anything below them
  Vec g;
  int drawn = 0;
  for (int attempt = 0; drawn < samples && attempt < 1000 * samples; ++attempt) {
    Vec t(static_cast<std::size_t>(sp.dim));
    for (int k = 0; k < sp.dim; ++k) t[static_cast<std::size_t>(k)] = sp.lo[static_cast<std::size_t>(k)] + uni(rng) * (sp.hi[static_cast<std::size_t>(k)] - sp.lo[static_cast<std::size_t>(k)]);
    if (!payoff(sp, 1.0, t, g)) continue;
    if (drawn % 2 == 1) {
      for (double& e : g) e *= uni(rng);
    }
    ++drawn;
    for (const auto& h : deflators) {
      ++rep.forward_checks;
      const double excess = pairing(g, h) - 1.0;
      rep.max_forward_excess = std::max(rep.max_forward_excess, excess);
      if (excess > 1e-9) ++rep.forward_violations;
    }
  }

  // reverse: g meeting every vertex budget is superhedged from x = 1
  for (int k = 0; k < samples; ++k) {
    Vec r(static_cast<std::size_t>(n));
    for (double& e : r) e = ex(rng);
    double worst = 0.0;
    for (const auto& q : V) worst = std::max(worst, pairing(r, q));
    const double scale = (k % 4 == 0 ? 1.0 : 0.5 + 0.5 * uni(rng)) / worst;
    for (double& e : r) e *= scale;
    bool passes = true;
    for (const auto& h : deflators) passes = passes && pairing(r, h) <= 1.0 + 1e-12;
    if (!passes) continue;
    ++rep.reverse_checks;
    const double price = superhedging_price(sp, r);
    const double excess = price - 1.0;
    rep.max_reverse_excess = std::max(rep.max_reverse_excess, excess);
    if (excess > 1e-6) ++rep.reverse_violations;
  }

  // twice the budget in cash fails at every martingale deflator
  const Vec cash(static_cast<std::size_t>(n), 2.0);
  rep.super_budget_rejected = !V.empty();
  for (const auto& q : V) rep.super_budget_rejected = rep.super_budget_rejected && pairing(cash, q) > 1.0 + 1e-9;
  return rep;
}

}  // namespace quasirobust
