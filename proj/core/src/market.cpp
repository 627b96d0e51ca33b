#include "quasirobust/market.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "quasirobust/errors.hpp"
#include "quasirobust/linear_program.hpp"

namespace quasirobust {

struct FiniteMarket::Data {
  Eigen::VectorXd s0;
  Eigen::MatrixXd st;
  Reference p;
  Eigen::MatrixXd ds;
  Eigen::MatrixXd basis, reduced, null;
  int rank = 0;

  std::once_flag arbitrage_once;
  NoArbitrageResult arbitrage;
  std::once_flag vertex_once;
  std::vector<Eigen::VectorXd> vertices;
};

namespace {

void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

std::vector<Eigen::VectorXd> enumerate_vertices(const Eigen::MatrixXd& B) {
  const int n = static_cast<int>(B.rows());
  const int r = static_cast<int>(B.cols());
  std::vector<Eigen::VectorXd> out;
  if (r == 0) {
    out.emplace_back(Eigen::VectorXd(0));
    return out;
  }
  std::vector<int> idx(r);
  std::iota(idx.begin(), idx.end(), 0);
  const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
  while (true) {
    Eigen::MatrixXd M(r, r);
    for (int k = 0; k < r; ++k) M.row(k) = B.row(idx[k]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-12);
    if (lu.rank() == r) {
      Eigen::VectorXd z = lu.solve(Eigen::VectorXd::Constant(r, -1.0));
      Eigen::VectorXd w = Eigen::VectorXd::Ones(n) + B * z;
      if (w.minCoeff() >= -1e-10 * scale * (1.0 + z.cwiseAbs().maxCoeff())) {
        bool fresh = true;
        for (const auto& v : out) {
          if ((v - z).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + z.cwiseAbs().maxCoeff())) {
            fresh = false;
            break;
          }
        }
        if (fresh) out.push_back(std::move(z));
      }
    }
    int k = r - 1;
    while (k >= 0 && idx[k] == n - r + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

}  // namespace

FiniteMarket::FiniteMarket(Eigen::VectorXd initial_prices, Eigen::MatrixXd terminal_prices, Eigen::VectorXd reference)
    : data_(std::make_shared<Data>()) {
  const auto n = reference.size();
  const auto d = initial_prices.size();
  require(n >= 1, ErrorCode::DimensionMismatch, "market needs at least one state");
  if (terminal_prices.size() == 0) terminal_prices.resize(n, d);
  {
    std::ostringstream os;
    os << "terminal prices are " << terminal_prices.rows() << "x" << terminal_prices.cols() << ", expected " << n
       << "x" << d;
    require(terminal_prices.rows() == n && terminal_prices.cols() == d, ErrorCode::DimensionMismatch, os.str());
  }
  for (int j = 0; j < d; ++j) {
    require(std::isfinite(initial_prices(j)) && initial_prices(j) > 0.0, ErrorCode::InvalidArgument,
            "initial price of asset " + std::to_string(j) + " must be positive");
  }
  for (int i = 0; i < n; ++i) {
    require(std::isfinite(reference(i)) && reference(i) > 0.0, ErrorCode::InvalidArgument,
            "reference probability of state " + std::to_string(i) + " must be positive");
    for (int j = 0; j < d; ++j) {
      require(std::isfinite(terminal_prices(i, j)) && terminal_prices(i, j) >= 0.0, ErrorCode::InvalidArgument,
              "terminal price (" + std::to_string(i) + "," + std::to_string(j) + ") must be nonnegative");
    }
  }
  require(std::abs(reference.sum() - 1.0) <= 1e-12, ErrorCode::InvalidArgument, "reference probabilities must sum to 1");

  auto& D = *data_;
  D.s0 = std::move(initial_prices);
  D.st = std::move(terminal_prices);
  D.p = std::make_shared<const Eigen::VectorXd>(std::move(reference));
  D.ds = D.st - Eigen::VectorXd::Ones(n) * D.s0.transpose();

  if (d == 0) {
    D.basis.resize(0, 0);
    D.reduced.resize(n, 0);
    D.null.resize(0, 0);
    return;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D.ds, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = (sv.size() ? sv(0) : 0.0) * 1e-12 * static_cast<double>(std::max(n, d));
  int r = 0;
  for (int k = 0; k < sv.size(); ++k) {
    if (sv(k) > cut && sv(k) > 1e-300) ++r;
  }
  D.rank = r;
  D.basis = svd.matrixV().leftCols(r);
  D.null = svd.matrixV().rightCols(d - r);
  D.reduced = D.ds * D.basis;
}

int FiniteMarket::n_states() const { return static_cast<int>(data_->p->size()); }
int FiniteMarket::d_assets() const { return static_cast<int>(data_->s0.size()); }
const Eigen::VectorXd& FiniteMarket::initial_prices() const { return data_->s0; }
const Eigen::MatrixXd& FiniteMarket::terminal_prices() const { return data_->st; }
const Eigen::VectorXd& FiniteMarket::reference() const { return *data_->p; }
const Reference& FiniteMarket::reference_ptr() const { return data_->p; }
const Eigen::MatrixXd& FiniteMarket::increments() const { return data_->ds; }
int FiniteMarket::rank() const { return data_->rank; }
const Eigen::MatrixXd& FiniteMarket::basis() const { return data_->basis; }
const Eigen::MatrixXd& FiniteMarket::reduced_increments() const { return data_->reduced; }
const Eigen::MatrixXd& FiniteMarket::null_directions() const { return data_->null; }

Measure FiniteMarket::reference_measure() const { return Measure(*data_->p, data_->p); }
Measure FiniteMarket::measure(Eigen::VectorXd probabilities) const {
  return Measure(std::move(probabilities), data_->p);
}

const NoArbitrageResult& FiniteMarket::arbitrage_status() const {
  std::call_once(data_->arbitrage_once, [this] { data_->arbitrage = check_no_arbitrage(*this); });
  return data_->arbitrage;
}

void FiniteMarket::require_no_arbitrage() const {
  if (!arbitrage_status().arbitrage_free) {
    throw Error(ErrorCode::NoArbitrageViolated, "market admits arbitrage: no strictly positive martingale measure");
  }
}

const std::vector<Eigen::VectorXd>& FiniteMarket::unit_vertices() const {
  require_no_arbitrage();
  std::call_once(data_->vertex_once, [this] { data_->vertices = enumerate_vertices(data_->reduced); });
  return data_->vertices;
}

NoArbitrageResult check_no_arbitrage(const FiniteMarket& market) {
  const int n = market.n_states();
  const int d = market.d_assets();
  const auto& ds = market.increments();
  // variables (q_1..q_n, t): maximize t s.t. q_i - t >= 0, sum q = 1, dS^T q = 0, t <= 1
  lp::LinearProgram prog;
  prog.objective = Eigen::VectorXd::Zero(n + 1);
  prog.objective(n) = -1.0;
  const int rows = n + 1 + d + 1;
  prog.constraints = Eigen::MatrixXd::Zero(rows, n + 1);
  prog.rhs = Eigen::VectorXd::Zero(rows);
  prog.relations.resize(rows);
  for (int i = 0; i < n; ++i) {
    prog.constraints(i, i) = 1.0;
    prog.constraints(i, n) = -1.0;
    prog.relations[i] = lp::Relation::GreaterEqual;
  }
  prog.constraints.row(n).head(n).setOnes();
  prog.rhs(n) = 1.0;
  prog.relations[n] = lp::Relation::Equal;
  for (int j = 0; j < d; ++j) {
    prog.constraints.row(n + 1 + j).head(n) = ds.col(j).transpose();
    prog.relations[n + 1 + j] = lp::Relation::Equal;
  }
  prog.constraints(rows - 1, n) = 1.0;
  prog.rhs(rows - 1) = 1.0;
  prog.relations[rows - 1] = lp::Relation::LessEqual;

  NoArbitrageResult out;
  const auto sol = lp::solve(prog, 1e-12);
  if (sol.status != lp::Status::Optimal) return out;
  out.margin = sol.x(n);
  if (!(out.margin >= 1e-9)) return out;
  Eigen::VectorXd q = sol.x.head(n).cwiseMax(0.0);
  q /= q.sum();
  // re-verify the certificate
  const double scale = std::max(1.0, ds.cwiseAbs().maxCoeff());
  if (q.minCoeff() < 1e-9 || (d > 0 && (ds.transpose() * q).cwiseAbs().maxCoeff() > 1e-9 * scale)) return out;
  out.arbitrage_free = true;
  out.margin = q.minCoeff();
  out.witness = Measure(std::move(q), market.reference_ptr());
  return out;
}

Payoff strategy_payoff(const FiniteMarket& market, double x, const Strategy& pi) {
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  if (pi.holdings.size() != market.d_assets()) throw Error(ErrorCode::DimensionMismatch, "holdings size differs from asset count");
  Payoff out;
  out.budget = x;
  out.wealth = Eigen::VectorXd::Constant(market.n_states(), x);
  if (market.d_assets() > 0) out.wealth += market.increments() * pi.holdings;
  for (int i = 0; i < out.wealth.size(); ++i) {
    if (out.wealth(i) < -1e-12) {
      std::ostringstream os;
      os << "wealth in state " << i << " is " << out.wealth(i);
      throw Error(ErrorCode::Inadmissible, os.str());
    }
    if (out.wealth(i) < 0.0) out.wealth(i) = 0.0;
  }
  return out;
}

StrategyPolytope admissible_strategy_polytope(const FiniteMarket& market, double x) {
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  if (!market.arbitrage_status().arbitrage_free) {
    throw Error(ErrorCode::ArbitrageDetected, "admissible strategies have a recession direction with A d >= 0, A d != 0");
  }
  StrategyPolytope out;
  const int d = market.d_assets();
  out.A = market.increments();
  out.lower = Eigen::VectorXd::Constant(market.n_states(), -x);
  out.null_directions = market.null_directions();
  out.box_lower = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  out.box_upper = Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
  for (const auto& z : market.unit_vertices()) {
    Eigen::VectorXd pi = d > 0 ? Eigen::VectorXd(x * (market.basis() * z)) : Eigen::VectorXd(0);
    out.box_lower = out.box_lower.cwiseMin(pi);
    out.box_upper = out.box_upper.cwiseMax(pi);
    out.vertices.push_back(std::move(pi));
  }
  return out;
}

double deflator_budget(const FiniteMarket& market, const Eigen::VectorXd& h) {
  if (h.size() != market.n_states()) throw Error(ErrorCode::DimensionMismatch, "deflator size differs from state count");
  for (int i = 0; i < h.size(); ++i) {
    if (!(h(i) >= 0.0)) throw Error(ErrorCode::NegativeDeflator, "deflator value in state " + std::to_string(i) + " is negative");
  }
  const Eigen::VectorXd ph = market.reference().cwiseProduct(h);
  const Eigen::RowVectorXd slope = ph.transpose() * market.reduced_increments();
  const double base = ph.sum();
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& z : market.unit_vertices()) best = std::max(best, base + (z.size() ? slope.dot(z) : 0.0));
  return best;
}

bool deflator_member(const FiniteMarket& market, const Eigen::VectorXd& h, double y) {
  if (!(y > 0.0)) throw Error(ErrorCode::NonpositiveDual, "deflator level must be positive");
  return deflator_budget(market, h) <= y + 1e-9;
}

}  // namespace quasirobust
