#include "quasirobust/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "quasirobust/errors.hpp"
#include "quasirobust/linear_program.hpp"
#include "quasirobust/measure_optimizer.hpp"

namespace quasirobust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<Eigen::MatrixXd> barycentric_solver(const MeasureFamily& hull) {
  const Eigen::MatrixXd& V = hull.vertex_matrix();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
  lu.setThreshold(1e-10);
  if (lu.rank() < V.rows()) return std::nullopt;
  return Eigen::MatrixXd((V * V.transpose()).inverse() * V);
}

// weights for q when representable uniquely; returns false off the hull
bool unique_weights(const Eigen::MatrixXd& solver, const Eigen::MatrixXd& V, const Eigen::VectorXd& q,
                    Eigen::VectorXd& w) {
  w = solver * q;
  if (w.minCoeff() < -1e-10) return false;
  if ((V.transpose() * w - q).cwiseAbs().maxCoeff() > 1e-10) return false;
  w = w.cwiseMax(0.0);
  return true;
}

// min c.w over weights representing q; +inf off the hull
double envelope(const MeasureFamily& hull, const Eigen::VectorXd& c, const Eigen::VectorXd& q) {
  const Eigen::MatrixXd& V = hull.vertex_matrix();
  const int k = static_cast<int>(V.rows());
  const int n = static_cast<int>(V.cols());
  lp::LinearProgram prog;
  prog.objective = c;
  prog.constraints.resize(n + 1, k);
  prog.constraints.topRows(n) = V.transpose();
  prog.constraints.row(n).setOnes();
  prog.rhs.resize(n + 1);
  prog.rhs.head(n) = q;
  prog.rhs(n) = 1.0;
  prog.relations.assign(n + 1, lp::Relation::Equal);
  const auto sol = lp::solve(prog, 1e-12);
  if (sol.status != lp::Status::Optimal) return kInf;
  if ((V.transpose() * sol.x - q).cwiseAbs().maxCoeff() > 1e-10) return kInf;
  return sol.objective;
}

void check_measure(const AmbiguitySpec& spec, const Measure& q) {
  if (q.size() != spec.n_states()) throw Error(ErrorCode::MeasureInvariantViolated, "measure size differs from the ambiguity index");
}

double interp_row(const Eigen::MatrixXd& grid, const std::vector<double>& ts, int k, int seg, double t) {
  const double a = ts[seg], b = ts[seg + 1];
  const double s = (t - a) / (b - a);
  return grid(k, seg) + s * (grid(k, seg + 1) - grid(k, seg));
}

int segment_of(const std::vector<double>& ts, double t) {
  const double lo = ts.front(), hi = ts.back();
  const double slack = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  if (!(t >= lo - slack && t <= hi + slack)) {
    std::ostringstream os;
    os.precision(17);
    os << "t = " << t << " outside the tabulated range [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::GridOutOfRange, os.str());
  }
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  int seg = static_cast<int>(it - ts.begin()) - 1;
  return std::clamp(seg, 0, static_cast<int>(ts.size()) - 2);
}

}  // namespace

double Phi::apply(double t) const {
  if (kind == Kind::Exponential) return parameter == 0.0 ? t : -std::expm1(-parameter * t) / parameter;
  return std::pow(t, parameter) / parameter;
}

double Phi::inverse(double s) const {
  if (kind == Kind::Exponential) return parameter == 0.0 ? s : -std::log1p(-parameter * s) / parameter;
  return std::pow(parameter * s, 1.0 / parameter);
}

AmbiguitySpec AmbiguitySpec::multiple_priors(MeasureFamily family) {
  AmbiguitySpec g;
  g.variant_ = Variant::MultiplePriors;
  g.ref_ = family.reference_ptr();
  g.hull_ = std::move(family);
  return g;
}

AmbiguitySpec AmbiguitySpec::entropic(double theta, Reference reference) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw Error(ErrorCode::InvalidArgument, "entropic theta must be positive");
  AmbiguitySpec g;
  g.variant_ = Variant::Entropic;
  g.ref_ = std::move(reference);
  g.theta_ = theta;
  return g;
}

AmbiguitySpec AmbiguitySpec::penalty_table(std::vector<Measure> generators, std::vector<double> gamma) {
  if (generators.size() != gamma.size()) throw Error(ErrorCode::DimensionMismatch, "one penalty per generator required");
  for (double c : gamma) {
    if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "penalties must be finite");
  }
  AmbiguitySpec g;
  g.variant_ = Variant::PenaltyTable;
  g.hull_ = MeasureFamily::generators(std::move(generators));
  g.ref_ = g.hull_->reference_ptr();
  g.gamma_ = std::move(gamma);
  g.coordinates_ = barycentric_solver(*g.hull_);
  return g;
}

AmbiguitySpec AmbiguitySpec::smooth(Phi phi, std::vector<Measure> measures, std::vector<double> weights) {
  if (measures.empty() || measures.size() != weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "smooth mixture needs one weight per measure");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::InvalidArgument, "mixture weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "mixture weights must sum to 1");
  if (phi.kind == Phi::Kind::Exponential && !(phi.parameter >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "exponential phi needs alpha >= 0");
  }
  if (phi.kind == Phi::Kind::Power && (!(phi.parameter <= 1.0) || phi.parameter == 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "power phi needs beta <= 1, beta != 0");
  }
  AmbiguitySpec g;
  g.variant_ = Variant::Smooth;
  g.ref_ = measures.front().reference_ptr();
  g.phi_ = phi;
  g.mixture_weights_ = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  g.mixture_ = std::move(measures);
  return g;
}

AmbiguitySpec AmbiguitySpec::custom(std::vector<Measure> generators, std::vector<double> t_grid, Eigen::MatrixXd values,
                                    std::optional<double> asymptotic_maximum) {
  if (t_grid.size() < 2) throw Error(ErrorCode::InvalidArgument, "custom G needs at least two t-grid points");
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    if (!std::isfinite(t_grid[j])) throw Error(ErrorCode::InvalidArgument, "custom t-grid must be finite");
    if (j > 0 && !(t_grid[j] > t_grid[j - 1])) throw Error(ErrorCode::InvalidArgument, "custom t-grid must be strictly increasing");
  }
  if (values.rows() != static_cast<Eigen::Index>(generators.size()) ||
      values.cols() != static_cast<Eigen::Index>(t_grid.size())) {
    throw Error(ErrorCode::DimensionMismatch, "custom grid must have one row per generator and one column per t");
  }
  if (!values.allFinite()) throw Error(ErrorCode::InvalidArgument, "custom grid values must be finite");
  AmbiguitySpec g;
  g.variant_ = Variant::Custom;
  g.hull_ = MeasureFamily::generators(std::move(generators));
  g.ref_ = g.hull_->reference_ptr();
  g.t_grid_ = std::move(t_grid);
  g.raw_grid_ = values;
  for (Eigen::Index k = 0; k < values.rows(); ++k) {
    for (Eigen::Index j = 1; j < values.cols(); ++j) {
      if (values(k, j) < values(k, j - 1)) {
        values(k, j) = values(k, j - 1);
        g.monotonized_ = true;
      }
    }
  }
  g.grid_ = std::move(values);
  g.am_ = asymptotic_maximum ? ExtendedReal(*asymptotic_maximum) : ExtendedReal(g.grid_.col(g.grid_.cols() - 1).maxCoeff());
  g.coordinates_ = barycentric_solver(*g.hull_);
  return g;
}

std::string AmbiguitySpec::name() const {
  switch (variant_) {
    case Variant::MultiplePriors: return "multiple_priors";
    case Variant::Entropic: return "variational_entropic";
    case Variant::PenaltyTable: return "variational_table";
    case Variant::Smooth: return "smooth";
    case Variant::Custom: return "custom";
  }
  return "unknown";
}

bool AmbiguitySpec::translation_type() const {
  return variant_ == Variant::MultiplePriors || variant_ == Variant::Entropic || variant_ == Variant::PenaltyTable;
}

bool AmbiguitySpec::concave_in_t() const {
  if (translation_type()) return true;
  if (variant_ != Variant::Custom) return false;
  for (Eigen::Index k = 0; k < grid_.rows(); ++k) {
    double prev = kInf;
    for (std::size_t j = 0; j + 1 < t_grid_.size(); ++j) {
      const double s = (grid_(k, j + 1) - grid_(k, j)) / (t_grid_[j + 1] - t_grid_[j]);
      if (s > prev + 1e-12) return false;
      prev = s;
    }
  }
  return true;
}

bool AmbiguitySpec::strictly_increasing_in_t() const {
  if (translation_type()) return true;
  if (variant_ != Variant::Custom) return false;
  for (Eigen::Index k = 0; k < grid_.rows(); ++k) {
    for (Eigen::Index j = 1; j < grid_.cols(); ++j) {
      if (!(grid_(k, j) > grid_(k, j - 1))) return false;
    }
  }
  return true;
}

bool AmbiguitySpec::has_hull() const { return hull_.has_value(); }

const MeasureFamily& AmbiguitySpec::hull() const {
  if (!hull_) throw Error(ErrorCode::InvalidArgument, name() + " carries no measure hull");
  return *hull_;
}

ExtendedReal AmbiguitySpec::penalty(const Eigen::VectorXd& q) const {
  switch (variant_) {
    case Variant::MultiplePriors:
      if (hull_->kind() == MeasureFamily::Kind::FullSimplex) return 0.0;
      return hull_->contains(Measure(q, ref_)) ? ExtendedReal(0.0) : ExtendedReal::pos_inf();
    case Variant::Entropic:
      return relative_entropy(q, *ref_) / theta_;
    case Variant::PenaltyTable: {
      const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(gamma_.data(), static_cast<Eigen::Index>(gamma_.size()));
      if (coordinates_) {
        Eigen::VectorXd w;
        if (!unique_weights(*coordinates_, hull_->vertex_matrix(), q, w)) return ExtendedReal::pos_inf();
        return c.dot(w);
      }
      const double e = envelope(*hull_, c, q);
      return std::isfinite(e) ? ExtendedReal(e) : ExtendedReal::pos_inf();
    }
    default:
      throw Error(ErrorCode::Unsupported, name() + " is not a translation-type index");
  }
}

Eigen::VectorXd AmbiguitySpec::custom_rows(double t, bool declared) const {
  const int seg = segment_of(t_grid_, t);
  const auto& grid = declared ? raw_grid_ : grid_;
  Eigen::VectorXd out(grid.rows());
  for (Eigen::Index k = 0; k < grid.rows(); ++k) out(k) = interp_row(grid, t_grid_, static_cast<int>(k), seg, t);
  return out;
}

Eigen::VectorXd AmbiguitySpec::custom_row_slopes(double t) const {
  const int seg = segment_of(t_grid_, t);
  return (grid_.col(seg + 1) - grid_.col(seg)) / (t_grid_[seg + 1] - t_grid_[seg]);
}

bool custom_weights(const AmbiguitySpec& spec, const Eigen::VectorXd& q, Eigen::VectorXd& w) {
  if (spec.coordinates_) return unique_weights(*spec.coordinates_, spec.hull_->vertex_matrix(), q, w);
  return spec.hull_->hull_weights(q, w);
}

ExtendedReal eval_custom(const AmbiguitySpec& spec, const Eigen::VectorXd& q, double t, bool declared) {
  const Eigen::VectorXd rows = spec.custom_rows(t, declared);
  if (spec.coordinates_) {
    Eigen::VectorXd w;
    if (!unique_weights(*spec.coordinates_, spec.hull_->vertex_matrix(), q, w)) return ExtendedReal::pos_inf();
    return rows.dot(w);
  }
  const double e = envelope(*spec.hull_, rows, q);
  return std::isfinite(e) ? ExtendedReal(e) : ExtendedReal::pos_inf();
}

namespace {

ExtendedReal eval_impl(const AmbiguitySpec& spec, const Measure& q, ExtendedReal t, bool declared) {
  check_measure(spec, q);
  if (spec.variant() == AmbiguitySpec::Variant::Smooth) {
    throw Error(ErrorCode::Unsupported, "the smooth criterion has no tabulated index G");
  }
  if (t.is_neg_inf()) return ExtendedReal::neg_inf();
  if (spec.variant() == AmbiguitySpec::Variant::Custom) {
    Eigen::VectorXd w;
    if (!custom_weights(spec, q.probabilities(), w)) return ExtendedReal::pos_inf();
    if (t.is_pos_inf()) return spec.asymptotic_maximum();
    return eval_custom(spec, q.probabilities(), t.value(), declared);
  }
  const ExtendedReal c = spec.penalty(q.probabilities());
  if (c.is_pos_inf()) return c;
  if (t.is_pos_inf()) return spec.asymptotic_maximum();
  return t + c;
}

}  // namespace

ExtendedReal eval_G(const AmbiguitySpec& spec, const Measure& q, ExtendedReal t) { return eval_impl(spec, q, t, false); }

ExtendedReal eval_G_declared(const AmbiguitySpec& spec, const Measure& q, ExtendedReal t) {
  return eval_impl(spec, q, t, true);
}

ExtendedReal left_inverse_G(const AmbiguitySpec& spec, const Measure& q, double m) {
  check_measure(spec, q);
  if (spec.variant() == AmbiguitySpec::Variant::Smooth) {
    throw Error(ErrorCode::Unsupported, "the smooth criterion has no tabulated index G");
  }
  if (spec.translation_type()) {
    const ExtendedReal c = spec.penalty(q.probabilities());
    if (c.is_pos_inf()) return ExtendedReal::neg_inf();
    return m - c.value();
  }
  // custom
  Eigen::VectorXd w;
  if (!custom_weights(spec, q.probabilities(), w)) return ExtendedReal::neg_inf();
  const auto& ts = spec.t_grid();
  const int T = static_cast<int>(ts.size());
  std::vector<double> h(T);
  for (int j = 0; j < T; ++j) h[j] = eval_custom(spec, q.probabilities(), ts[j], false).value();
  if (m <= h[0]) return ts[0];
  if (m > h[T - 1]) return ExtendedReal::pos_inf();
  int j = 1;
  while (h[j] < m) ++j;
  double lo = ts[j - 1], hi = ts[j];
  if (spec.unique_representation()) {
    // unique weights: G(q, .) is linear on the segment
    const double t = lo + (m - h[j - 1]) / (h[j] - h[j - 1]) * (hi - lo);
    return std::min(std::max(t, lo), hi);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (eval_custom(spec, q.probabilities(), mid, false).value() >= m) hi = mid;
    else lo = mid;
  }
  return hi;
}

ExtendedReal robust_eval(const AmbiguitySpec& spec, const MeasureFamily& family, const std::vector<ExtendedReal>& utils) {
  if (static_cast<int>(utils.size()) != spec.n_states()) throw Error(ErrorCode::DimensionMismatch, "one utility per state required");
  if (spec.variant() == AmbiguitySpec::Variant::Smooth) {
    std::vector<ExtendedReal> e;
    for (const auto& m : spec.mixture_measures()) {
      ExtendedReal s = 0.0;
      for (int i = 0; i < m.size(); ++i) s += ExtendedReal(m[i]) * utils[i];
      e.push_back(s);
    }
    return smooth_eval(spec, e);
  }
  if (spec.variant() == AmbiguitySpec::Variant::MultiplePriors && spec.hull().kind() == MeasureFamily::Kind::FullSimplex &&
      family.kind() == MeasureFamily::Kind::FullSimplex) {
    return *std::min_element(utils.begin(), utils.end());
  }
  return minimize_over_family(spec, family, InnerFunction::of_utils(utils)).value;
}

ExtendedReal smooth_eval(const AmbiguitySpec& spec, const std::vector<ExtendedReal>& e) {
  if (spec.variant() != AmbiguitySpec::Variant::Smooth) throw Error(ErrorCode::InvalidArgument, "smooth_eval needs a smooth criterion");
  const auto& mu = spec.mixture_weights();
  if (static_cast<Eigen::Index>(e.size()) != mu.size()) throw Error(ErrorCode::DimensionMismatch, "one expectation per mixture measure required");
  const Phi& phi = spec.phi();
  if (phi.kind == Phi::Kind::Exponential) {
    const double a = phi.parameter;
    if (a == 0.0) {
      ExtendedReal s = 0.0;
      for (std::size_t k = 0; k < e.size(); ++k) s += ExtendedReal(mu(static_cast<Eigen::Index>(k))) * e[k];
      return s;
    }
    double top = -kInf;
    bool any = false;
    for (std::size_t k = 0; k < e.size(); ++k) {
      if (mu(static_cast<Eigen::Index>(k)) == 0.0) continue;
      if (e[k].is_neg_inf()) return ExtendedReal::neg_inf();
      if (e[k].is_pos_inf()) continue;
      top = std::max(top, -a * e[k].value());
      any = true;
    }
    if (!any) return ExtendedReal::pos_inf();
    double s = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) {
      const double m = mu(static_cast<Eigen::Index>(k));
      if (m == 0.0 || e[k].is_pos_inf()) continue;
      s += m * std::exp(-a * e[k].value() - top);
    }
    return -(top + std::log(s)) / a;
  }
  const double b = phi.parameter;
  double s = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double m = mu(static_cast<Eigen::Index>(k));
    const bool inside = b > 0.0 ? e[k].value() >= 0.0 : e[k].value() > 0.0;
    if (!inside) {
      std::ostringstream os;
      os << "expectation " << e[k] << " outside the domain of the power transform";
      throw Error(ErrorCode::DomainError, os.str());
    }
    if (m == 0.0) continue;
    if (e[k].is_pos_inf()) {
      if (b > 0.0) return ExtendedReal::pos_inf();
      continue;
    }
    s += m * std::pow(e[k].value(), b);
  }
  if (b < 0.0 && s == 0.0) return ExtendedReal::pos_inf();
  return std::pow(s, 1.0 / b);
}

namespace {

Eigen::VectorXd dirichlet(std::mt19937_64& rng, int k, double sparsity) {
  std::exponential_distribution<double> ex(1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::VectorXd w(k);
  for (int i = 0; i < k; ++i) w(i) = uni(rng) < sparsity ? 0.0 : ex(rng);
  if (!(w.sum() > 0.0)) w(std::uniform_int_distribution<int>(0, k - 1)(rng)) = 1.0;
  return w / w.sum();
}

double excess(ExtendedReal a, ExtendedReal b) {
  if (a.is_pos_inf()) return b.is_pos_inf() ? 0.0 : kInf;
  if (a.is_neg_inf() || b.is_pos_inf()) return 0.0;
  if (b.is_neg_inf()) return kInf;
  return a.value() - b.value();
}

}  // namespace

AxiomReport check_G_axioms(const AmbiguitySpec& spec, std::size_t samples, std::uint64_t seed) {
  AxiomReport rep;
  rep.samples = samples;
  if (spec.variant() == AmbiguitySpec::Variant::Smooth) {
    rep.applicable = false;
    return rep;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int n = spec.n_states();
  const Reference& ref = spec.reference_ptr();
  const bool custom = spec.variant() == AmbiguitySpec::Variant::Custom;
  const double t_lo = custom ? spec.t_grid().front() : -10.0;
  const double t_hi = custom ? spec.t_grid().back() : 10.0;

  auto draw_measure = [&]() -> Eigen::VectorXd {
    if (spec.has_hull() && spec.hull().kind() == MeasureFamily::Kind::Generators && uni(rng) < 0.75) {
      const auto& V = spec.hull().vertex_matrix();
      Eigen::VectorXd q = V.transpose() * dirichlet(rng, static_cast<int>(V.rows()), 0.2);
      return q / q.sum();
    }
    return dirichlet(rng, n, 0.2);
  };
  auto G = [&](const Eigen::VectorXd& q, double t) {
    return eval_G_declared(spec, Measure::normalized(q, ref), t);
  };

  for (std::size_t s = 0; s < samples; ++s) {
    AxiomWitness w;
    w.q = draw_measure();
    w.q_prime = draw_measure();
    w.t = t_lo + (t_hi - t_lo) * uni(rng);
    w.t_prime = t_lo + (t_hi - t_lo) * uni(rng);
    w.lambda = uni(rng);

    const double t1 = std::min(w.t, w.t_prime), t2 = std::max(w.t, w.t_prime);
    const double mono = excess(G(w.q, t1), G(w.q, t2));
    if (mono > rep.monotonicity) {
      rep.monotonicity = mono;
      rep.monotonicity_witness = w;
      rep.monotonicity_witness->t = t1;
      rep.monotonicity_witness->t_prime = t2;
    }
    const Eigen::VectorXd qm = w.lambda * w.q + (1.0 - w.lambda) * w.q_prime;
    const double tm = w.lambda * w.t + (1.0 - w.lambda) * w.t_prime;
    const ExtendedReal a = G(w.q, w.t), b = G(w.q_prime, w.t_prime);
    const double qc = excess(G(qm, tm), std::max(a, b));
    if (qc > rep.quasiconvexity) {
      rep.quasiconvexity = qc;
      rep.quasiconvexity_witness = w;
    }
  }

  if (custom) {
    const auto& last = spec.declared_grid_values().col(spec.declared_grid_values().cols() - 1);
    rep.asymptotic_spread = last.maxCoeff() - last.minCoeff();
    if (spec.asymptotic_maximum().is_finite()) {
      rep.asymptotic_spread = std::max(rep.asymptotic_spread, std::abs(spec.asymptotic_maximum().value() - last.maxCoeff()));
    }
  } else if (!spec.asymptotic_maximum().is_pos_inf()) {
    rep.asymptotic_spread = kInf;
  } else {
    // G(q, t) must grow without bound along t for every q in the domain
    const double big = 1e6;
    for (int s = 0; s < 64; ++s) {
      const Eigen::VectorXd q = draw_measure();
      const ExtendedReal g1 = G(q, big), g2 = G(q, 2.0 * big);
      if (g1.is_pos_inf()) continue;
      const double growth = g2.is_pos_inf() ? kInf : g2.value() - g1.value();
      rep.asymptotic_spread = std::max(rep.asymptotic_spread, std::max(0.0, big - growth) / big);
    }
  }
  return rep;
}

bool level_set_member(const AmbiguitySpec& spec, const Measure& q, double t, double c) {
  return eval_G(spec, q, t) <= ExtendedReal(c);
}

}  // namespace quasirobust
