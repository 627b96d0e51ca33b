#include "quasirobust/measure_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "quasirobust/errors.hpp"

namespace quasirobust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGradientCap = 1e12;

void sanitize(Eigen::VectorXd& g) {
  for (int i = 0; i < g.size(); ++i) {
    if (std::isnan(g(i))) g(i) = 0.0;
    g(i) = std::clamp(g(i), -kGradientCap, kGradientCap);
  }
}

double log_sum_exp(const Eigen::VectorXd& a) {
  const double m = a.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((a.array() - m).exp().sum());
}

class Objective {
 public:
  Objective(const AmbiguitySpec& spec, const MeasureFamily& family, const InnerFunction& inner)
      : spec_(spec), V_(family.vertex_matrix()), inner_(inner), p_(*spec.reference_ptr()) {
    if (spec.variant() == AmbiguitySpec::Variant::PenaltyTable) {
      gamma_ = Eigen::Map<const Eigen::VectorXd>(spec.gamma().data(), static_cast<Eigen::Index>(spec.gamma().size()));
    }
  }

  Eigen::VectorXd measure(const Eigen::VectorXd& w) const {
    Eigen::VectorXd q = (V_.transpose() * w).cwiseMax(0.0);
    return q / q.sum();
  }

  // f(w) = G(q(w), t(q(w))) written in weight space; t_out receives t(q)
  ExtendedReal operator()(const Eigen::VectorXd& w, Eigen::VectorXd* grad, ExtendedReal* t_out = nullptr) {
    ++evaluations;
    const Eigen::VectorXd q = measure(w);
    Eigen::VectorXd gq;
    const ExtendedReal t = inner_(q, grad ? &gq : nullptr);
    if (t_out) *t_out = t;
    if (grad) sanitize(gq);
    if (t.is_neg_inf()) {
      if (grad) *grad = V_ * gq;
      return ExtendedReal::neg_inf();
    }
    if (t.is_pos_inf()) {
      if (grad) *grad = Eigen::VectorXd::Zero(w.size());
      return spec_.asymptotic_maximum();
    }
    switch (spec_.variant()) {
      case AmbiguitySpec::Variant::MultiplePriors:
        if (grad) *grad = V_ * gq;
        return t;
      case AmbiguitySpec::Variant::Entropic: {
        const double th = spec_.theta();
        if (grad) {
          Eigen::VectorXd gk(q.size());
          for (int i = 0; i < q.size(); ++i) gk(i) = (std::log(std::max(q(i), 1e-300) / p_(i)) + 1.0) / th;
          Eigen::VectorXd g = gq + gk;
          sanitize(g);
          *grad = V_ * g;
        }
        return t.value() + relative_entropy(q, p_) / th;
      }
      case AmbiguitySpec::Variant::PenaltyTable:
        if (grad) *grad = V_ * gq + gamma_;
        return t.value() + w.dot(gamma_);
      case AmbiguitySpec::Variant::Custom: {
        const Eigen::VectorXd rows = spec_.custom_rows(t.value());
        if (grad) {
          const double slope = w.dot(spec_.custom_row_slopes(t.value()));
          *grad = rows + slope * (V_ * gq);
        }
        return w.dot(rows);
      }
      case AmbiguitySpec::Variant::Smooth:
        break;
    }
    throw Error(ErrorCode::Unsupported, "the smooth criterion has no tabulated index G");
  }

  const Eigen::MatrixXd& vertices() const { return V_; }
  int evaluations = 0;

 private:
  const AmbiguitySpec& spec_;
  const Eigen::MatrixXd& V_;
  const InnerFunction& inner_;
  const Eigen::VectorXd& p_;
  Eigen::VectorXd gamma_;
};

struct Candidate {
  Eigen::VectorXd w;
  ExtendedReal f;
};

Candidate projected_gradient(Objective& obj, Eigen::VectorXd w, const MeasureSearchOptions& opt) {
  Eigen::VectorXd g;
  ExtendedReal f = obj(w, &g);
  if (!f.is_finite()) return {w, f};
  double step = 1.0 / std::max(1.0, g.cwiseAbs().maxCoeff());
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Eigen::VectorXd pg = w - project_to_simplex(w - g);
    if (pg.cwiseAbs().maxCoeff() <= 1e-10) break;
    Eigen::VectorXd wn, gn;
    ExtendedReal fn;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      wn = project_to_simplex(w - step * g);
      fn = obj(wn, &gn);
      if (fn.is_neg_inf()) return {wn, fn};
      if (fn.is_finite() && fn.value() <= f.value() + 1e-4 * g.dot(wn - w) + 1e-15 * std::abs(f.value())) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd s = wn - w, y = gn - g;
    const double drop = f.value() - fn.value();
    w = wn;
    g = gn;
    f = fn;
    if (s.cwiseAbs().maxCoeff() <= opt.tolerance && drop <= 1e-15 * (1.0 + std::abs(f.value()))) break;
    const double sy = s.dot(y);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1e12) : std::min(step * 4.0, 1e12);
  }
  return {w, f};
}

// mirror descent on the state simplex for the entropic index
Candidate entropic_descent(Objective& obj, double theta, Eigen::VectorXd q,
                           const MeasureSearchOptions& opt) {
  Eigen::VectorXd g;
  ExtendedReal f = obj(q, &g);
  if (!f.is_finite()) return {q, f};
  int stalls = 0;
  double step = 1.0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::VectorXd lq = q.array().max(1e-300).log();
    Eigen::VectorXd lt = lq - theta * g;
    lt.array() -= log_sum_exp(lt);
    if ((lt.array().exp().matrix() - q).cwiseAbs().maxCoeff() <= opt.tolerance) break;
    bool accepted = false;
    Eigen::VectorXd qn, gn;
    ExtendedReal fn;
    for (double s = std::min(1.0, 2.0 * step); s > 1e-12; s *= 0.5) {
      Eigen::VectorXd ln = (1.0 - s) * lq + s * lt;
      ln.array() -= log_sum_exp(ln);
      qn = ln.array().exp();
      qn /= qn.sum();
      fn = obj(qn, &gn);
      if (fn.is_neg_inf()) return {qn, fn};
      if (fn.is_finite() && fn.value() <= f.value() + 1e-15 * std::abs(f.value())) {
        accepted = true;
        step = s;
        break;
      }
    }
    if (!accepted) break;
    const double delta = (qn - q).cwiseAbs().maxCoeff();
    stalls = f.value() - fn.value() <= 1e-15 * (1.0 + std::abs(f.value())) ? stalls + 1 : 0;
    q = qn;
    g = gn;
    f = fn;
    if (delta <= opt.tolerance || stalls >= 3) break;
  }
  return {q, f};
}

Eigen::VectorXd random_weights(std::mt19937_64& rng, int k) {
  std::exponential_distribution<double> ex(1.0);
  Eigen::VectorXd w(k);
  for (int i = 0; i < k; ++i) w(i) = ex(rng);
  return w / w.sum();
}

}  // namespace

InnerFunction InnerFunction::of_utils(std::vector<ExtendedReal> utils) {
  InnerFunction f;
  f.linear = std::move(utils);
  return f;
}

ExtendedReal InnerFunction::operator()(const Eigen::VectorXd& q, Eigen::VectorXd* gradient) const {
  if (!linear) return general(q, gradient);
  const auto& u = *linear;
  ExtendedReal s = 0.0;
  for (int i = 0; i < q.size(); ++i) s += ExtendedReal(q(i)) * u[static_cast<std::size_t>(i)];
  if (gradient) {
    gradient->resize(q.size());
    for (int i = 0; i < q.size(); ++i) (*gradient)(i) = u[static_cast<std::size_t>(i)].value();
  }
  return s;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, tau = 0.0;
  for (int i = 0; i < n; ++i) {
    css += u[i];
    const double cand = (css - 1.0) / (i + 1);
    if (u[i] - cand > 0.0) tau = cand;
  }
  Eigen::VectorXd w = (v.array() - tau).max(0.0);
  const double s = w.sum();
  return s > 0.0 ? Eigen::VectorXd(w / s) : Eigen::VectorXd::Constant(n, 1.0 / n);
}

MeasureFamily effective_family(const AmbiguitySpec& spec, const MeasureFamily& family) {
  if (family.n_states() != spec.n_states()) throw Error(ErrorCode::DimensionMismatch, "family and ambiguity index disagree on the state count");
  if (spec.variant() == AmbiguitySpec::Variant::Smooth) {
    throw Error(ErrorCode::Unsupported, "the smooth criterion is evaluated directly, not by measure search");
  }
  if (!spec.has_hull()) return family;
  const MeasureFamily& own = spec.hull();
  if (family.kind() == MeasureFamily::Kind::FullSimplex || family.same_hull_as(own)) return own;
  if (own.kind() == MeasureFamily::Kind::FullSimplex) return family;
  throw Error(ErrorCode::InvalidArgument, "measure family conflicts with the hull carried by " + spec.name());
}

MeasureSearchResult minimize_over_family(const AmbiguitySpec& spec, const MeasureFamily& family_in,
                                         const InnerFunction& inner, const MeasureSearchOptions& opt) {
  const MeasureFamily family = effective_family(spec, family_in);
  Objective obj(spec, family, inner);
  const Eigen::MatrixXd& V = family.vertex_matrix();
  const int K = static_cast<int>(V.rows());
  const bool simplex = family.kind() == MeasureFamily::Kind::FullSimplex;
  const auto variant = spec.variant();

  MeasureSearchResult out;
  auto finish = [&](const Eigen::VectorXd& w, bool tie) {
    out.weights = w;
    out.q = obj.measure(w);
    ExtendedReal t;
    out.value = obj(w, nullptr, &t);
    out.inner = t;
    out.evaluations = obj.evaluations;
    out.tie_broken = tie;
    return out;
  };

  std::vector<Candidate> cands;
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd w = Eigen::VectorXd::Unit(K, k);
    const ExtendedReal f = obj(w, nullptr);
    cands.push_back({std::move(w), f});
  }
  auto best_index = [&] {
    std::size_t b = 0;
    for (std::size_t i = 1; i < cands.size(); ++i) {
      if (cands[i].f < cands[b].f) b = i;
    }
    return b;
  };

  if (inner.linear) {
    const auto& u = *inner.linear;
    if (variant == AmbiguitySpec::Variant::MultiplePriors || variant == AmbiguitySpec::Variant::PenaltyTable) {
      // linear in the weights: a vertex is optimal
      const ExtendedReal fstar = cands[best_index()].f;
      Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
      int ties = 0;
      for (int k = 0; k < K; ++k) {
        const ExtendedReal f = cands[static_cast<std::size_t>(k)].f;
        const bool tied = fstar.is_finite() ? (f.is_finite() && f.value() <= fstar.value() + opt.tie_tolerance) : f == fstar;
        if (tied) {
          w(k) = 1.0;
          ++ties;
        }
      }
      return finish(w / ties, ties > 1);
    }
    if (variant == AmbiguitySpec::Variant::Entropic && simplex) {
      const Eigen::VectorXd& p = *spec.reference_ptr();
      const int n = static_cast<int>(p.size());
      Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
      bool degenerate = false;
      for (int i = 0; i < n; ++i) {
        if (u[static_cast<std::size_t>(i)].is_neg_inf()) {
          w(i) = 1.0;
          degenerate = true;
        }
      }
      if (degenerate) return finish(w / w.sum(), w.sum() > 1.0);
      Eigen::VectorXd a(n);
      for (int i = 0; i < n; ++i) {
        a(i) = u[static_cast<std::size_t>(i)].is_pos_inf() ? -kInf : std::log(p(i)) - spec.theta() * u[static_cast<std::size_t>(i)].value();
      }
      const double lse = log_sum_exp(a);
      if (!std::isfinite(lse)) return finish(p, false);
      return finish((a.array() - lse).exp().matrix(), false);
    }
  }

  // general search
  std::mt19937_64 rng(opt.seed);
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(cands[best_index()].w);
  starts.push_back(Eigen::VectorXd::Constant(K, 1.0 / K));
  if (simplex) starts.push_back(*spec.reference_ptr());
  const bool convex = inner.convex && spec.translation_type();
  if (convex) {
    // one descent from the best start suffices
    std::size_t pick = 0;
    ExtendedReal fpick = ExtendedReal::pos_inf();
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const ExtendedReal f = obj(starts[i], nullptr);
      if (i == 0 || f < fpick) {
        pick = i;
        fpick = f;
      }
    }
    starts = {starts[pick]};
  } else {
    while (static_cast<int>(starts.size()) < opt.multistarts) starts.push_back(random_weights(rng, K));
  }
  for (const auto& s : starts) {
    Candidate c = (variant == AmbiguitySpec::Variant::Entropic && simplex)
                      ? entropic_descent(obj, spec.theta(), s.cwiseMax(1e-12) / s.cwiseMax(1e-12).sum(), opt)
                      : projected_gradient(obj, s, opt);
    cands.push_back(std::move(c));
  }

  const std::size_t b = best_index();
  const ExtendedReal fstar = cands[b].f;
  if (fstar.is_finite() && variant != AmbiguitySpec::Variant::Entropic) {
    // break numerical ties toward the barycenter of the tied points
    Eigen::VectorXd bar = Eigen::VectorXd::Zero(K);
    std::vector<const Eigen::VectorXd*> tied;
    for (const auto& c : cands) {
      if (!c.f.is_finite() || c.f.value() > fstar.value() + opt.tie_tolerance) continue;
      bool fresh = true;
      for (const auto* t : tied) fresh = fresh && (*t - c.w).cwiseAbs().maxCoeff() > 1e-9;
      if (fresh) tied.push_back(&c.w);
    }
    if (tied.size() > 1) {
      for (const auto* t : tied) bar += *t;
      bar /= static_cast<double>(tied.size());
      const ExtendedReal fb = obj(bar, nullptr);
      if (fb.is_finite() && fb.value() <= fstar.value() + opt.tie_tolerance) return finish(bar, true);
    }
  }
  return finish(cands[b].w, false);
}

}  // namespace quasirobust
