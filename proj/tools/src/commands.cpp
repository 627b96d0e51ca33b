#include "quasirobust_cli/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "quasirobust/auxiliary.hpp"
#include "quasirobust/oracle.hpp"
#include "quasirobust_cli/report.hpp"

namespace quasirobust::cli {

using nlohmann::json;

int default_jobs() {
  if (const char* env = std::getenv("QUASIROBUST_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return 1;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError: return kExitSchema;
    case ErrorCode::NonConvergence:
    case ErrorCode::SaddleInequalityViolated: return kExitNonConvergence;
    default: return kExitAssumption;
  }
}

SolverOptions solver_options(const RunBlock& run) {
  SolverOptions o;
  o.seed = run.seed;
  o.tolerance = run.tolerance;
  o.saddle_samples = run.saddle_samples;
  o.strict_saddle = false;
  o.measure.seed = run.seed;
  return o;
}

namespace {

std::string list(const Eigen::VectorXd& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + sci(v(i));
  return s + "]";
}

std::string opt(const std::optional<double>& v) { return v ? sci(*v) : "n/a"; }

bool load(const std::string& path, const CommandOptions& o, Instance& inst, std::ostream& err) {
  try {
    inst = load_instance(path);
  } catch (const Error& e) {
    err << "schema error: " << e.what() << "\n";
    return false;
  }
  if (o.x) {
    inst.run.xs = {*o.x};
    inst.run.grid = false;
  }
  if (o.seed) inst.run.seed = *o.seed;
  if (o.tolerance) inst.run.tolerance = *o.tolerance;
  if (o.oracle) inst.run.oracle = *o.oracle;
  return true;
}

void diagnose(const Error& e, const Instance& inst, std::ostream& err) {
  if (e.code() == ErrorCode::NoArbitrageViolated || e.code() == ErrorCode::ArbitrageDetected) {
    err << "no-arbitrage check failed for " << inst.source << ": " << e.what() << "\n";
    return;
  }
  err << "error: " << e.what() << "\n";
}

bool precondition_3_4(const Instance& inst) {
  const UtilitySpec& u = *inst.utility;
  const AmbiguitySpec& G = *inst.ambiguity;
  if (G.variant() == AmbiguitySpec::Variant::Smooth) return false;
  const bool nonnegative = u.family() == UtilitySpec::Family::Power && u.exponent() > 0.0;
  return nonnegative || G.concave_in_t();
}

// primal, dual and saddle fields as far as the variant supports them
SolveReport full_solve(const Instance& inst, double x, const SolverOptions& o) {
  const auto& m = *inst.market;
  const auto& G = *inst.ambiguity;
  const auto& F = *inst.family;
  const auto& u = *inst.utility;
  if (G.variant() == AmbiguitySpec::Variant::Smooth) return robust_primal_solve(m, G, F, u, x, o);
  if (G.strictly_increasing_in_t()) return extract_saddle(m, G, F, u, x, o);
  SolveReport rep = robust_primal_solve(m, G, F, u, x, o);
  const DualMinimum d = robust_dual_minimize(m, G, F, u, x, o);
  rep.y_star = d.y_star;
  rep.dual_value = d.value;
  rep.dual_measure = d.measure;
  rep.boundary_minimum = d.boundary_minimum;
  rep.duality_gap = d.value - rep.primal_value;
  rep.iterations.dual = d.evaluations;
  return rep;
}

void write_text(std::ostream& os, const Instance& inst, const SolveReport& r) {
  os << "x                         " << sci(r.x) << "\n"
     << "primal_value              " << sci(r.primal_value) << "\n"
     << "holdings                  " << list(r.holdings) << "\n"
     << "primal_payoff             " << list(r.primal_payoff.wealth) << "\n"
     << "worst_case_measure        " << (r.worst_case_measure ? list(r.worst_case_measure->probabilities()) : "n/a") << "\n";
  if (inst.ambiguity->variant() != AmbiguitySpec::Variant::Smooth) {
    os << "y_star                    " << sci(r.y_star) << "\n"
       << "dual_value                " << sci(r.dual_value) << "\n"
       << "dual_measure              " << (r.dual_measure ? list(r.dual_measure->probabilities()) : "n/a") << "\n"
       << "duality_gap               " << sci(r.duality_gap) << "\n"
       << "minimax_lhs               " << opt(r.minimax_lhs) << "\n"
       << "minimax_rhs               " << opt(r.minimax_rhs) << "\n"
       << "saddle_residual           " << sci(r.saddle_residual) << "\n"
       << "kkt_closure               " << sci(r.kkt_closure) << "\n"
       << "payoff_deviation_margin   " << sci(r.payoff_deviation_margin) << "\n"
       << "measure_deviation_margin  " << sci(r.measure_deviation_margin) << "\n"
       << "boundary_minimum          " << (r.boundary_minimum ? "yes" : "no") << "\n";
  } else {
    os << "dual                      not available for the smooth criterion\n";
  }
  os << "converged                 " << (r.converged ? "yes" : "no") << "\n"
     << "iterations                primal=" << r.iterations.primal << " polish=" << r.iterations.polish
     << " dual=" << r.iterations.dual << " saddle=" << r.iterations.saddle << "\n";
}

void emit(const std::string& text, const CommandOptions& o, std::ostream& out, const std::string& summary) {
  if (o.report_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.report_path);
  f << text;
  out << summary << " (report written to " << o.report_path << ")\n";
}

const char* status_name(Check::Status s) {
  switch (s) {
    case Check::Status::Pass: return "PASS";
    case Check::Status::Fail: return "FAIL";
    case Check::Status::Skip: return "SKIP";
  }
  return "?";
}

Check measured(std::string name, double value, double limit, bool upper, std::string note = {}) {
  Check c;
  c.name = std::move(name);
  c.measured = value;
  c.limit = limit;
  c.upper = upper;
  c.note = std::move(note);
  const double m = c.margin();
  c.status = std::isfinite(m) ? (m >= 0.0 ? Check::Status::Pass : Check::Status::Fail)
                              : (m > 0.0 ? Check::Status::Pass : Check::Status::Fail);
  return c;
}

Check skipped(std::string name, std::string note) {
  Check c;
  c.name = std::move(name);
  c.status = Check::Status::Skip;
  c.note = std::move(note);
  return c;
}

std::string witness_note(const std::optional<AxiomWitness>& w) {
  if (!w) return {};
  std::ostringstream s;
  s << "witness q=" << list(w->q) << " q'=" << list(w->q_prime) << " t=" << sci(w->t) << " t'=" << sci(w->t_prime)
    << " lambda=" << sci(w->lambda);
  return s.str();
}

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(lo * std::pow(hi / lo, n == 1 ? 0.0 : static_cast<double>(k) / (n - 1)));
  return v;
}

}  // namespace

std::string sweep_csv(const SweepTable& table, int n_states) {
  std::string s = "x,u,v,gap,y_star";
  for (int i = 1; i <= n_states; ++i) s += ",q_" + std::to_string(i);
  s += "\n";
  for (const auto& r : table.rows) {
    s += sci(r.x) + "," + sci(r.u) + "," + sci(r.v.value_or(NAN)) + "," + sci(r.gap.value_or(NAN)) + "," +
         sci(r.y_star.value_or(NAN));
    for (Eigen::Index i = 0; i < r.q.size(); ++i) s += "," + sci(r.q(i));
    s += "\n";
  }
  return s;
}

int cmd_solve(const std::string& path, const CommandOptions& o, std::ostream& out, std::ostream& err) {
  Instance inst;
  if (!load(path, o, inst, err)) return kExitSchema;
  const double x = inst.run.xs.front();
  SolveReport rep;
  try {
    rep = full_solve(inst, x, solver_options(inst.run));
  } catch (const Error& e) {
    diagnose(e, inst, err);
    return exit_code_for(e.code());
  }
  const int status = rep.converged ? kExitOk : kExitNonConvergence;
  std::ostringstream text;
  text << "quasirobust solve report\n"
       << "instance                  " << inst.source << "\n"
       << "ambiguity                 " << inst.ambiguity->name() << "\n";
  write_text(text, inst, rep);
  text << "status                    " << (status == kExitOk ? "ok" : "not converged") << "\n";
  json machine{{"command", "solve"}, {"instance", inst.source}, {"status", status}, {"report", report_to_json(rep)}};
  text << kMachineMarker << "\n" << machine.dump(2) << "\n";
  emit(text.str(), o, out, "primal_value " + sci(rep.primal_value));
  if (status != kExitOk) err << "primal search did not converge within its budget\n";
  return status;
}

int cmd_verify(const std::string& path, const CommandOptions& o, std::ostream& out, std::ostream& err) {
  Instance inst;
  if (!load(path, o, inst, err)) return kExitSchema;
  const auto& m = *inst.market;
  const auto& G = *inst.ambiguity;
  const auto& F = *inst.family;
  const auto& u = *inst.utility;
  const double x = inst.run.xs.front();
  const SolverOptions so = solver_options(inst.run);
  const bool smooth = G.variant() == AmbiguitySpec::Variant::Smooth;
  std::vector<Check> checks;

  const AxiomReport ax = check_G_axioms(G, static_cast<std::size_t>(inst.run.axiom_samples), inst.run.seed);
  if (ax.applicable) {
    checks.push_back(measured("G axiom: non-decreasing in t", ax.monotonicity, 1e-9, true, witness_note(ax.monotonicity_witness)));
    checks.push_back(measured("G axiom: jointly quasiconvex", ax.quasiconvexity, 1e-9, true, witness_note(ax.quasiconvexity_witness)));
    checks.push_back(measured("G axiom: asymptotic maximum", ax.asymptotic_spread, 1e-9, true));
  } else {
    checks.push_back(skipped("G axioms", "criterion has no tabulated index"));
  }

  SolveReport rep;
  double rhs = NAN;
  int code = kExitOk;
  try {
    rep = full_solve(inst, x, so);
    checks.push_back(measured("primal search converged", rep.converged ? 1.0 : 0.0, 1.0, false));
    const double cash = robust_value(G, F, Payoff{Eigen::VectorXd::Constant(m.n_states(), x), x}, u, so.measure).value();
    checks.push_back(measured("u(x) >= criterion of the cash position", rep.primal_value - cash, -1e-9, false));

    if (!smooth) {
      rhs = inf_sup_value(m, G, F, u, x, so).first.value();
      checks.push_back(measured("u(x) <= inf_Q G(Q, u_Q(x))", rhs - rep.primal_value, -1e-6, false));
      const double centre = rep.y_star > 0.0 ? rep.y_star : u.du(x);
      double worst = INFINITY;
      int outside = 0;
      for (double y : geometric(centre * 1e-2, centre * 1e2, inst.run.y_samples)) {
        try {
          worst = std::min(worst, robust_dual_value(m, G, F, u, x, y, so).first.value() - rhs);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::GridOutOfRange) throw;
          ++outside;
        }
      }
      std::string note = std::to_string(inst.run.y_samples - outside) + " sampled y";
      if (outside) note += ", " + std::to_string(outside) + " beyond the tabulated t-range";
      checks.push_back(measured("weak duality chain inf_Q G(Q, u_Q(x)) <= v(y; x)", worst, -1e-6, false, note));
      if (precondition_3_4(inst)) {
        checks.push_back(measured("strong duality |u(x) - inf_y v(y; x)|", std::abs(rep.dual_value - rep.primal_value), 1e-3, true,
                                  rep.boundary_minimum ? "y-minimum at the scan boundary" : ""));
        checks.push_back(measured("minimax |sup inf - inf sup|", std::abs(rhs - rep.primal_value), 1e-3, true));
      } else {
        checks.push_back(skipped("strong duality", "needs U >= 0 or G concave in t"));
        checks.push_back(skipped("minimax interchange", "needs U >= 0 or G concave in t"));
      }
      if (G.strictly_increasing_in_t()) {
        checks.push_back(measured("saddle residual |g - I(Y/Z)|", rep.saddle_residual, 1e-5, true));
        checks.push_back(measured("saddle: payoff deviations", rep.payoff_deviation_margin, -1e-6, false,
                                  std::to_string(so.saddle_samples) + " samples"));
        checks.push_back(measured("saddle: measure deviations", rep.measure_deviation_margin, -1e-6, false,
                                  std::to_string(so.saddle_samples) + " samples"));
      } else {
        checks.push_back(skipped("saddle relation", "G(Q, .) not strictly increasing"));
      }
    } else {
      checks.push_back(skipped("duality, minimax and saddle checks", "the smooth criterion is primal only"));
    }

    const std::vector<double> xs = geometric(0.25 * x, 4.0 * x, 5);
    const std::vector<double> ys = geometric(1e-2 * u.du(x), 1e2 * u.du(x), 13);
    std::vector<std::pair<std::string, Measure>> aux{{"reference", m.reference_measure()}};
    if (const auto na = m.arbitrage_status(); na.witness) aux.emplace_back("martingale witness", *na.witness);
    for (const auto& [label, q] : aux) {
      const ConjugacyReport cr = conjugacy_report(m, q, u, xs, ys);
      checks.push_back(measured("conjugacy gap (" + label + ")", cr.max_gap, 1e-4, true));
      checks.push_back(measured("Fenchel-Young margin (" + label + ")", cr.min_margin, -1e-8, false));
    }

    if (inst.run.oracle) {
      try {
        const OracleAnswer ou = oracle_u(m, G, F, u, x);
        const double lim = std::max(2e-3, ou.grid_bound);
        checks.push_back(measured("oracle agreement |u(x) - grid u(x)|", std::abs(rep.primal_value - ou.value), lim, true,
                                  "grid value " + sci(ou.value)));
        if (!smooth && u.family() != UtilitySpec::Family::Table && rep.y_star > 0.0) {
          const OracleAnswer ov = oracle_v(m, G, F, u, x, rep.y_star);
          const double vstar = robust_dual_value(m, G, F, u, x, rep.y_star, so).first.value();
          checks.push_back(measured("oracle agreement |v(y*; x) - grid v(y*; x)|", std::abs(vstar - ov.value),
                                    std::max(2e-3, ov.grid_bound), true, "grid value " + sci(ov.value)));
        }
        const BipolarReport br = oracle_bipolar(m, {}, 100, inst.run.seed);
        checks.push_back(measured("bipolar forward violations", br.forward_violations, 0.0, true,
                                  std::to_string(br.forward_checks) + " pairings"));
        checks.push_back(measured("bipolar reverse violations", br.reverse_violations, 0.0, true,
                                  "max excess " + sci(br.max_reverse_excess)));
        checks.push_back(measured("super-budget payoff rejected", br.super_budget_rejected ? 1.0 : 0.0, 1.0, false));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ScaleRefused) throw;
        checks.push_back(skipped("oracle checks", e.what()));
      }
    } else {
      checks.push_back(skipped("oracle checks", "oracle disabled"));
    }
  } catch (const Error& e) {
    diagnose(e, inst, err);
    code = exit_code_for(e.code());
    checks.push_back(skipped("remaining checks", std::string("aborted: ") + e.what()));
  }

  bool failed = false;
  std::ostringstream text;
  text << "quasirobust verify report\n"
       << "instance   " << inst.source << "\n"
       << "ambiguity  " << G.name() << "\n"
       << "x          " << sci(x) << "\n\n";
  json jc = json::array();
  for (const auto& c : checks) {
    failed = failed || c.status == Check::Status::Fail;
    text << status_name(c.status) << "  " << c.name;
    if (c.status != Check::Status::Skip) text << "  measured=" << sci(c.measured) << " margin=" << sci(c.margin());
    if (!c.note.empty()) text << "  (" << c.note << ")";
    text << "\n";
    jc.push_back({{"name", c.name},
                  {"status", status_name(c.status)},
                  {"measured", encode(c.measured)},
                  {"limit", encode(c.limit)},
                  {"margin", encode(c.margin())},
                  {"note", c.note}});
  }
  if (failed) code = kExitCheckFailed;
  text << "\nstatus     " << (code == kExitOk ? "all checks passed" : failed ? "checks failed" : "aborted") << "\n";
  json machine{{"command", "verify"}, {"instance", inst.source}, {"status", code}, {"checks", jc}};
  if (!std::isnan(rhs) || rep.x > 0.0) machine["report"] = report_to_json(rep);
  text << kMachineMarker << "\n" << machine.dump(2) << "\n";
  emit(text.str(), o, out, code == kExitOk ? "all checks passed" : "verification failed");
  if (failed) {
    for (const auto& c : checks) {
      if (c.status == Check::Status::Fail) err << "FAIL " << c.name << " (measured " << sci(c.measured) << ")\n";
    }
  }
  return code;
}

int cmd_sweep(const std::string& path, const CommandOptions& o, std::ostream& out, std::ostream& err) {
  Instance inst;
  if (!load(path, o, inst, err)) return kExitSchema;
  SweepTable table;
  try {
    table = value_sweep(*inst.market, *inst.ambiguity, *inst.family, *inst.utility, inst.run.xs,
                        solver_options(inst.run), o.jobs);
  } catch (const Error& e) {
    diagnose(e, inst, err);
    return exit_code_for(e.code());
  }
  const std::string csv = sweep_csv(table, inst.market->n_states());
  if (o.output_path.empty()) {
    out << csv;
  } else {
    std::ofstream f(o.output_path);
    f << csv;
  }
  if (table.monotonicity_violation > 1e-8) {
    err << "u is not monotone in x (violation " << sci(table.monotonicity_violation) << ")\n";
    return kExitNonConvergence;
  }
  if (table.concavity_violations > 0) err << "note: " << table.concavity_violations << " concavity violations in u\n";
  return kExitOk;
}

}  // namespace quasirobust::cli
