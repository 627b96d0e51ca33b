#include "quasirobust_cli/report.hpp"

#include <cmath>
#include <cstdio>

#include "quasirobust/errors.hpp"

namespace quasirobust::cli {

using nlohmann::json;

std::string sci(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

json encode(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double decode(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    return NAN;
  }
  return j.get<double>();
}

namespace {

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(encode(v(i)));
  return a;
}

Eigen::VectorXd unvec(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = decode(a[i]);
  return v;
}

json optional_number(const std::optional<double>& v) { return v ? encode(*v) : json(nullptr); }

std::optional<double> unoptional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return decode(j);
}

}  // namespace

json report_to_json(const SolveReport& r) {
  json j;
  j["x"] = encode(r.x);
  j["primal_value"] = encode(r.primal_value);
  j["primal_payoff"] = {{"wealth", vec(r.primal_payoff.wealth)}, {"budget", encode(r.primal_payoff.budget)}};
  j["holdings"] = vec(r.holdings);
  j["worst_case_measure"] = r.worst_case_measure ? vec(r.worst_case_measure->probabilities()) : json(nullptr);
  j["y_star"] = encode(r.y_star);
  j["dual_value"] = encode(r.dual_value);
  j["dual_measure"] = r.dual_measure ? vec(r.dual_measure->probabilities()) : json(nullptr);
  j["minimax_lhs"] = optional_number(r.minimax_lhs);
  j["minimax_rhs"] = optional_number(r.minimax_rhs);
  j["duality_gap"] = encode(r.duality_gap);
  j["saddle_residual"] = encode(r.saddle_residual);
  j["kkt_closure"] = encode(r.kkt_closure);
  j["payoff_deviation_margin"] = encode(r.payoff_deviation_margin);
  j["measure_deviation_margin"] = encode(r.measure_deviation_margin);
  j["boundary_minimum"] = r.boundary_minimum;
  j["converged"] = r.converged;
  j["iterations"] = {{"primal", r.iterations.primal},
                     {"polish", r.iterations.polish},
                     {"dual", r.iterations.dual},
                     {"saddle", r.iterations.saddle}};
  return j;
}

SolveReport report_from_json(const json& j, const Reference& ref) {
  SolveReport r;
  r.x = decode(j.at("x"));
  r.primal_value = decode(j.at("primal_value"));
  r.primal_payoff.wealth = unvec(j.at("primal_payoff").at("wealth"));
  r.primal_payoff.budget = decode(j.at("primal_payoff").at("budget"));
  r.holdings = unvec(j.at("holdings"));
  if (!j.at("worst_case_measure").is_null()) r.worst_case_measure = Measure(unvec(j["worst_case_measure"]), ref);
  r.y_star = decode(j.at("y_star"));
  r.dual_value = decode(j.at("dual_value"));
  if (!j.at("dual_measure").is_null()) r.dual_measure = Measure(unvec(j["dual_measure"]), ref);
  r.minimax_lhs = unoptional(j.at("minimax_lhs"));
  r.minimax_rhs = unoptional(j.at("minimax_rhs"));
  r.duality_gap = decode(j.at("duality_gap"));
  r.saddle_residual = decode(j.at("saddle_residual"));
  r.kkt_closure = decode(j.at("kkt_closure"));
  r.payoff_deviation_margin = decode(j.at("payoff_deviation_margin"));
  r.measure_deviation_margin = decode(j.at("measure_deviation_margin"));
  r.boundary_minimum = j.at("boundary_minimum").get<bool>();
  r.converged = j.at("converged").get<bool>();
  const json& it = j.at("iterations");
  r.iterations.primal = it.at("primal").get<int>();
  r.iterations.polish = it.at("polish").get<int>();
  r.iterations.dual = it.at("dual").get<int>();
  r.iterations.saddle = it.at("saddle").get<int>();
  return r;
}

json machine_block(const std::string& text) {
  const auto pos = text.find(kMachineMarker);
  if (pos == std::string::npos) throw Error(ErrorCode::SchemaError, "report has no machine-readable block");
  return json::parse(text.substr(pos + std::string(kMachineMarker).size()));
}

}  // namespace quasirobust::cli
