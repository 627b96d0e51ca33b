#include "quasirobust_cli/instance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "quasirobust/errors.hpp"
#include "quasirobust/measure_optimizer.hpp"

namespace quasirobust::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaError, path + ": " + what);
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const double v = number(j[i], path + "[" + std::to_string(i) + "]");
    if (!std::isfinite(v)) fail(path + "[" + std::to_string(i) + "]", "must be finite");
    out.push_back(v);
  }
  return out;
}

Eigen::VectorXd vec(const json& j, const std::string& path) {
  const auto v = numbers(j, path);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(numbers(j[i], path + "[" + std::to_string(i) + "]"));
  const std::size_t cols = rows[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) fail(path + "[" + std::to_string(i) + "]", "row length differs from row 0");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  }
  return m;
}

// module errors raised while building a block are reported against that block
template <class F>
auto build(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError) throw;
    fail(path, e.what());
  }
}

std::vector<Measure> measures(const json& j, const std::string& path, const Reference& ref) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of probability vectors");
  std::vector<Measure> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (j[i].is_string() && j[i].get<std::string>() == "reference") {
      out.emplace_back(*ref, ref);
      continue;
    }
    const Eigen::VectorXd q = vec(j[i], p);
    out.push_back(build(p, [&] { return Measure(q, ref); }));
  }
  return out;
}

UtilitySpec parse_utility(const json& j) {
  const std::string fam = field(j, "family", "utility").is_string() ? j["family"].get<std::string>() : "";
  if (fam == "log") return UtilitySpec::log();
  if (fam == "power") {
    const double p = number(field(j, "p", "utility"), "utility.p");
    return build("utility.p", [&] { return UtilitySpec::power(p); });
  }
  if (fam == "table") {
    const json& pts = field(j, "points", "utility");
    if (!pts.is_array()) fail("utility.points", "expected an array of [x, u] pairs");
    std::vector<std::pair<double, double>> v;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto pair = numbers(pts[i], "utility.points[" + std::to_string(i) + "]");
      if (pair.size() != 2) fail("utility.points[" + std::to_string(i) + "]", "expected [x, u]");
      v.emplace_back(pair[0], pair[1]);
    }
    return build("utility.points", [&] { return UtilitySpec::table(v); });
  }
  fail("utility.family", "expected one of log, power, table");
}

MeasureFamily parse_family(const json& j, const std::string& path, const Reference& ref) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "full_simplex") return MeasureFamily::simplex(ref);
    if (s == "reference") return MeasureFamily::generators({Measure(*ref, ref)});
    fail(path, "expected full_simplex, reference or an object");
  }
  if (j.is_array()) return build(path, [&] { return MeasureFamily::generators(measures(j, path, ref)); });
  const json& kind = field(j, "kind", path);
  if (kind == "full_simplex") return MeasureFamily::simplex(ref);
  if (kind == "generators") {
    const std::string p = path + ".generators";
    return build(p, [&] { return MeasureFamily::generators(measures(field(j, "generators", path), p, ref)); });
  }
  fail(path + ".kind", "expected full_simplex or generators");
}

AmbiguitySpec parse_ambiguity(const json& j, const Reference& ref) {
  const json& v = field(j, "variant", "ambiguity");
  const std::string variant = v.is_string() ? v.get<std::string>() : "";
  if (variant == "multiple_priors") {
    MeasureFamily fam = MeasureFamily::simplex(ref);
    if (j.contains("generators")) {
      fam = parse_family(j["generators"], "ambiguity.generators", ref);
    } else if (j.contains("family")) {
      fam = parse_family(j["family"], "ambiguity.family", ref);
    }
    return AmbiguitySpec::multiple_priors(fam);
  }
  if (variant == "variational") {
    const json& pen = field(j, "penalty", "ambiguity");
    if (pen.contains("entropic")) {
      const double theta = number(field(pen["entropic"], "theta", "ambiguity.penalty.entropic"), "ambiguity.penalty.entropic.theta");
      return build("ambiguity.penalty.entropic.theta", [&] { return AmbiguitySpec::entropic(theta, ref); });
    }
    if (pen.contains("table")) {
      const std::string p = "ambiguity.penalty.table";
      auto gens = measures(field(pen["table"], "generators", p), p + ".generators", ref);
      auto gamma = numbers(field(pen["table"], "gamma", p), p + ".gamma");
      return build(p, [&] { return AmbiguitySpec::penalty_table(gens, gamma); });
    }
    fail("ambiguity.penalty", "expected entropic or table");
  }
  if (variant == "smooth") {
    const json& phi = field(j, "phi", "ambiguity");
    Phi f;
    if (phi.contains("exponential")) {
      f.kind = Phi::Kind::Exponential;
      f.parameter = number(field(phi["exponential"], "alpha", "ambiguity.phi.exponential"), "ambiguity.phi.exponential.alpha");
    } else if (phi.contains("power")) {
      f.kind = Phi::Kind::Power;
      f.parameter = number(field(phi["power"], "beta", "ambiguity.phi.power"), "ambiguity.phi.power.beta");
    } else {
      fail("ambiguity.phi", "expected exponential or power");
    }
    const json& mix = field(j, "mixture", "ambiguity");
    if (!mix.is_array() || mix.empty()) fail("ambiguity.mixture", "expected a non-empty array");
    std::vector<Measure> ms;
    std::vector<double> ws;
    for (std::size_t k = 0; k < mix.size(); ++k) {
      const std::string p = "ambiguity.mixture[" + std::to_string(k) + "]";
      ms.push_back(measures(json::array({field(mix[k], "measure", p)}), p + ".measure", ref).front());
      ws.push_back(number(field(mix[k], "weight", p), p + ".weight"));
    }
    return build("ambiguity", [&] { return AmbiguitySpec::smooth(f, ms, ws); });
  }
  if (variant == "custom") {
    auto gens = measures(field(j, "generators", "ambiguity"), "ambiguity.generators", ref);
    auto grid = numbers(field(j, "t_grid", "ambiguity"), "ambiguity.t_grid");
    Eigen::MatrixXd values = matrix(field(j, "values", "ambiguity"), "ambiguity.values");
    std::optional<double> am;
    if (j.contains("asymptotic_maximum")) am = number(j["asymptotic_maximum"], "ambiguity.asymptotic_maximum");
    return build("ambiguity", [&] { return AmbiguitySpec::custom(gens, grid, values, am); });
  }
  fail("ambiguity.variant", "expected multiple_priors, variational, smooth or custom");
}

RunBlock parse_run(const json& j) {
  RunBlock r;
  if (j.is_null()) return r;
  if (!j.is_object()) fail("run", "expected an object");
  if (j.contains("x_grid")) {
    r.xs = numbers(j["x_grid"], "run.x_grid");
    if (r.xs.empty()) fail("run.x_grid", "must not be empty");
    r.grid = true;
  } else if (j.contains("x")) {
    r.xs = {number(j["x"], "run.x")};
  }
  for (std::size_t k = 0; k < r.xs.size(); ++k) {
    if (!(r.xs[k] > 0.0)) fail(r.grid ? "run.x_grid[" + std::to_string(k) + "]" : "run.x", "must be positive");
    if (k > 0 && !(r.xs[k] > r.xs[k - 1])) fail("run.x_grid[" + std::to_string(k) + "]", "grid must be ascending");
  }
  auto count = [&](const char* key, int& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer() || j[key].get<long long>() <= 0) fail(std::string("run.") + key, "expected a positive integer");
    out = j[key].get<int>();
  };
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)) {
      fail("run.seed", "expected a non-negative integer");
    }
    r.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("tolerance")) {
    r.tolerance = number(j["tolerance"], "run.tolerance");
    if (!(r.tolerance > 0.0)) fail("run.tolerance", "must be positive");
  }
  if (j.contains("oracle")) {
    if (!j["oracle"].is_boolean()) fail("run.oracle", "expected true or false");
    r.oracle = j["oracle"].get<bool>();
  }
  count("y_samples", r.y_samples);
  count("axiom_samples", r.axiom_samples);
  count("saddle_samples", r.saddle_samples);
  return r;
}

}  // namespace

Instance parse_instance(const json& doc, const std::string& source) {
  if (!doc.is_object()) fail("<root>", "expected an object with market, utility, ambiguity and run blocks");
  Instance inst;
  inst.source = source;
  const json& m = field(doc, "market", "<root>");
  const Eigen::VectorXd s0 = vec(field(m, "s0", "market"), "market.s0");
  const Eigen::MatrixXd st = matrix(field(m, "st", "market"), "market.st");
  const Eigen::VectorXd p = vec(field(m, "p", "market"), "market.p");
  inst.market.emplace(build("market", [&] { return FiniteMarket(s0, st, p); }));
  const Reference& ref = inst.market->reference_ptr();
  inst.utility.emplace(parse_utility(field(doc, "utility", "<root>")));
  inst.ambiguity.emplace(parse_ambiguity(field(doc, "ambiguity", "<root>"), ref));
  inst.family.emplace(doc.contains("family") ? parse_family(doc["family"], "family", ref) : MeasureFamily::simplex(ref));
  if (inst.ambiguity->variant() != AmbiguitySpec::Variant::Smooth) {
    build("family", [&] { return effective_family(*inst.ambiguity, *inst.family); });
  }
  inst.run = parse_run(doc.contains("run") ? doc["run"] : json());
  return inst;
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, path + ": cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path + ": " + e.what());
  }
  return parse_instance(doc, path);
}

}  // namespace quasirobust::cli
