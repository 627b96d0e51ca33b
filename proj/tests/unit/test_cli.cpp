#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "quasirobust_cli/commands.hpp"
#include "quasirobust_cli/instance.hpp"
#include "quasirobust_cli/report.hpp"

namespace qc = quasirobust::cli;
namespace fs = std::filesystem;

namespace {

std::string instance(const char* name) { return std::string(QUASIROBUST_INSTANCE_DIR) + "/" + name; }

struct Run {
  int code;
  std::string out, err;
};

template <class F>
Run run(F f, const std::string& path, const qc::CommandOptions& o = {}) {
  std::ostringstream out, err;
  const int code = f(path, o, out, err);
  return {code, out.str(), err.str()};
}

std::string write_temp(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_CASE("solve: singleton log instance") {
  const auto r = run(qc::cmd_solve, instance("singleton_log.json"));
  CHECK(r.code == qc::kExitOk);
  const auto j = qc::machine_block(r.out);
  CHECK(j["command"] == "solve");
  const double u = qc::decode(j["report"]["primal_value"]);
  CHECK(u == doctest::Approx(std::log(2.0) + 0.0588915178281917).epsilon(1e-8));
}

TEST_CASE("solve: arbitrage and schema errors") {
  const auto arb = run(qc::cmd_solve, instance("arbitrage.json"));
  CHECK(arb.code == qc::kExitAssumption);
  CHECK(arb.err.find("no-arbitrage") != std::string::npos);

  const auto bad = write_temp("qr_bad.json", R"({"market": {"s0": [1], "st": [[2], [0.5]], "p": [0.5, "x"]}})");
  const auto r = run(qc::cmd_solve, bad);
  CHECK(r.code == qc::kExitSchema);
  CHECK(r.err.find("market.p[1]") != std::string::npos);

  const auto broken = write_temp("qr_broken.json", "{\n  \"market\": \n");
  const auto rb = run(qc::cmd_solve, broken);
  CHECK(rb.code == qc::kExitSchema);
  CHECK(rb.err.find("line 3") != std::string::npos);

  const auto variant = write_temp("qr_variant.json", R"({"market": {"s0": [1], "st": [[2], [0.5]], "p": [0.5, 0.5]},
    "utility": {"family": "log"}, "ambiguity": {"variant": "nonsense"}})");
  const auto rv = run(qc::cmd_solve, variant);
  CHECK(rv.code == qc::kExitSchema);
  CHECK(rv.err.find("ambiguity.variant") != std::string::npos);

  CHECK(run(qc::cmd_solve, "/nonexistent/instance.json").code == qc::kExitSchema);
}

TEST_CASE("report machine block round trip") {
  const auto r = run(qc::cmd_solve, instance("entropic_demo.json"));
  REQUIRE(r.code == qc::kExitOk);
  const auto j = qc::machine_block(r.out);
  const auto inst = qc::load_instance(instance("entropic_demo.json"));
  const auto rep = qc::report_from_json(j["report"], inst.market->reference_ptr());
  CHECK(qc::report_to_json(rep) == j["report"]);
  CHECK(rep.primal_value == qc::decode(j["report"]["primal_value"]));
  CHECK(rep.saddle_residual <= 1e-5);
}

TEST_CASE("verify: entropic demo passes, adversarial custom grid fails on the axioms") {
  const auto ok = run(qc::cmd_verify, instance("entropic_demo.json"));
  CHECK(ok.code == qc::kExitOk);
  CHECK(ok.out.find("FAIL") == std::string::npos);

  const auto bad = run(qc::cmd_verify, instance("adversarial_custom.json"));
  CHECK(bad.code == qc::kExitCheckFailed);
  CHECK(bad.out.find("FAIL  G axiom: non-decreasing in t") != std::string::npos);
  CHECK(bad.out.find("witness") != std::string::npos);
}

TEST_CASE("verify: oracle off still runs the other checks") {
  qc::CommandOptions o;
  o.oracle = false;
  const auto r = run(qc::cmd_verify, instance("entropic_demo.json"), o);
  CHECK(r.code == qc::kExitOk);
  CHECK(r.out.find("SKIP  oracle checks") != std::string::npos);
  CHECK(r.out.find("PASS  strong duality") != std::string::npos);
  CHECK(r.out.find("PASS  saddle residual") != std::string::npos);
}

TEST_CASE("sweep: header, rows, determinism") {
  qc::CommandOptions o;
  o.jobs = 3;
  const auto a = run(qc::cmd_sweep, instance("sweep_singleton_log.json"), o);
  o.jobs = 1;
  const auto b = run(qc::cmd_sweep, instance("sweep_singleton_log.json"), o);
  REQUIRE(a.code == qc::kExitOk);
  CHECK(a.out == b.out);
  std::istringstream in(a.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,u,v,gap,y_star,q_1,q_2");
  int rows = 0;
  double prev = -INFINITY, shift = NAN;
  while (std::getline(in, line)) {
    ++rows;
    const double x = std::stod(line.substr(0, line.find(',')));
    const double u = std::stod(line.substr(line.find(',') + 1));
    CHECK(u >= prev);
    prev = u;
    if (std::isnan(shift)) shift = u - std::log(x);
    CHECK(u - std::log(x) == doctest::Approx(shift).epsilon(1e-5));
  }
  CHECK(rows == 5);
}

TEST_CASE("command-line overrides and job defaults") {
  qc::CommandOptions o;
  o.x = 3.0;
  const auto r = run(qc::cmd_solve, instance("singleton_log.json"), o);
  CHECK(qc::decode(qc::machine_block(r.out)["report"]["x"]) == 3.0);
  CHECK(qc::default_jobs() >= 1);
  CHECK(qc::exit_code_for(quasirobust::ErrorCode::NonConvergence) == qc::kExitNonConvergence);
  CHECK(qc::exit_code_for(quasirobust::ErrorCode::AssumptionViolated) == qc::kExitAssumption);
  CHECK(qc::exit_code_for(quasirobust::ErrorCode::SchemaError) == qc::kExitSchema);
}

TEST_CASE("every shipped instance parses") {
  for (const auto& e : fs::directory_iterator(QUASIROBUST_INSTANCE_DIR)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(qc::load_instance(e.path().string()));
  }
}
