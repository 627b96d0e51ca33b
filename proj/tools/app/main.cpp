#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "quasirobust_cli/commands.hpp"

namespace {

void add_common(CLI::App* sub, std::string& path, quasirobust::cli::CommandOptions& o) {
  sub->add_option("instance", path, "Instance file (JSON)")->required();
  sub->add_option_function<double>("--x", [&o](double v) { o.x = v; }, "Override the initial capital");
  sub->add_option_function<std::uint64_t>("--seed", [&o](std::uint64_t v) { o.seed = v; }, "Override the run seed");
  sub->add_option_function<double>("--tol", [&o](double v) { o.tolerance = v; }, "Override the solver tolerance");
  sub->add_option_function<std::string>(
         "--oracle", [&o](const std::string& v) { o.oracle = (v == "on"); }, "Brute-force oracle checks")
      ->check(CLI::IsMember({"on", "off"}));
}

}  // namespace

int main(int argc, char** argv) {
  namespace qc = quasirobust::cli;
  CLI::App app{"Robust utility maximization with quasiconcave ambiguity criteria on finite markets"};
  app.require_subcommand(1);

  std::string path;
  qc::CommandOptions o;
  o.jobs = qc::default_jobs();

  auto* solve = app.add_subcommand("solve", "Solve the primal and dual problems and report the saddle point");
  add_common(solve, path, o);
  solve->add_option("--report", o.report_path, "Write the report to a file instead of stdout");

  auto* verify = app.add_subcommand("verify", "Run the named invariant checks; exit 1 if any fails");
  add_common(verify, path, o);
  verify->add_option("--report", o.report_path, "Write the report to a file instead of stdout");

  auto* sweep = app.add_subcommand("sweep", "Tabulate u, v, the gap and the worst-case measure over an x-grid");
  add_common(sweep, path, o);
  sweep->add_option("--output,-o", o.output_path, "CSV destination (default stdout)");
  sweep->add_option("--jobs,-j", o.jobs, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : qc::kExitSchema;
  }

  if (*solve) return qc::cmd_solve(path, o, std::cout, std::cerr);
  if (*verify) return qc::cmd_verify(path, o, std::cout, std::cerr);
  return qc::cmd_sweep(path, o, std::cout, std::cerr);
}
