// parevo: scenario-driven front end for the evolution-operator library.
#include "acceptance.hpp"
#include "parevo/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#ifndef PAREVO_SCENARIO_DIR
#define PAREVO_SCENARIO_DIR "scenarios"
#endif

namespace {

int selftest(const std::string& out_dir, std::uint64_t seed, const std::vector<int>& only, bool quiet) {
  parevo::selftest::Options opts;
  opts.scenario_dir = PAREVO_SCENARIO_DIR;
  opts.seed = seed;
  opts.log = quiet ? nullptr : &std::cerr;
  const auto results = parevo::selftest::run_all(opts, only);
  bool ok = true;
  std::ofstream report;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    report.open((std::filesystem::path(out_dir) / "report.txt").string());
  }
  for (const auto& r : results) {
    parevo::selftest::print(std::cout, r, false);
    if (report) parevo::selftest::print(report, r, true);
    ok = ok && r.pass;
  }
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parevo: evolution operators of nonautonomous elliptic problems on unbounded domains"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  std::uint64_t seed = 0;
  int refine = -1;
  bool quiet = false;
  std::vector<int> only;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"validate", "run the certificate suite"},
      {"solve", "apply G(t,s) to the initial datum"},
      {"kernel", "estimate the Green kernel at the probes"},
      {"tightness", "tail-mass profile of the kernel"},
      {"gradest", "fit the gradient constant C_{s,T}"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--refine", refine, "exhaustion refinements (overrides the scenario)")->check(CLI::NonNegativeNumber);
  }
  auto* st = app.add_subcommand("selftest", "run the oracle and acceptance suite");
  st->add_option("scenario", scenario_path, "ignored; accepted for symmetry");
  st->add_option("--out", out_dir, "write a detailed report.txt here");
  st->add_option("--seed", seed, "seed for randomized suites");
  st->add_option("--only", only, "criterion numbers to run");
  st->add_flag("--quiet", quiet, "no progress output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (st->parsed()) return selftest(out_dir, seed ? seed : 1, only, quiet);
    const std::string command = app.get_subcommands().front()->get_name();
    const parevo::Scenario sc = parevo::load_scenario(scenario_path);
    parevo::RunOptions opts;
    opts.out_dir = out_dir;
    if (app.get_subcommands().front()->count("--seed")) opts.seed = seed;
    if (refine >= 0) opts.refine = refine;
    const parevo::RunReport rep = parevo::run_command(sc, command, opts);
    for (const auto& r : rep.results) {
      std::cout << to_string(r.status) << "  " << r.name;
      for (const auto& [k, v] : r.metrics) std::cout << "  " << k << "=" << v;
      std::cout << "\n";
    }
    return parevo::exit_code(rep);
  } catch (const parevo::Error& e) {
    std::cerr << "parevo: " << e.what() << "\n";
    return parevo::exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "parevo: " << e.what() << "\n";
    return 1;
  }
}
