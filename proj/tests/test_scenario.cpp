#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parevo/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace parevo;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = PAREVO_SCENARIO_DIR;

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("parevo-test-" + name);
  fs::remove_all(p);
  return p;
}

RunOptions to(const fs::path& dir) {
  RunOptions o;
  o.out_dir = dir.string();
  return o;
}

const char* kMinimal = R"(name = tiny

[domain]
kind = whole-space
dim = 1

[coefficients]
catalog = heat

[scheme]
dt = 0.01
h = 0.0625
R = 6

[window]
lower = -2
upper = 2

[time]
t = 0.5

[initial]
field = bump
param.center = 0
)";

}  // namespace

TEST_CASE("bundled scenarios round-trip byte for byte") {
  int n = 0;
  for (const auto& e : fs::directory_iterator(kScenarios)) {
    if (e.path().extension() != ".scn") continue;
    CAPTURE(e.path().string());
    const std::string text = read(e.path());
    const ParseResult r = parse_scenario(text);
    REQUIRE_MESSAGE(r.ok(), r.message());
    CHECK(serialize(*r.scenario) == text);
    ++n;
  }
  CHECK(n >= 8);
}

TEST_CASE("parse errors are collected with lines and suggestions") {
  CHECK(parse_scenario("").message().find("missing domain") != std::string::npos);

  std::string typo = kMinimal;
  typo.replace(typo.find("[coefficients]"), 14, "[coefficiets]");
  const ParseResult t = parse_scenario(typo);
  CHECK_FALSE(t.ok());
  CHECK(t.message().find("coefficients") != std::string::npos);

  const std::string several = "name = x\nbogus = 1\n\n[domain]\nkind = half-spce\ndim = 7\n";
  const ParseResult s = parse_scenario(several);
  CHECK_FALSE(s.ok());
  CHECK(s.issues.size() >= 3);
  bool line2 = false, line5 = false;
  for (const auto& i : s.issues) {
    line2 = line2 || i.line == 2;
    line5 = line5 || i.line == 5;
  }
  CHECK(line2);
  CHECK(line5);
  CHECK(s.message().find("half-space") != std::string::npos);

  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(suggest("heta", {"heat", "ou"}) == "heat");
  CHECK(suggest("zzzzzz", {"heat", "ou"}).empty());

  const fs::path bad = scratch("bad.scn");
  std::ofstream(bad) << several;
  try {
    load_scenario(bad.string());
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(exit_code(e) == 1);
  }
}

TEST_CASE("hashes are stable and track content") {
  const ParseResult a = parse_scenario(kMinimal);
  REQUIRE(a.ok());
  CHECK(a.scenario->hash().size() == 16);
  CHECK(a.scenario->hash() == parse_scenario(serialize(*a.scenario)).scenario->hash());
  std::string other = kMinimal;
  other.replace(other.find("t = 0.5"), 7, "t = 0.6");
  CHECK(parse_scenario(other).scenario->hash() != a.scenario->hash());
}

TEST_CASE("solve output is deterministic and carries provenance") {
  const Scenario sc = *parse_scenario(kMinimal).scenario;
  const fs::path d1 = scratch("solve1"), d2 = scratch("solve2");
  const RunReport r1 = run_command(sc, "solve", to(d1));
  run_command(sc, "solve", to(d2));
  CHECK(exit_code(r1) == 0);
  const std::string a = read(d1 / "solution.csv"), b = read(d2 / "solution.csv");
  CHECK(!a.empty());
  CHECK(a == b);
  std::istringstream in(a);
  std::string first, second;
  std::getline(in, first);
  std::getline(in, second);
  CHECK(first == "# scenario-hash " + sc.hash());
  CHECK(second.rfind("t,x", 0) == 0);
  CHECK(fs::exists(d1 / "report.txt"));
  CHECK(fs::exists(d1 / "solution.svg"));
}

TEST_CASE("exit codes") {
  CHECK(exit_code(Error(ErrorKind::Numerical, "x")) == 2);
  CHECK(exit_code(Error(ErrorKind::Hypothesis, "x")) == 3);
  CHECK(exit_code(Error(ErrorKind::Precondition, "x")) == 1);
  CHECK(exit_code(Error(ErrorKind::Config, "x")) == 1);

  RunReport r;
  ExperimentResult e;
  e.status = Status::ExpectedFail;
  r.results.push_back(e);
  CHECK_FALSE(r.unexpected_failure());
  CHECK(exit_code(r) == 0);
  e.status = Status::Fail;
  r.results.push_back(e);
  CHECK(r.unexpected_failure());
  CHECK(exit_code(r) == 3);
}

TEST_CASE("validate certifies the bundled worked examples") {
  for (const char* name : {"radial-power.scn", "normal-power.scn", "cubic-drift.scn", "robin-negative.scn"}) {
    CAPTURE(name);
    const Scenario sc = load_scenario((kScenarios / name).string());
    const RunReport r = run_command(sc, "validate", to(scratch(std::string("validate-") + name)));
    for (const auto& res : r.results) {
      CAPTURE(res.name);
      CHECK(res.status == Status::Pass);
    }
    CHECK(exit_code(r) == 0);
  }
}

TEST_CASE("expected failures and gradient ceilings") {
  const Scenario heat = load_scenario((kScenarios / "heat-line.scn").string());
  const RunReport t = run_command(heat, "tightness", to(scratch("tightness")));
  REQUIRE(t.results.size() == 1);
  CHECK(t.results[0].status == Status::ExpectedFail);
  CHECK(exit_code(t) == 0);

  const Scenario dh = load_scenario((kScenarios / "dirichlet-heat.scn").string());
  const RunReport g = run_command(dh, "gradest", to(scratch("gradest")));
  CHECK(exit_code(g) == 3);

  CHECK_THROWS_AS(run_command(dh, "frobnicate", to(scratch("bad-command"))), Error);
}
