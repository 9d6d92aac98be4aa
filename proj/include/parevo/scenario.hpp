#pragma once

#include "parevo/evolution.hpp"
#include "parevo/fields.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace parevo {

// Scenario files are sectioned key-value text:
//
//   # comment
//   name = heat-line
//   seed = 1
//
//   [domain]
//   kind = half-space
//   dim = 1
//
// Lists are space separated; point lists separate points with ';'.
// Parameter maps of catalog entries are written as "param.<key> = value".

struct DomainSpec {
  std::string kind = "whole-space";
  int dim = 1;
  Vec center = Vec::Zero();
  double radius = 1.0;

  Domain build() const;
};

struct CatalogSpec {
  std::string name;
  ParamMap params;
};

struct BoundarySpec {
  std::string kind = "dirichlet";  // dirichlet | neumann | robin | oblique
  double gamma = 0.0;
  Vec beta = Vec::Zero();  // oblique only, constant direction

  BoundaryCondition build(const Domain& domain) const;
};

struct SchemeSpec {
  double theta = 0.5;
  double dt = 1e-3;
  int rannacher = 2;
  std::string drift = "upwind";  // upwind | central
  double h = 1.0 / 64.0;
  double h_theta = 0.0;
  double R = 8.0;
  int refinements = 0;
  double tol = 1e-3;
};

struct WindowSpec {
  bool present = false;
  Vec lower = Vec::Zero();
  Vec upper = Vec::Zero();
};

struct CertificateSpec {
  bool present = false;
  std::optional<CatalogSpec> lyapunov;
  double lambda = 1.0;
  std::optional<CatalogSpec> compactness;
  double c1 = 1.0, c2 = 4.0, epsilon = 1.0;
  std::optional<CatalogSpec> gauge;
  double H = 0.0;
  double delta0 = 0.0;  // > 0 requests the gradient hypotheses report
};

struct KernelSpec {
  bool present = false;
  std::vector<Vec> probes;
  std::vector<double> radii;
  double threshold = 0.05;  // tightness: sup tail at the last radius
  std::string expect = "pass";
};

struct GradestSpec {
  bool present = false;
  double T = 1.0;
  double ceiling = 0.0;  // 0 = no ceiling
  int batch = 0;          // extra random bumps besides the initial datum
  bool waive = false;
  std::string expect = "pass";
};

struct Scenario {
  std::vector<std::string> comments;  // leading comment lines, kept verbatim
  std::string name;
  std::uint64_t seed = 1;
  DomainSpec domain;
  CatalogSpec coefficients;
  BoundarySpec boundary;
  SchemeSpec scheme;
  WindowSpec window;
  double s = 0.0, t = 1.0;
  CatalogSpec initial{"constant", {}};
  CertificateSpec certificates;
  KernelSpec kernel;
  GradestSpec gradest;
  std::string output;

  /// FNV-1a of the canonical serialization.
  std::string hash() const;
};

struct ParseIssue {
  int line = 0;  // 0 when the problem is not tied to a line
  std::string field;
  std::string message;
};

/// Collects every problem rather than stopping at the first.
struct ParseResult {
  std::optional<Scenario> scenario;
  std::vector<ParseIssue> issues;

  bool ok() const { return scenario.has_value(); }
  std::string message() const;
};

ParseResult parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);  // throws Config with all issues
std::string serialize(const Scenario& sc);

std::size_t edit_distance(const std::string& a, const std::string& b);
/// Closest candidate within distance 3, or empty.
std::string suggest(const std::string& word, const std::vector<std::string>& candidates);

// ---------------------------------------------------------------------------

enum class Status { Pass, Fail, ExpectedFail };
const char* to_string(Status s);

struct ExperimentResult {
  std::string name;
  Status status = Status::Pass;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> artifacts;
  std::string note;
  double seconds = 0.0;
};

struct RunReport {
  std::string scenario;
  std::string hash;
  std::string command;
  std::vector<ExperimentResult> results;

  bool unexpected_failure() const;
  void write(std::ostream& os) const;
};

struct RunOptions {
  std::string out_dir;  // overrides the scenario's output dir
  std::optional<std::uint64_t> seed;
  std::optional<int> refine;
};

/// Builds G from the scenario (scheme, policy, boundary).
EvolutionOperator build_operator(const Scenario& sc, std::optional<int> refine = std::nullopt);

/// validate | solve | kernel | tightness | gradest. Writes report.txt and the
/// artifacts into the output directory.
RunReport run_command(const Scenario& sc, const std::string& command, const RunOptions& opts);

/// 0 without unexpected failures; failed hypotheses map to 3.
int exit_code(const RunReport& report);
int exit_code(const Error& e);

}  // namespace parevo
