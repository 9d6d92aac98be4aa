#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace parevo::selftest {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // one line per sub-check
  double seconds = 0.0;
};

struct Options {
  std::string scenario_dir;  // bundled scenarios for the contraction suite
  std::uint64_t seed = 1;
  std::ostream* log = nullptr;  // progress, optional
};

int criterion_count();
const char* criterion_name(int id);

/// Runs one criterion (1-based). Library errors are caught and reported as failures.
CriterionResult run_criterion(int id, const Options& opts);
std::vector<CriterionResult> run_all(const Options& opts, const std::vector<int>& ids = {});

/// "PASS  1 oracle-reproduction (3.2 s): ..." lines.
void print(std::ostream& os, const CriterionResult& r, bool verbose = true);

}  // namespace parevo::selftest
