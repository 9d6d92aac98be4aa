// One pass/fail line per acceptance criterion; exits nonzero if any fails.
// Usage: acceptance [criterion ...]
#include "acceptance.hpp"

#include <cstdlib>
#include <iostream>
#include <vector>

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  parevo::selftest::Options opts;
  opts.scenario_dir = PAREVO_SCENARIO_DIR;
  const auto results = parevo::selftest::run_all(opts, ids);
  bool ok = true;
  for (const auto& r : results) {
    parevo::selftest::print(std::cout, r, true);
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}
