// Acceptance gate: runs every criterion and exits nonzero when one fails.
#include <iostream>

#include "masim/acceptance.hpp"

int main() {
  auto results = masim::run_acceptance(std::cout);
  int fails = 0;
  for (const auto& r : results)
    if (!r.pass) ++fails;
  if (fails) {
    std::cout << fails << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all " << results.size() << " acceptance criteria passed\n";
  return 0;
}
