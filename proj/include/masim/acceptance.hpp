#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "masim/common.hpp"

namespace masim {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Runs the full acceptance suite, printing one PASS/FAIL line per
/// criterion to `log` as it completes. Returns every result; the build is
/// accepted when all pass.
std::vector<CriterionResult> run_acceptance(std::ostream& log,
                                            uint64_t seed = 20240801,
                                            Exec exec = Exec::Parallel);

}  // namespace masim
