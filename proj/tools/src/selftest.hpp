#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mflab::cli {

struct SelfCheck {
  std::string group;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Quick invariant suite over every module; value <= tolerance passes.
std::vector<SelfCheck> run_selftest(std::uint64_t seed);

}  // namespace mflab::cli
