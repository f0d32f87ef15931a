#pragma once

// Sectioned key-value run configuration (INI syntax). Every key has a default;
// unknown sections or keys are rejected so that typos never pass silently.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mflab/experiments.hpp"

namespace mflab::cli {

struct HartreeRun {
  double dt = 1e-3;
  double T = 1.0;
  std::size_t stride = 1;
};

struct NbodyRun {
  int N = 4;
  std::vector<double> t_list;
};

struct RunConfig {
  ExperimentSetup setup;
  HartreeRun hartree;
  NbodyRun nbody;
  RateConfig rate;
  FluctuationConfig fluctuation;
  bool identity_check = false;
  int identity_cutoff = 22;
  bool deterministic = true;
  std::uint64_t seed = 1;
  /// "section.key = value" for every key, in schema order, without run.threads.
  std::string echo;
};

struct Overrides {
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

/// Reads and validates a config file. Throws ConfigError naming the path or key.
RunConfig load_config(const std::string& path, const Overrides& overrides = {});
/// The built-in defaults, as if an empty file had been read.
RunConfig default_config(const Overrides& overrides = {});

/// The documented schema: section.key -> default value text.
const std::vector<std::pair<std::string, std::string>>& config_schema();

std::vector<double> parse_real_list(const std::string& key, const std::string& text);
std::vector<int> parse_int_list(const std::string& key, const std::string& text);
/// "lambda:gamma, lambda:gamma, ..."
std::vector<PowerLawTerm> parse_terms(const std::string& key, const std::string& text);

}  // namespace mflab::cli
