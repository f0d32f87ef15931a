#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mflab/csv.hpp"
#include "mflab/error.hpp"

namespace mflab::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    throw ConfigError(key + ": expected a real number, got '" + text + "'");
  }
  return value;
}

long long parse_integer(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return value;
}

int parse_int(const std::string& key, const std::string& text) {
  const long long v = parse_integer(key, text);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(key + ": integer out of range");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string s = trim(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

using Values = std::map<std::string, std::string>;

RunConfig build(const Values& v, const Overrides& overrides) {
  const auto get = [&](const std::string& key) -> const std::string& { return v.at(key); };
  const auto real = [&](const std::string& key) { return parse_real(key, get(key)); };
  const auto integer = [&](const std::string& key) { return parse_int(key, get(key)); };

  RunConfig c;
  ExperimentSetup& s = c.setup;
  s.grid = Grid(integer("grid.d"), integer("grid.L"), real("grid.h"));

  s.potential.terms = parse_terms("potential.terms", get("potential.terms"));
  s.potential.offset = real("potential.offset");
  s.potential.validate(s.grid);

  s.initial.shape = parse_initial_shape(trim(get("initial.shape")));
  if (!trim(get("initial.center")).empty()) {
    s.initial.center = parse_real_list("initial.center", get("initial.center"));
  }
  s.initial.width = real("initial.width");
  if (!trim(get("initial.momentum")).empty()) {
    s.initial.momentum = parse_int_list("initial.momentum", get("initial.momentum"));
  }

  c.seed = static_cast<std::uint64_t>(parse_integer("run.seed", get("run.seed")));
  if (overrides.seed) c.seed = *overrides.seed;
  s.initial.seed = c.seed;
  s.threads = overrides.threads ? *overrides.threads : integer("run.threads");
  if (s.threads < 1) throw ConfigError("run.threads must be at least 1");

  s.hartree_dt = real("hartree.dt");
  c.hartree.dt = s.hartree_dt;
  c.hartree.T = real("hartree.T");
  const long long stride = parse_integer("hartree.stride", get("hartree.stride"));
  if (stride < 1) throw ConfigError("hartree.stride must be at least 1");
  c.hartree.stride = static_cast<std::size_t>(stride);

  s.krylov.tolerance = real("krylov.tolerance");
  s.krylov.max_dimension = integer("krylov.max_dimension");
  s.leakage_budget = real("budgets.leakage");
  const long long max_dim = parse_integer("fock.max_dimension", get("fock.max_dimension"));
  if (max_dim < 1) throw ConfigError("fock.max_dimension must be positive");
  s.max_dimension = static_cast<std::size_t>(max_dim);

  c.rate.setup = s;
  c.rate.N_list = parse_int_list("scan.N_list", get("scan.N_list"));
  c.rate.t_list = parse_real_list("scan.t_list", get("scan.t_list"));
  const std::string rule = trim(get("fock.N_cut_rule"));
  c.rate.coherent_cutoff = rule == "tail" ? 0 : parse_int("fock.N_cut_rule", rule);
  if (c.rate.coherent_cutoff < 0) throw ConfigError("fock.N_cut_rule must be 'tail' or >= 0");
  c.identity_check = parse_bool("scan.identity_check", get("scan.identity_check"));
  c.identity_cutoff = integer("scan.identity_cutoff");

  c.nbody.N = integer("nbody.N");
  c.nbody.t_list = parse_real_list("nbody.t_list", get("nbody.t_list"));

  FluctuationConfig& f = c.fluctuation;
  f.setup = s;
  f.N = integer("fluctuation.N");
  f.N_list = parse_int_list("fluctuation.N_list", get("fluctuation.N_list"));
  f.cutoff = integer("fluctuation.N_cut");
  f.dt = real("fluctuation.dt");
  f.t_list = parse_real_list("fluctuation.t_list", get("fluctuation.t_list"));
  f.moments = parse_int_list("fluctuation.moments", get("fluctuation.moments"));
  f.weight_power = integer("fluctuation.weight_power");
  f.probe_time = real("fluctuation.probe_time");
  f.seed = c.seed;

  c.deterministic = parse_bool("output.deterministic", get("output.deterministic"));

  std::ostringstream echo;
  echo << "mflab config\n";
  for (const auto& [key, fallback] : config_schema()) {
    if (key == "run.threads") continue;
    std::string value = v.at(key);
    if (key == "run.seed") value = std::to_string(c.seed);
    echo << key << " = " << value << "\n";
  }
  c.echo = echo.str();
  c.echo.pop_back();
  return c;
}

RunConfig build_checked(const Values& v, const Overrides& overrides) {
  try {
    return build(v, overrides);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    // Invalid values detected by the library (grid, potential, shapes).
    throw ConfigError(e.what());
  }
}

Values defaults() {
  Values v;
  for (const auto& [key, value] : config_schema()) v[key] = value;
  return v;
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& config_schema() {
  static const std::vector<std::pair<std::string, std::string>> schema{
      {"grid.d", "1"},
      {"grid.L", "6"},
      {"grid.h", "1"},
      {"potential.terms", "0.5:1"},
      {"potential.offset", "0"},
      {"initial.shape", "gaussian"},
      {"initial.center", ""},
      {"initial.width", "1"},
      {"initial.momentum", ""},
      {"hartree.dt", "0.001"},
      {"hartree.T", "1"},
      {"hartree.stride", "1"},
      {"krylov.tolerance", "1e-10"},
      {"krylov.max_dimension", "60"},
      {"scan.N_list", "2, 3, 4, 6, 8"},
      {"scan.t_list", "0.25, 0.5, 1"},
      {"scan.identity_check", "false"},
      {"scan.identity_cutoff", "22"},
      {"nbody.N", "4"},
      {"nbody.t_list", "0.25, 0.5, 1"},
      {"fock.N_cut_rule", "tail"},
      {"fock.max_dimension", "5000000"},
      {"fluctuation.N", "4"},
      {"fluctuation.N_list", "2, 4, 8, 16"},
      {"fluctuation.N_cut", "12"},
      {"fluctuation.dt", "0.01"},
      {"fluctuation.t_list", "0.25, 0.5, 0.75, 1, 1.25, 1.5, 1.75, 2"},
      {"fluctuation.moments", "1, 2"},
      {"fluctuation.weight_power", "0"},
      {"fluctuation.probe_time", "0.5"},
      {"budgets.leakage", "1e-8"},
      {"output.deterministic", "true"},
      {"run.seed", "1"},
      {"run.threads", "1"},
  };
  return schema;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_real(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_int(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::vector<PowerLawTerm> parse_terms(const std::string& key, const std::string& text) {
  std::vector<PowerLawTerm> terms;
  if (trim(text).empty()) return terms;
  for (const auto& item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError(key + ": term '" + item + "' is not of the form strength:exponent");
    }
    terms.push_back({parse_real(key, item.substr(0, colon)), parse_real(key, item.substr(colon + 1))});
  }
  return terms;
}

RunConfig default_config(const Overrides& overrides) {
  return build_checked(defaults(), overrides);
}

RunConfig load_config(const std::string& path, const Overrides& overrides) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError("config file not found: " + path);
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse " + path + ": " + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  Values values = defaults();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(path + ": key '" + section + "' outside of a section");
    }
    for (const auto& [name, node] : body) {
      const std::string key = section + "." + name;
      if (!values.count(key)) throw ConfigError(path + ": unknown key '" + key + "'");
      values[key] = node.data();
    }
  }
  return build_checked(values, overrides);
}

}  // namespace mflab::cli
