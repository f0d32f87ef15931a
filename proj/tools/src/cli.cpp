#include "mflab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <new>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "mflab/coherent.hpp"
#include "mflab/csv.hpp"
#include "mflab/error.hpp"
#include "mflab/experiments.hpp"
#include "mflab/hartree.hpp"
#include "mflab/observe.hpp"
#include "mflab/propagate.hpp"
#include "mflab/generators.hpp"
#include "mflab/version.hpp"
#include "selftest.hpp"

namespace mflab::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Invocation {
  std::string command;
  std::optional<std::string> config_path;
  std::string out_dir = "mflab-out";
  Overrides overrides;
};

json versions() {
  return {{"mflab", version()},
          {"eigen", eigen_version()},
          {"fftw", fftw_version()},
          {"compiler", __VERSION__}};
}

json echo_lines(const std::string& echo) {
  json lines = json::array();
  std::istringstream in(echo);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

json fit_json(const SlopeFit& fit) {
  return {{"slope", fit.degenerate ? json(nullptr) : json(fit.slope)},
          {"intercept", fit.degenerate ? json(nullptr) : json(fit.intercept)},
          {"r_squared", fit.degenerate ? json(nullptr) : json(fit.r_squared)},
          {"points", fit.points},
          {"degenerate", fit.degenerate}};
}

// JSON numbers cannot hold nan or inf.
json number(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

class Run {
 public:
  Run(const Invocation& inv, RunConfig config)
      : inv_(inv), config_(std::move(config)), start_(Clock::now()) {
    std::error_code ec;
    fs::create_directories(inv_.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + inv_.out_dir + ": " + ec.message());
  }

  const RunConfig& config() const { return config_; }

  std::ofstream open(const std::string& name) {
    const fs::path path = fs::path(inv_.out_dir) / name;
    std::ofstream file(path, std::ios::binary);
    if (!file) throw ConfigError("cannot write " + path.string());
    files_.push_back(path.string());
    return file;
  }

  json summary() const {
    return {{"command", inv_.command},
            {"versions", versions()},
            {"config", echo_lines(config_.echo)},
            {"threads", config_.setup.threads}};
  }

  void finish(json summary, std::ostream& out, const std::string& line) {
    summary["runtime_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
    auto file = open("summary.json");
    file << summary.dump(2) << "\n";
    out << inv_.command << ": " << line << " [" << inv_.out_dir << "]\n";
  }

 private:
  const Invocation& inv_;
  RunConfig config_;
  Clock::time_point start_;
  std::vector<std::string> files_;
};

int cmd_hartree(Run& run, std::ostream& out) {
  const auto& c = run.config();
  const auto V = sample_potential(c.setup.potential, c.setup.grid);
  const auto phi0 = make_initial_state(c.setup.grid, c.setup.initial);
  const auto traj = evolve_hartree(phi0, V, c.hartree.dt, c.hartree.T, c.hartree.stride);
  {
    auto file = run.open("trajectory.csv");
    CsvWriter(file).comment(c.echo);
    write_trajectory_csv(file, traj, V);
  }
  const double e0 = energy(phi0, V);
  const double h10 = norms(phi0).h1;
  double mass = 0.0, drift = 0.0, h1 = 0.0;
  for (const auto& phi : traj.states()) {
    mass = std::max(mass, std::abs(phi.mass() - 1.0));
    drift = std::max(drift, std::abs(energy(phi, V) - e0) / (1.0 + std::abs(e0)));
    h1 = std::max(h1, norms(phi).h1);
  }
  json s = run.summary();
  s["steps"] = static_cast<long>(std::llround(c.hartree.T / c.hartree.dt));
  s["stored_states"] = traj.size();
  s["max_mass_defect"] = mass;
  s["max_relative_energy_drift"] = drift;
  s["max_h1_ratio"] = h1 / h10;
  s["strichartz_norm"] = strichartz_norm(traj);
  s["final_sup_potential_slice"] = sup_potential_slice(V, traj.states().back());
  std::ostringstream line;
  line << "T=" << format_double(c.hartree.T) << " mass defect " << format_double(mass)
       << ", energy drift " << format_double(drift);
  run.finish(std::move(s), out, line.str());
  return kExitOk;
}

int cmd_nbody(Run& run, std::ostream& out) {
  const auto& c = run.config();
  const auto& setup = c.setup;
  std::vector<double> times = c.nbody.t_list;
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0) {
    throw ConfigError("nbody.t_list must be non-negative and ascending");
  }
  const auto V = sample_potential(setup.potential, setup.grid);
  const auto phi0 = make_initial_state(setup.grid, setup.initial);
  const auto traj = evolve_hartree(phi0, V, setup.hartree_dt, times.back());
  const int modes = static_cast<int>(setup.grid.site_count());
  auto basis = OccupationBasis::create(modes, c.nbody.N, setup.max_dimension);
  const auto H = assemble_hamiltonian(c.nbody.N, V, basis);
  FockState psi = product_state(phi0.modes(), c.nbody.N, basis);
  const double e0 = psi.dot(H.apply(psi)).real();

  auto file = run.open("nbody.csv");
  CsvWriter csv(file);
  csv.comment(c.echo);
  csv.header({"t", "D", "norm_defect", "energy_drift", "sector_defect"});
  double previous = 0.0, worst = 0.0;
  json points = json::array();
  for (double t : times) {
    psi = expm_apply(H, psi, t - previous, setup.krylov);
    previous = t;
    const double D = trace_distance(reduced_density(psi),
                                    DensityMatrix::pure(traj.at(t).modes()));
    const double norm_defect = std::abs(psi.norm() - 1.0);
    const double drift = std::abs(psi.dot(H.apply(psi)).real() - e0);
    const double defect = (psi.amplitudes() - project_sector(c.nbody.N, psi).amplitudes()).norm();
    csv.row({format_double(t), format_double(D), format_double(norm_defect), format_double(drift),
             format_double(defect)});
    worst = std::max(worst, D);
    points.push_back({{"t", t}, {"D", D}});
  }
  json s = run.summary();
  s["N"] = c.nbody.N;
  s["basis_dim"] = basis->dimension();
  s["points"] = points;
  std::ostringstream line;
  line << "N=" << c.nbody.N << ", max D " << format_double(worst);
  run.finish(std::move(s), out, line.str());
  return kExitOk;
}

json rate_summary(Run& run, const RateReport& report) {
  json s = run.summary();
  json slopes = json::array();
  for (std::size_t i = 0; i < report.t_list.size(); ++i) {
    json fit = fit_json(report.fits[i]);
    fit["t"] = report.t_list[i];
    slopes.push_back(std::move(fit));
  }
  s["N_list"] = report.N_list;
  s["t_list"] = report.t_list;
  s["slopes"] = std::move(slopes);
  json timing = json::array();
  for (const auto& p : report.points) {
    timing.push_back({{"N", p.N}, {"t", p.t}, {"wall_seconds", p.wall_seconds}});
  }
  s["timing"] = std::move(timing);
  return s;
}

std::string slope_line(const RateReport& report) {
  std::ostringstream line;
  for (std::size_t i = 0; i < report.fits.size(); ++i) {
    if (i) line << ", ";
    line << "t=" << format_double(report.t_list[i]) << " slope ";
    if (report.fits[i].degenerate) {
      line << "degenerate";
    } else {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3f (R2 %.3f)", report.fits[i].slope,
                    report.fits[i].r_squared);
      line << buf;
    }
  }
  return line.str();
}

int cmd_rate(Run& run, std::ostream& out, bool coherent) {
  const auto& c = run.config();
  const RateReport report = coherent ? coherent_rate_scan(c.rate) : rate_scan(c.rate);
  {
    auto file = run.open(coherent ? "coherent_rate.csv" : "rate.csv");
    write_rate_csv(file, report, c.echo, c.deterministic);
  }
  json s = rate_summary(run, report);
  if (!coherent && c.identity_check) {
    ProofIdentityConfig ic;
    ic.setup = c.setup;
    ic.N = c.rate.N_list.front();
    ic.t = *std::min_element(c.rate.t_list.begin(), c.rate.t_list.end());
    ic.cutoff = c.identity_cutoff;
    ic.dt = 2.0 * c.setup.hartree_dt;
    ic.seed = c.seed;
    const auto identity = proof_identity_check(ic);
    json rows = json::array();
    for (const auto& r : identity.rows) {
      rows.push_back({{"direct", r.direct.real()},
                      {"e1", {r.e1.real(), r.e1.imag()}},
                      {"e2", {r.e2.real(), r.e2.imag()}},
                      {"operator_norm", r.operator_norm},
                      {"residual", r.residual},
                      {"pass", r.residual <= 1e-6 * r.operator_norm}});
    }
    s["identity_check"] = {{"N", identity.N}, {"t", identity.t}, {"rows", rows},
                           {"leakage", identity.leakage}};
  }
  run.finish(std::move(s), out, slope_line(report));
  return kExitOk;
}

int cmd_fluctuation(Run& run, std::ostream& out) {
  const auto& c = run.config();
  const FluctuationReport report = fluctuation_suite(c.fluctuation);
  {
    auto file = run.open("fluctuation.csv");
    write_fluctuation_csv(file, report, c.echo);
  }
  json s = run.summary();
  json envelopes = json::array();
  for (const auto& m : report.moments) {
    json fit = fit_json(m.envelope);
    fit["dynamics"] = m.dynamics;
    fit["j"] = m.j;
    fit["max_moment"] = number(*std::max_element(m.moment.begin(), m.moment.end()));
    envelopes.push_back(std::move(fit));
  }
  s["envelopes"] = std::move(envelopes);
  const double odd = report.odd_mass.empty()
                         ? 0.0
                         : *std::max_element(report.odd_mass.begin(), report.odd_mass.end());
  s["max_odd_mass"] = odd;
  s["l3_fit"] = fit_json(report.l3_norms.fit);
  s["l3_constants"] = report.l3_constants;
  s["field_difference_fit"] = fit_json(report.field_difference.fit);
  json trunc = json::array();
  for (const auto& p : report.truncation) {
    trunc.push_back({{"M", p.truncation}, {"difference", p.difference}});
  }
  s["truncation"] = std::move(trunc);
  s["truncation_monotone"] = report.truncation_monotone;
  s["max_leakage"] = report.max_leakage;
  std::ostringstream line;
  line << "odd mass " << format_double(odd) << ", L3 slope "
       << format_double(report.l3_norms.fit.slope) << ", field-difference slope "
       << format_double(report.field_difference.fit.slope);
  run.finish(std::move(s), out, line.str());
  return kExitOk;
}

int cmd_selftest(Run& run, std::ostream& out) {
  const auto checks = run_selftest(run.config().seed);
  std::map<std::string, bool> groups;
  std::vector<std::string> order;
  {
    auto file = run.open("selftest.csv");
    CsvWriter csv(file);
    csv.comment(run.config().echo);
    csv.header({"group", "check", "value", "tolerance", "status"});
    for (const auto& c : checks) {
      csv.row({c.group, c.name, format_double(c.value), format_double(c.tolerance),
               c.pass ? "PASS" : "FAIL"});
      if (!groups.count(c.group)) order.push_back(c.group);
      auto [it, inserted] = groups.emplace(c.group, true);
      it->second = it->second && c.pass;
    }
  }
  int failed = 0;
  json s = run.summary();
  json results = json::object();
  for (const auto& g : order) {
    out << (groups[g] ? "PASS " : "FAIL ") << g << "\n";
    results[g] = groups[g];
    if (!groups[g]) ++failed;
  }
  for (const auto& c : checks) {
    if (!c.pass) {
      out << "  failed: " << c.group << " / " << c.name << ": " << format_double(c.value)
          << " > " << format_double(c.tolerance) << "\n";
    }
  }
  s["groups"] = std::move(results);
  s["checks"] = checks.size();
  std::ostringstream line;
  line << order.size() - failed << "/" << order.size() << " invariant groups passed";
  run.finish(std::move(s), out, line.str());
  return failed ? kExitNumerical : kExitOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::parameter:
    case ErrorKind::shape:
      return kExitConfig;
    case ErrorKind::capacity:
      return kExitCapacity;
    case ErrorKind::convergence:
    case ErrorKind::truncation:
    case ErrorKind::divergence:
    case ErrorKind::undefined_density:
      return kExitNumerical;
  }
  return kExitFailure;
}

int dispatch(const Invocation& inv, std::ostream& out) {
  if (!inv.config_path && inv.command != "selftest") {
    throw ConfigError("--config PATH is required for '" + inv.command + "'");
  }
  RunConfig config = inv.config_path ? load_config(*inv.config_path, inv.overrides)
                                     : default_config(inv.overrides);
  Run run(inv, std::move(config));
  if (inv.command == "hartree") return cmd_hartree(run, out);
  if (inv.command == "nbody") return cmd_nbody(run, out);
  if (inv.command == "rate") return cmd_rate(run, out, false);
  if (inv.command == "coherent-rate") return cmd_rate(run, out, true);
  if (inv.command == "fluctuation") return cmd_fluctuation(run, out);
  return cmd_selftest(run, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mflab: mean-field dynamics of bosons on a periodic lattice"};
  app.name("mflab");
  app.require_subcommand(1, 1);

  Invocation inv;
  std::string config_path;
  int threads = 0;
  std::uint64_t seed = 0;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"hartree", "evolve the Hartree equation and report conservation diagnostics"},
      {"nbody", "propagate one product state under H_N and trace its distance to Hartree"},
      {"rate", "trace-distance scan over N with a log-log slope fit"},
      {"coherent-rate", "the same scan starting from coherent states"},
      {"fluctuation", "fluctuation-dynamics probes: moments, parity, L3, U vs U~, truncation"},
      {"selftest", "quick invariant suite over every module"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "configuration file");
    sub->add_option("--out", inv.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed");
    sub->callback([&inv, name = name] { inv.command = name; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mflab: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--config")) inv.config_path = config_path;
    if (sub->count("--threads")) inv.overrides.threads = threads;
    if (sub->count("--seed")) inv.overrides.seed = seed;
  }

  try {
    return dispatch(inv, out);
  } catch (const Error& e) {
    err << "mflab " << inv.command << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    err << "mflab " << inv.command << ": out of memory\n";
    return kExitCapacity;
  } catch (const std::exception& e) {
    err << "mflab " << inv.command << ": " << e.what() << "\n";
    return kExitFailure;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mflab::cli
