#include "mflab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "mflab/coherent.hpp"
#include "mflab/csv.hpp"
#include "mflab/error.hpp"
#include "mflab/generators.hpp"
#include "mflab/hartree.hpp"
#include "mflab/observe.hpp"

namespace mflab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs task(i) for i in [0, count) on up to `threads` workers. Exceptions are
// rethrown in index order after all workers finish.
template <class Task>
void parallel_for(std::size_t count, int threads, Task task) {
  std::vector<std::exception_ptr> errors(count);
  const auto run = [&](std::size_t i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::size_t steps_for(double t, double dt, const char* what) {
  const double ratio = t / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (t < 0.0 || std::abs(ratio - static_cast<double>(steps)) > 1e-6) {
    throw ParameterError(std::string(what) + " " + format_double(t) +
                         " is not a non-negative multiple of the step " + format_double(dt));
  }
  return steps;
}

struct Prepared {
  SampledPotential potential;
  FieldVector phi0;
  std::shared_ptr<const HartreeTrajectory> trajectory;
};

Prepared prepare(const ExperimentSetup& setup, double horizon) {
  auto potential = sample_potential(setup.potential, setup.grid);
  auto phi0 = make_initial_state(setup.grid, setup.initial);
  const std::size_t steps = steps_for(horizon, setup.hartree_dt, "time");
  auto trajectory = std::make_shared<const HartreeTrajectory>(
      evolve_hartree(phi0, potential, setup.hartree_dt, static_cast<double>(steps) * setup.hartree_dt));
  return {std::move(potential), std::move(phi0), std::move(trajectory)};
}

void validate_rate_config(const RateConfig& config) {
  if (config.N_list.empty()) throw ParameterError("scan.N_list is empty");
  if (config.t_list.empty()) throw ParameterError("scan.t_list is empty");
  for (std::size_t i = 0; i < config.N_list.size(); ++i) {
    if (config.N_list[i] < 1) throw ParameterError("particle numbers must be positive");
    if (i && config.N_list[i] <= config.N_list[i - 1]) {
      throw ParameterError("scan.N_list must be strictly ascending");
    }
  }
  for (double t : config.t_list) steps_for(t, config.setup.hartree_dt, "scan time");
}

RateReport run_rate_scan(const RateConfig& config, bool coherent) {
  const auto start = Clock::now();
  validate_rate_config(config);
  const auto& setup = config.setup;
  const double horizon = *std::max_element(config.t_list.begin(), config.t_list.end());
  const Prepared prep = prepare(setup, horizon);
  const Eigen::VectorXcd c0 = prep.phi0.modes();
  const int modes = static_cast<int>(setup.grid.site_count());

  std::vector<std::size_t> order(config.t_list.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return config.t_list[a] < config.t_list[b]; });

  std::vector<std::vector<RatePoint>> rows(config.N_list.size());
  parallel_for(config.N_list.size(), setup.threads, [&](std::size_t k) {
    const int N = config.N_list[k];
    try {
      auto clock = Clock::now();
      int cutoff = N;
      if (coherent) {
        cutoff = config.coherent_cutoff > 0 ? config.coherent_cutoff
                                            : tail_rule_cutoff(static_cast<double>(N));
      }
      auto basis = OccupationBasis::create(modes, cutoff, setup.max_dimension);
      FockState psi = coherent
                          ? coherent_state(std::sqrt(static_cast<double>(N)) * c0, basis)
                          : product_state(c0, N, basis);
      const double leakage = coherent ? std::max(0.0, 1.0 - psi.squared_norm()) : 0.0;
      if (leakage > setup.leakage_budget) {
        throw TruncationError("coherent initial state tail mass " + format_double(leakage) +
                              " exceeds the leakage budget");
      }
      const SparseGenerator hamiltonian = assemble_hamiltonian(N, prep.potential, basis);
      std::vector<RatePoint> points(config.t_list.size());
      double previous = 0.0;
      for (std::size_t idx : order) {
        const double t = config.t_list[idx];
        psi = expm_apply(hamiltonian, psi, t - previous, setup.krylov);
        previous = t;
        const DensityMatrix gamma = reduced_density(psi);
        const DensityMatrix rho = DensityMatrix::pure(prep.trajectory->at(t).modes());
        RatePoint p;
        p.N = N;
        p.t = t;
        p.D = trace_distance(gamma, rho);
        p.basis_dim = basis->dimension();
        p.leakage = leakage;
        if (!coherent) {
          p.sector_defect = (psi.amplitudes() - project_sector(N, psi).amplitudes()).norm();
        }
        p.wall_seconds = seconds_since(clock);
        clock = Clock::now();
        points[idx] = p;
      }
      rows[k] = std::move(points);
    } catch (const Error& e) {
      rethrow_with_context(e, "N=" + std::to_string(N) + ": ");
    }
  });

  RateReport report;
  report.kind = coherent ? "coherent-rate" : "rate";
  report.setup_echo = setup.describe();
  report.N_list = config.N_list;
  report.t_list = config.t_list;
  for (auto& r : rows) report.points.insert(report.points.end(), r.begin(), r.end());
  for (double t : config.t_list) {
    std::vector<double> xs, ys;
    for (const auto& p : report.points) {
      if (p.t == t) {
        xs.push_back(p.N);
        ys.push_back(p.D);
      }
    }
    report.fits.push_back(fit_loglog(xs, ys));
  }
  report.runtime_seconds = seconds_since(start);
  return report;
}

double shifted_moment(int j, const FockState& psi) {
  const auto norms = sector_norms(psi);
  double s = 0.0;
  for (std::size_t n = 0; n < norms.size(); ++n) s += std::pow(n + 1.0, j) * norms[n] * norms[n];
  return s;
}

FockState random_state(const BasisPtr& basis, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  FockState psi(basis);
  for (Eigen::Index i = 0; i < psi.amplitudes().size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    psi.amplitudes()[i] = complex(re, im);
  }
  return psi.normalized();
}

}  // namespace

std::string ExperimentSetup::describe() const {
  std::ostringstream out;
  out << "grid d=" << grid.dimension() << " L=" << grid.sites_per_axis()
      << " h=" << format_double(grid.spacing()) << "; potential " << potential.describe()
      << "; initial " << initial.describe() << "; hartree_dt=" << format_double(hartree_dt)
      << "; krylov_tol=" << format_double(krylov.tolerance)
      << " krylov_dim=" << krylov.max_dimension
      << "; leakage_budget=" << format_double(leakage_budget);
  return out.str();
}

SlopeFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ShapeError("fit needs equally many x and y values");
  SlopeFit fit;
  fit.points = static_cast<int>(x.size());
  if (x.size() < 2) return fit;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double residual = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    residual += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - residual / syy : 1.0;
  fit.degenerate = false;
  return fit;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ShapeError("fit needs equally many x and y values");
  SlopeFit degenerate;
  degenerate.points = static_cast<int>(x.size());
  if (x.size() < 3) return degenerate;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 1e-14) || !(x[i] > 0.0)) return degenerate;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_linear(lx, ly);
}

double RateReport::D(int N, double t) const {
  for (const auto& p : points) {
    if (p.N == N && p.t == t) return p.D;
  }
  throw ParameterError("no rate point for N=" + std::to_string(N) + ", t=" + format_double(t));
}

RateReport rate_scan(const RateConfig& config) { return run_rate_scan(config, false); }

RateReport coherent_rate_scan(const RateConfig& config) { return run_rate_scan(config, true); }

void write_rate_csv(std::ostream& out, const RateReport& report, const std::string& config_echo,
                    bool deterministic) {
  CsvWriter csv(out);
  csv.comment(config_echo);
  csv.header({"N", "t", "D", "basis_dim", "leakage", "wall_seconds"});
  for (const auto& p : report.points) {
    csv.row({std::to_string(p.N), format_double(p.t), format_double(p.D),
             std::to_string(p.basis_dim), format_double(p.leakage),
             format_double(deterministic ? 0.0 : p.wall_seconds)});
  }
}

ProofIdentityReport proof_identity_check(const ProofIdentityConfig& config) {
  const auto start = Clock::now();
  const auto& setup = config.setup;
  if (config.N < 1) throw ParameterError("identity check needs N >= 1");
  if (config.operators < 1) throw ParameterError("identity check needs at least one operator");
  steps_for(config.t, config.dt, "identity check time");
  const Prepared prep = prepare(setup, config.t);
  const int modes = static_cast<int>(setup.grid.site_count());
  const Eigen::VectorXcd c0 = prep.phi0.modes();
  const Eigen::VectorXcd ct = prep.trajectory->at(config.t).modes();

  std::vector<ModeOperator> operators;
  for (int k = 0; k < config.operators; ++k) {
    operators.push_back(ModeOperator::random_hermitian(modes, config.seed + k));
  }

  auto sector_basis = OccupationBasis::create(modes, config.N, setup.max_dimension);
  const SparseGenerator hamiltonian = assemble_hamiltonian(config.N, prep.potential, sector_basis);
  const FockState psi = expm_apply(hamiltonian, product_state(c0, config.N, sector_basis),
                                   config.t, setup.krylov);
  const DensityMatrix gamma = reduced_density(psi);

  auto basis = OccupationBasis::create(modes, config.cutoff, setup.max_dimension);
  FluctuationOptions options;
  options.dt = config.dt;
  options.krylov = setup.krylov;
  options.leakage_budget = setup.leakage_budget;
  FluctuationObservables observables(prep.trajectory, prep.potential, config.N, basis, options);
  const auto expectations = observables.evaluate(operators, config.t);

  ProofIdentityReport report;
  report.setup_echo = setup.describe();
  report.N = config.N;
  report.t = config.t;
  for (std::size_t k = 0; k < operators.size(); ++k) {
    ProofIdentityRow row;
    row.direct = trace_against(operators[k], gamma, ct);
    row.e1 = expectations[k].e1;
    row.e2 = expectations[k].e2;
    row.operator_norm = operators[k].operator_norm();
    row.residual = std::abs(row.direct - row.e1 - row.e2);
    report.rows.push_back(row);
  }
  report.leakage = observables.leakage();
  report.runtime_seconds = seconds_since(start);
  return report;
}

StepConvergenceReport step_convergence(const ExperimentSetup& setup, int N, double t, double dt,
                                       int levels) {
  if (levels < 3) throw ParameterError("step convergence needs at least three levels");
  if (N < 1) throw ParameterError("particle number must be positive");
  const auto potential = sample_potential(setup.potential, setup.grid);
  const auto phi0 = make_initial_state(setup.grid, setup.initial);
  const int modes = static_cast<int>(setup.grid.site_count());
  auto basis = OccupationBasis::create(modes, N, setup.max_dimension);
  const SparseGenerator hamiltonian = assemble_hamiltonian(N, potential, basis);
  const FockState psi = expm_apply(hamiltonian, product_state(phi0.modes(), N, basis), t,
                                   setup.krylov);
  const DensityMatrix gamma = reduced_density(psi);

  StepConvergenceReport report;
  double step = dt;
  for (int k = 0; k < levels; ++k, step *= 0.5) {
    const auto trajectory = evolve_hartree(phi0, potential, step, t, steps_for(t, step, "time"));
    report.dt.push_back(step);
    report.D.push_back(trace_distance(gamma, DensityMatrix::pure(trajectory.at(t).modes())));
  }
  for (int k = 0; k + 1 < levels; ++k) {
    report.differences.push_back(std::abs(report.D[k] - report.D[k + 1]));
  }
  for (int k = 0; k + 2 < levels; ++k) {
    report.ratios.push_back(report.differences[k] / report.differences[k + 1]);
  }
  return report;
}

FluctuationReport fluctuation_suite(const FluctuationConfig& config) {
  const auto start = Clock::now();
  const auto& setup = config.setup;
  if (config.t_list.empty()) throw ParameterError("fluctuation.t_list is empty");
  if (!std::is_sorted(config.t_list.begin(), config.t_list.end()) || config.t_list.front() <= 0.0) {
    throw ParameterError("fluctuation.t_list must be positive and ascending");
  }
  for (double t : config.t_list) steps_for(t, config.dt, "fluctuation time");
  steps_for(config.probe_time, config.dt, "probe time");
  if (config.N < 1) throw ParameterError("fluctuation.N must be positive");
  if (config.weight_power < 0) throw ParameterError("weight power must be non-negative");

  const double horizon = std::max(config.t_list.back(), config.probe_time);
  const Prepared prep = prepare(setup, horizon);
  const int modes = static_cast<int>(setup.grid.site_count());
  auto basis = OccupationBasis::create(modes, config.cutoff, setup.max_dimension);
  FluctuationOptions options;
  options.dt = config.dt;
  options.krylov = setup.krylov;
  options.leakage_budget = setup.leakage_budget;

  FluctuationReport report;
  report.setup_echo = setup.describe();
  const FockState vacuum = FockState::vacuum(basis);

  // Moments under U and U~, parity under U~.
  for (auto kind : {FluctuationKind::full, FluctuationKind::reduced}) {
    FluctuationPropagator propagator(prep.trajectory, prep.potential, config.N, basis, {kind, 0},
                                     options);
    std::vector<MomentSeries> series;
    for (int j : config.moments) {
      MomentSeries s;
      s.dynamics = kind == FluctuationKind::full ? "U" : "U_tilde";
      s.j = j;
      s.t.push_back(0.0);
      s.moment.push_back(number_moment(j, vacuum));
      s.shifted_moment.push_back(shifted_moment(j, vacuum));
      series.push_back(std::move(s));
    }
    FockState psi = vacuum;
    double previous = 0.0;
    for (double t : config.t_list) {
      psi = propagator.evolve(psi, previous, t);
      previous = t;
      for (auto& s : series) {
        s.t.push_back(t);
        s.moment.push_back(number_moment(s.j, psi));
        s.shifted_moment.push_back(shifted_moment(s.j, psi));
      }
      if (kind == FluctuationKind::reduced) {
        const auto parity = parity_norms(psi);
        report.parity_times.push_back(t);
        report.even_mass.push_back(parity.even * parity.even);
        report.odd_mass.push_back(parity.odd * parity.odd);
      }
    }
    for (auto& s : series) {
      std::vector<double> g, logs;
      for (std::size_t i = 0; i < s.t.size(); ++i) {
        g.push_back(kind == FluctuationKind::full ? std::pow(s.t[i], 1.5) : s.t[i]);
        logs.push_back(std::log(s.shifted_moment[i]));
      }
      s.envelope = fit_linear(g, logs);
      report.moments.push_back(std::move(s));
    }
    report.max_leakage = std::max(report.max_leakage, propagator.leakage());
  }

  // L3 scaling on a fixed random state.
  const FieldVector& phi_probe = prep.trajectory->at(config.probe_time);
  const double half = 0.5 * config.weight_power;
  const FockState test = random_state(basis, config.seed);
  const double linf = norms(phi_probe).linf;
  const double reference = apply_number_power(test, half + 1.5, 1.0).norm();
  for (int N : config.N_list) {
    const SparseGenerator l3 = assemble_L3(phi_probe, prep.potential, N, basis);
    const double value = apply_number_power(l3.apply(test), half, 1.0).norm();
    report.l3_norms.N.push_back(N);
    report.l3_norms.value.push_back(value);
    report.l3_constants.push_back(std::sqrt(static_cast<double>(N)) * value /
                                  ((linf + 1.0) * reference));
  }
  {
    std::vector<double> xs(report.l3_norms.N.begin(), report.l3_norms.N.end());
    report.l3_norms.fit = fit_loglog(xs, report.l3_norms.value);
  }

  // U-vs-U~ conjugated field on the vacuum.
  const Eigen::VectorXcd f = phi_probe.modes();
  std::vector<double> differences(config.N_list.size());
  std::vector<double> leaks(config.N_list.size());
  parallel_for(config.N_list.size(), setup.threads, [&](std::size_t k) {
    const int N = config.N_list[k];
    try {
      FockState conjugated[2] = {vacuum, vacuum};
      double leak = 0.0;
      int slot = 0;
      for (auto kind : {FluctuationKind::full, FluctuationKind::reduced}) {
        FluctuationPropagator propagator(prep.trajectory, prep.potential, N, basis, {kind, 0},
                                         options);
        LeakageMeter meter;
        FockState x = propagator.evolve(vacuum, 0.0, config.probe_time);
        x = apply_field(f, x, &meter);
        meter.check(options.leakage_budget, "field operator");
        conjugated[slot++] = propagator.evolve(x, config.probe_time, 0.0);
        leak = std::max(leak, propagator.leakage() + meter.mass());
      }
      differences[k] = apply_number_power(conjugated[0] - conjugated[1], half, 1.0).norm();
      leaks[k] = leak;
    } catch (const Error& e) {
      rethrow_with_context(e, "N=" + std::to_string(N) + ": ");
    }
  });
  report.field_difference.N = config.N_list;
  report.field_difference.value = differences;
  {
    std::vector<double> xs(config.N_list.begin(), config.N_list.end());
    report.field_difference.fit = fit_loglog(xs, differences);
  }
  for (double l : leaks) report.max_leakage = std::max(report.max_leakage, l);

  // U against U^(M) for M in {0, N_cut/4, N_cut}.
  const double t_last = config.t_list.back();
  FluctuationPropagator full(prep.trajectory, prep.potential, config.N, basis,
                             {FluctuationKind::full, 0}, options);
  const FockState reference_state = full.evolve(vacuum, 0.0, t_last);
  for (int m : {0, config.cutoff / 4, config.cutoff}) {
    FluctuationPropagator truncated(prep.trajectory, prep.potential, config.N, basis,
                                    {FluctuationKind::truncated, m}, options);
    const FockState psi = truncated.evolve(vacuum, 0.0, t_last);
    report.truncation.push_back({m, (reference_state - psi).norm()});
    report.max_leakage = std::max(report.max_leakage, truncated.leakage());
  }
  report.truncation_monotone = true;
  for (std::size_t i = 1; i < report.truncation.size(); ++i) {
    if (report.truncation[i].difference > report.truncation[i - 1].difference + 1e-12) {
      report.truncation_monotone = false;
    }
  }
  report.runtime_seconds = seconds_since(start);
  return report;
}

void write_fluctuation_csv(std::ostream& out, const FluctuationReport& report,
                           const std::string& config_echo) {
  CsvWriter csv(out);
  csv.comment(config_echo);
  csv.header({"quantity", "dynamics", "j", "N", "M", "t", "value"});
  const std::string none;
  for (const auto& s : report.moments) {
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      csv.row({"moment", s.dynamics, std::to_string(s.j), none, none, format_double(s.t[i]),
               format_double(s.moment[i])});
      csv.row({"shifted_moment", s.dynamics, std::to_string(s.j), none, none,
               format_double(s.t[i]), format_double(s.shifted_moment[i])});
    }
  }
  for (std::size_t i = 0; i < report.parity_times.size(); ++i) {
    csv.row({"odd_mass", "U_tilde", none, none, none, format_double(report.parity_times[i]),
             format_double(report.odd_mass[i])});
    csv.row({"even_mass", "U_tilde", none, none, none, format_double(report.parity_times[i]),
             format_double(report.even_mass[i])});
  }
  for (std::size_t i = 0; i < report.l3_norms.N.size(); ++i) {
    csv.row({"l3_norm", "L3", none, std::to_string(report.l3_norms.N[i]), none, none,
             format_double(report.l3_norms.value[i])});
    csv.row({"l3_constant", "L3", none, std::to_string(report.l3_norms.N[i]), none, none,
             format_double(report.l3_constants[i])});
  }
  for (std::size_t i = 0; i < report.field_difference.N.size(); ++i) {
    csv.row({"field_difference", "U-U_tilde", none, std::to_string(report.field_difference.N[i]),
             none, none, format_double(report.field_difference.value[i])});
  }
  for (const auto& p : report.truncation) {
    csv.row({"truncation_difference", "U-U^(M)", none, none, std::to_string(p.truncation), none,
             format_double(p.difference)});
  }
}

}  // namespace mflab
