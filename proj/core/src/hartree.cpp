#include "mflab/hartree.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mflab/csv.hpp"
#include "mflab/error.hpp"

namespace mflab {

HartreePropagator::HartreePropagator(SampledPotential potential, double dt)
    : potential_(std::move(potential)), dt_(dt), fft_(potential_.grid()) {
  if (!std::isfinite(dt) || dt == 0.0) throw ParameterError("Hartree step must be finite and nonzero");
  const Grid& grid = potential_.grid();
  const auto symbol = laplacian_symbol(grid);
  half_kinetic_.resize(symbol.size());
  for (std::size_t q = 0; q < symbol.size(); ++q) {
    half_kinetic_[q] = std::polar(1.0, -0.5 * dt * symbol[q]);
  }
  std::vector<complex> v(grid.site_count());
  for (std::size_t r = 0; r < v.size(); ++r) v[r] = potential_[r];
  potential_hat_.resize(v.size());
  fft_.forward(v, potential_hat_);
}

void HartreePropagator::step(FieldVector& phi) const {
  const std::size_t m = phi.grid().site_count();
  const double cell = phi.grid().cell_volume();
  auto values = phi.values();
  std::vector<complex> spectrum(m), density(m), density_hat(m);

  fft_.forward(values, spectrum);
  for (std::size_t q = 0; q < m; ++q) spectrum[q] *= half_kinetic_[q];
  fft_.inverse(spectrum, values);

  for (std::size_t x = 0; x < m; ++x) density[x] = std::norm(values[x]);
  fft_.forward(density, density_hat);
  for (std::size_t q = 0; q < m; ++q) density_hat[q] *= potential_hat_[q];
  fft_.inverse(density_hat, density);
  for (std::size_t x = 0; x < m; ++x) {
    values[x] *= std::polar(1.0, -dt_ * cell * density[x].real());
  }

  fft_.forward(values, spectrum);
  for (std::size_t q = 0; q < m; ++q) spectrum[q] *= half_kinetic_[q];
  fft_.inverse(spectrum, values);
}

HartreeTrajectory::HartreeTrajectory(double dt, std::size_t stride, std::vector<double> times,
                                     std::vector<FieldVector> states)
    : dt_(dt), stride_(stride), times_(std::move(times)), states_(std::move(states)) {
  if (times_.empty() || times_.size() != states_.size()) {
    throw ShapeError("trajectory needs one state per stored time");
  }
}

bool HartreeTrajectory::covers(double s, double t) const {
  const double lo = std::min(s, t);
  const double hi = std::max(s, t);
  const double slack = 1e-9 * spacing();
  return lo >= times_.front() - slack && hi <= times_.back() + slack;
}

std::size_t HartreeTrajectory::nearest_index(double t) const {
  if (!covers(t, t)) {
    throw ParameterError("time " + format_double(t) + " outside the Hartree trajectory [" +
                         format_double(times_.front()) + ", " + format_double(times_.back()) + "]");
  }
  const double k = std::round((t - times_.front()) / spacing());
  return std::min(static_cast<std::size_t>(std::max(k, 0.0)), times_.size() - 1);
}

const FieldVector& HartreeTrajectory::at(double t) const {
  const std::size_t k = nearest_index(t);
  if (std::abs(times_[k] - t) > 1e-6 * spacing()) {
    throw ParameterError("no Hartree state stored at t = " + format_double(t) +
                         "; the generator step must be an even multiple of the Hartree step");
  }
  return states_[k];
}

HartreeTrajectory evolve_hartree(const FieldVector& phi0, const SampledPotential& potential,
                                 double dt, double T, std::size_t stride) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("Hartree dt must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw ParameterError("Hartree horizon must be non-negative");
  if (stride < 1) throw ParameterError("trajectory stride must be at least 1");
  if (!(phi0.grid() == potential.grid())) throw ShapeError("field and potential grids differ");
  if (!phi0.is_normalized(1e-12)) throw ParameterError("initial Hartree state must be normalized");
  const double ratio = T / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-6) {
    throw ParameterError("Hartree horizon " + format_double(T) + " is not a multiple of dt " +
                         format_double(dt));
  }
  if (steps % stride != 0) {
    throw ParameterError("trajectory stride must divide the number of Hartree steps");
  }

  HartreePropagator propagator(potential, dt);
  std::vector<double> times{0.0};
  std::vector<FieldVector> states{phi0};
  FieldVector phi = phi0;
  for (std::size_t k = 1; k <= steps; ++k) {
    propagator.step(phi);
    if (!phi.is_finite()) {
      throw DivergenceError("Hartree state became non-finite at step " + std::to_string(k));
    }
    if (k % stride == 0) {
      times.push_back(static_cast<double>(k) * dt);
      states.push_back(phi);
    }
  }
  return HartreeTrajectory(dt, stride, std::move(times), std::move(states));
}

double energy(const FieldVector& phi, const SampledPotential& potential) {
  const std::size_t m = phi.grid().site_count();
  std::vector<double> density(m);
  for (std::size_t x = 0; x < m; ++x) density[x] = std::norm(phi[x]);
  const auto mean_field = convolve_density(potential, density);
  double interaction = 0.0;
  for (std::size_t x = 0; x < m; ++x) interaction += mean_field[x] * density[x];
  return 0.5 * kinetic_quadratic_form(phi) + 0.25 * phi.grid().cell_volume() * interaction;
}

double strichartz_norm(const HartreeTrajectory& trajectory) {
  const auto& times = trajectory.times();
  const auto& states = trajectory.states();
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    const double linf = norms(states[k]).linf;
    s += (times[k + 1] - times[k]) * linf * linf;
  }
  return std::sqrt(s);
}

double sup_potential_slice(const SampledPotential& potential, const FieldVector& phi) {
  if (!(phi.grid() == potential.grid())) throw ShapeError("field and potential grids differ");
  const std::size_t m = phi.grid().site_count();
  std::vector<double> density(m);
  for (std::size_t y = 0; y < m; ++y) density[y] = std::norm(phi[y]);
  std::vector<double> squared(m);
  for (std::size_t r = 0; r < m; ++r) squared[r] = potential[r] * potential[r];
  const auto slice = convolve_density(SampledPotential(potential.grid(), std::move(squared)), density);
  double best = 0.0;
  for (double v : slice) best = std::max(best, v);
  return std::sqrt(best);
}

void write_trajectory_csv(std::ostream& out, const HartreeTrajectory& trajectory,
                          const SampledPotential& potential) {
  CsvWriter csv(out);
  csv.header({"time", "mass", "energy", "h1_norm", "linf_norm"});
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const auto& phi = trajectory.states()[k];
    const auto n = norms(phi);
    csv.row({format_double(trajectory.times()[k]), format_double(phi.mass()),
             format_double(energy(phi, potential)), format_double(n.h1), format_double(n.linf)});
  }
}

}  // namespace mflab
