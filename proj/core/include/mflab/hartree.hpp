#pragma once

// Lattice Hartree equation  i d/dt phi = -Delta_h phi + (V * |phi|^2) phi,
// integrated with Strang splitting.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "mflab/lattice.hpp"

namespace mflab {

/// One Strang step: half kinetic, full nonlinear phase, half kinetic.
/// A negative dt steps backwards in time.
class HartreePropagator {
 public:
  HartreePropagator(SampledPotential potential, double dt);

  double dt() const noexcept { return dt_; }
  const SampledPotential& potential() const noexcept { return potential_; }
  void step(FieldVector& phi) const;

 private:
  SampledPotential potential_;
  double dt_;
  SpectralTransform fft_;
  std::vector<complex> half_kinetic_;
  std::vector<complex> potential_hat_;
};

class HartreeTrajectory {
 public:
  HartreeTrajectory(double dt, std::size_t stride, std::vector<double> times,
                    std::vector<FieldVector> states);

  double dt() const noexcept { return dt_; }
  std::size_t stride() const noexcept { return stride_; }
  /// Time between stored states, dt * stride.
  double spacing() const noexcept { return dt_ * static_cast<double>(stride_); }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<FieldVector>& states() const noexcept { return states_; }
  std::size_t size() const noexcept { return states_.size(); }
  double horizon() const noexcept { return times_.back(); }
  const Grid& grid() const { return states_.front().grid(); }

  /// True when [s, t] (either order) lies inside the stored time range.
  bool covers(double s, double t) const;
  /// Stored index closest to t; throws ParameterError outside the range.
  std::size_t nearest_index(double t) const;
  const FieldVector& nearest(double t) const { return states_[nearest_index(t)]; }
  /// The stored state at exactly t (up to rounding); ParameterError otherwise.
  const FieldVector& at(double t) const;

 private:
  double dt_;
  std::size_t stride_;
  std::vector<double> times_;
  std::vector<FieldVector> states_;
};

/// Evolves to T in steps of dt; T must be an integer multiple of dt.
/// Every `stride`-th state is stored (the final state always is).
HartreeTrajectory evolve_hartree(const FieldVector& phi0, const SampledPotential& potential,
                                 double dt, double T, std::size_t stride = 1);

/// (1/2) <phi, -Delta_h phi> + (1/4) h^d sum_x (V * |phi|^2)(x) |phi(x)|^2.
double energy(const FieldVector& phi, const SampledPotential& potential);

/// (sum_k dt ||phi_k||_inf^2)^{1/2}, left endpoint over the stored states.
double strichartz_norm(const HartreeTrajectory& trajectory);

/// max_x (h^d sum_y V(x - y)^2 |phi(y)|^2)^{1/2}.
double sup_potential_slice(const SampledPotential& potential, const FieldVector& phi);

/// Columns time, mass, energy, h1_norm, linf_norm.
void write_trajectory_csv(std::ostream& out, const HartreeTrajectory& trajectory,
                          const SampledPotential& potential);

}  // namespace mflab
