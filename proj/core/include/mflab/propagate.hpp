#pragma once

// Unitary propagation on the truncated Fock space: Krylov exponentials of
// Hermitian generators and the stepped fluctuation flows U, U~ and U^(M).

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "mflab/fock.hpp"
#include "mflab/generators.hpp"
#include "mflab/hartree.hpp"

namespace mflab {

struct KrylovOptions {
  double tolerance = 1e-10;
  int max_dimension = 60;
  long max_substeps = 1'000'000;
};

struct KrylovStats {
  long substeps = 0;
  long matvecs = 0;
  /// Sum of the a posteriori error estimates of the accepted substeps.
  double error_estimate = 0.0;
};

/// out = G in for a Hermitian G.
using LinearMap = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

/// exp(-i G tau) v by Lanczos with full reorthogonalization. Substeps are
/// chosen so that the accumulated error estimate stays below tolerance * |v|.
Eigen::VectorXcd expm_apply(const LinearMap& G, const Eigen::VectorXcd& v, double tau,
                            const KrylovOptions& options = {}, KrylovStats* stats = nullptr);
FockState expm_apply(const SparseGenerator& G, const FockState& psi, double tau,
                     const KrylovOptions& options = {}, KrylovStats* stats = nullptr);

enum class FluctuationKind { full, reduced, truncated };

struct FluctuationSpec {
  FluctuationKind kind = FluctuationKind::full;
  /// M in chi(N <= M); used only for the truncated kind.
  int truncation = 0;
};

struct FluctuationOptions {
  /// Generator step; must be an even multiple of the Hartree step.
  double dt = 1e-2;
  KrylovOptions krylov{};
  double leakage_budget = 1e-8;
};

/// Steps i d/dt U = L(t) U with the exponential midpoint rule. L(t) is
/// L2 + L3 + L4 (full), L2 + L4 (reduced) or L_N^(M) (truncated).
class FluctuationPropagator {
 public:
  FluctuationPropagator(std::shared_ptr<const HartreeTrajectory> trajectory,
                        SampledPotential potential, int N, BasisPtr basis, FluctuationSpec spec,
                        FluctuationOptions options);

  /// U(t; s) psi. For t < s this is U(s; t)^* psi, applied as the exact
  /// inverse of the forward steps.
  FockState evolve(const FockState& psi, double s, double t);
  /// Several states through the same steps; each generator is assembled once.
  /// The leakage bound added is the largest over the batch.
  std::vector<FockState> evolve(const std::vector<FockState>& states, double s, double t);

  /// Generator at time t (time-independent and time-dependent parts summed).
  SparseGenerator generator(double t) const;

  /// Squared accumulated bound on the truncation error, (sum_k dt ||B psi_k||)^2.
  double leakage() const noexcept { return leak_amplitude_ * leak_amplitude_; }
  void reset_leakage() noexcept { leak_amplitude_ = 0.0; }
  const KrylovStats& stats() const noexcept { return stats_; }
  int particles() const noexcept { return N_; }
  const FluctuationSpec& spec() const noexcept { return spec_; }
  const HartreeTrajectory& trajectory() const noexcept { return *trajectory_; }
  const SampledPotential& potential() const noexcept { return potential_; }
  const BasisPtr& basis() const noexcept { return basis_; }
  const FluctuationOptions& options() const noexcept { return options_; }

 private:
  SparseGenerator time_dependent_part(double t) const;

  std::shared_ptr<const HartreeTrajectory> trajectory_;
  SampledPotential potential_;
  int N_;
  BasisPtr basis_;
  FluctuationSpec spec_;
  FluctuationOptions options_;
  SparseGenerator static_part_;
  double leak_amplitude_ = 0.0;
  KrylovStats stats_;
};

FockState evolve_fluctuation(FluctuationSpec spec,
                             std::shared_ptr<const HartreeTrajectory> trajectory,
                             const SampledPotential& potential, int N, const FockState& psi0,
                             double s, double t, const FluctuationOptions& options);

struct IdentityCheckOptions {
  FluctuationOptions fluctuation{};
  /// Test state: random amplitudes on sectors 0..test_sectors.
  int test_sectors = 2;
  std::uint64_t seed = 1;
};

/// || W*(sqrt(N) phi_s) e^{iH(t-s)} (a_x - sqrt(N) phi_t(x)) e^{-iH(t-s)} W(sqrt(N) phi_s) psi
///    - U*(t; s) a_x U(t; s) psi ||  on a random test state psi.
double conjugated_annihilation_identity_check(std::shared_ptr<const HartreeTrajectory> trajectory,
                                              const SampledPotential& potential, int N, double s,
                                              double t, int mode, BasisPtr basis,
                                              const IdentityCheckOptions& options = {});

}  // namespace mflab
