#pragma once

// Coherent states, Weyl operators, the N-particle product state and the
// displaced-product sector norms.

#include <vector>

#include <Eigen/Dense>

#include "mflab/fock.hpp"
#include "mflab/propagate.hpp"

namespace mflab {

/// Smallest cutoff satisfying the tail rule for a displacement with ||f||^2 = norm_squared.
int tail_rule_cutoff(double norm_squared);
/// Throws TruncationError naming the required cutoff when `cutoff` is too small.
void check_tail_rule(double norm_squared, int cutoff);

/// Amplitude exp(-||f||^2/2) prod_i f_i^{n_i} / sqrt(n_i!) at every basis state.
FockState coherent_state(const Eigen::VectorXcd& f, BasisPtr basis);

/// W(f) psi = exp(a*(f) - a(f)) psi by Krylov propagation of i(a*(f) - a(f)).
/// The leakage meter receives a bound on the mass lost above the cutoff.
FockState apply_weyl(const Eigen::VectorXcd& f, const FockState& psi,
                     const KrylovOptions& options = {1e-12}, LeakageMeter* leakage = nullptr);

/// (a*(c))^N / sqrt(N!) Omega for mode coefficients c.
FockState product_state(const Eigen::VectorXcd& c, int N, BasisPtr basis);
FockState product_state(const FieldVector& phi, int N, BasisPtr basis);

/// log d_N = (1/2) log N! - (N/2) log N + N/2.
double log_d_N(double N);
/// d_N = sqrt(N!) / (N^{N/2} e^{-N/2}).
double d_N(double N);

/// Cutoff used for the single-mode reduction; the displaced number state
/// W*(sqrt(N)) |N> has support up to about 4N.
int single_mode_cutoff(int N);

/// Amplitudes chi_m = <m| W*(sqrt(N)) |N> in a single mode, m = 0..single_mode_cutoff(N).
/// Real, with chi_0 = 1/d_N > 0.
std::vector<double> displaced_number_state(int N);

/// ||P_m W*(sqrt(N) phi) (a*(phi))^N / sqrt(N!) Omega|| for m = 0..single_mode_cutoff(N).
std::vector<double> sector_norms_of_displaced_product(int N);

/// d_N ||(N + 1)^{-1/2} W*(sqrt(N) phi) (a*(phi))^N / sqrt(N!) Omega||.
double displaced_product_inverse_number_norm(int N);

/// W*(sqrt(N) c) (a*(c))^N / sqrt(N!) Omega embedded in a multi-mode basis,
/// for normalized mode coefficients c. Components above the cutoff are dropped.
FockState displaced_product_state(const Eigen::VectorXcd& c, int N, BasisPtr basis);

}  // namespace mflab
