#pragma once

// Independent reference implementations for the tests. Everything here is
// deliberately naive: dense matrices, explicit tensors, direct sums.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mflab/fock.hpp"
#include "mflab/lattice.hpp"

namespace mflab::oracle {

using Rng = std::mt19937_64;

Eigen::VectorXcd random_vector(Rng& rng, int size);
Eigen::MatrixXcd random_matrix(Rng& rng, int rows, int cols);
Eigen::MatrixXcd random_hermitian(Rng& rng, int size);
/// Normalized state with Gaussian amplitudes on sectors 0..max_sector.
FockState random_state(Rng& rng, BasisPtr basis, int max_sector);
/// Normalized state supported on sector n only.
FockState random_sector_state(Rng& rng, BasisPtr basis, int n);
FieldVector random_field(Rng& rng, const Grid& grid);

/// Direct O(M^2) convolution h^d sum_y V(x - y) rho(y).
std::vector<double> direct_convolution(const SampledPotential& V, const std::vector<double>& rho);

/// exp(-i A tau) v via a dense Hermitian eigendecomposition.
Eigen::VectorXcd dense_expm(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& v, double tau);

/// Sum of singular values.
double svd_trace_norm(const Eigen::MatrixXcd& A);

/// Classical RK4 for the Hartree equation with dense Laplacian and direct convolution.
FieldVector rk4_hartree(const FieldVector& phi0, const SampledPotential& V, double dt, double T);

/// First-quantized picture of sector N: vectors indexed by (i_1, ..., i_N) in
/// base M, slot 1 most significant.
class SymmetricTensor {
 public:
  SymmetricTensor(int modes, int N);

  int modes() const { return modes_; }
  int particles() const { return N_; }
  long dimension() const { return dimension_; }

  /// Sector-N amplitudes of psi as a symmetric tensor.
  Eigen::VectorXcd embed(const FockState& psi) const;
  /// Back to occupation amplitudes in the given basis (sector N only).
  FockState extract(const Eigen::VectorXcd& tensor, BasisPtr basis) const;

  /// sum_k A acting on slot k.
  Eigen::VectorXcd one_body(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& tensor) const;
  /// sum_{k<l} W(i_k, i_l) applied diagonally.
  Eigen::VectorXcd pair_diagonal(const Eigen::MatrixXd& W, const Eigen::VectorXcd& tensor) const;
  /// Gamma with Gamma_xy = sum_rest T[x, rest] conj(T[y, rest]).
  Eigen::MatrixXcd partial_trace(const Eigen::VectorXcd& tensor) const;

  /// Dense first-quantized H_N = sum_k (-Delta)_k + (1/N) sum_{k<l} V(x_k - x_l),
  /// restricted to the symmetric subspace and returned in the occupation basis
  /// of sector N of `basis`.
  Eigen::MatrixXcd hamiltonian_in_sector(const SampledPotential& V, BasisPtr basis) const;

 private:
  std::vector<int> digits(long index) const;

  int modes_;
  int N_;
  long dimension_;
};

}  // namespace mflab::oracle
