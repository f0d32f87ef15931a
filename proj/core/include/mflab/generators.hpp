#pragma once

// Sparse operators on the truncated Fock space: the Fock Hamiltonian H_N, the
// fluctuation generators L2, L3, L4, the truncated generator L_N^(M), dGamma(J)
// and the Weyl generator. All coefficients are in mode variables
// c_i = h^{d/2} phi(x_i), where every lattice weight cancels.

#include <climits>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>

#include <Eigen/Sparse>

#include "mflab/fock.hpp"
#include "mflab/hartree.hpp"
#include "mflab/lattice.hpp"

namespace mflab {

struct GeneratorInfo {
  std::string label;
  double time = 0.0;
  int particles = 0;
  bool hermitian = true;
};

class SparseGenerator {
 public:
  using Matrix = Eigen::SparseMatrix<complex, Eigen::ColMajor, std::int64_t>;

  /// `overflow` maps basis states to the sectors cutoff+1 and cutoff+2
  /// (rows indexed by extended rank minus the basis dimension).
  SparseGenerator(BasisPtr basis, Matrix matrix, Matrix overflow, GeneratorInfo info);

  const OccupationBasis& basis() const noexcept { return *basis_; }
  const BasisPtr& basis_ptr() const noexcept { return basis_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  const Matrix& overflow() const noexcept { return overflow_; }
  const GeneratorInfo& info() const noexcept { return info_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t nonzeros() const noexcept { return static_cast<std::size_t>(matrix_.nonZeros()); }

  FockState apply(const FockState& psi) const;
  /// max |A - A^*| over all entries.
  double hermiticity_defect() const;
  /// Distinct (target sector - source sector) over the nonzero pattern.
  std::set<int> sector_shifts() const;
  /// Norm of the component pushed above the cutoff.
  double overflow_norm(const Eigen::VectorXcd& v) const;
  /// Largest absolute column sum, an upper bound on the operator norm.
  double one_norm() const;

  SparseGenerator plus(const SparseGenerator& other, std::string label) const;
  SparseGenerator scaled(complex factor) const;

  /// row,col,re,im with a header line.
  void write_coordinates(std::ostream& out) const;

 private:
  BasisPtr basis_;
  Matrix matrix_;
  Matrix overflow_;
  GeneratorInfo info_;
};

/// Building blocks of a generator, each a sum over mode indices.
struct GeneratorTerms {
  std::optional<Eigen::MatrixXcd> one_body;          // sum K_ij a*_i a_j
  std::optional<Eigen::MatrixXcd> pair_create;       // sum P_ij a*_i a*_j
  std::optional<Eigen::MatrixXcd> pair_annihilate;   // sum Q_ij a_i a_j
  std::optional<Eigen::MatrixXcd> cubic_create;      // sum A_xy a*_x a*_y a_x
  std::optional<Eigen::MatrixXcd> cubic_annihilate;  // sum B_xy a*_x a_y a_x
  /// chi(N <= cubic_cutoff) placed on the intermediate sector of both cubic terms.
  int cubic_cutoff = INT_MAX;
  std::optional<Eigen::MatrixXd> density_density;    // sum W_xy a*_x a*_y a_y a_x
  std::optional<Eigen::VectorXcd> linear_create;     // sum u_i a*_i
  std::optional<Eigen::VectorXcd> linear_annihilate; // sum v_i a_i
};

SparseGenerator assemble(const GeneratorTerms& terms, BasisPtr basis, GeneratorInfo info);

/// H_N = dGamma(-Delta_h) + (1/2N) sum_xy V(x - y) a*_x a*_y a_y a_x.
SparseGenerator assemble_hamiltonian(int N, const SampledPotential& potential, BasisPtr basis);

SparseGenerator assemble_L2(const FieldVector& phi, const SampledPotential& potential,
                            BasisPtr basis);
SparseGenerator assemble_L3(const FieldVector& phi, const SampledPotential& potential, int N,
                            BasisPtr basis);
SparseGenerator assemble_L4(const SampledPotential& potential, int N, BasisPtr basis);
/// L2 + L3 + L4 with chi(N <= cutoff) inside the cubic term.
SparseGenerator assemble_truncated(const FieldVector& phi, const SampledPotential& potential,
                                   int N, int cutoff, BasisPtr basis);

/// Term builders shared by the assemblers above.
GeneratorTerms kinetic_terms(const Grid& grid);
GeneratorTerms interaction_terms(const SampledPotential& potential, int N);
/// L2 without its kinetic part.
GeneratorTerms quadratic_mean_field_terms(const FieldVector& phi,
                                          const SampledPotential& potential);
GeneratorTerms cubic_terms(const FieldVector& phi, const SampledPotential& potential, int N,
                           int cutoff = INT_MAX);
GeneratorTerms merge(GeneratorTerms a, const GeneratorTerms& b);

/// (N/2) int_s^t dtau h^d sum_x (V * |phi_tau|^2)(x) |phi_tau(x)|^2,
/// left-endpoint sum over the stored trajectory steps.
double phase_L0(const HartreeTrajectory& trajectory, const SampledPotential& potential, int N,
                double s, double t);

/// dGamma(J).
SparseGenerator second_quantization_generator(const ModeOperator& J, BasisPtr basis);
/// G = i (a*(f) - a(f)), so that W(f) = exp(-i G).
SparseGenerator weyl_generator(const Eigen::VectorXcd& f, BasisPtr basis);

}  // namespace mflab
