#pragma once

// Truncated bosonic Fock space over M lattice modes in the occupation-number
// representation, with ladder operators, dGamma and sector bookkeeping.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mflab/lattice.hpp"

namespace mflab {

/// Occupation vectors n with |n| <= cutoff. Sectors ascend; inside a sector the
/// order is lexicographically descending, e.g. (2,0), (1,1), (0,2).
class OccupationBasis {
 public:
  static constexpr std::size_t kDefaultMaxDimension = 5'000'000;

  static std::shared_ptr<const OccupationBasis> create(
      int modes, int cutoff, std::size_t max_dimension = kDefaultMaxDimension);

  /// binom(n + M - 1, n), saturating at SIZE_MAX.
  static std::size_t sector_dimension(int modes, int n);
  /// Total size for a given cutoff, saturating at SIZE_MAX.
  static std::size_t total_dimension(int modes, int cutoff);

  int modes() const noexcept { return modes_; }
  int cutoff() const noexcept { return cutoff_; }
  std::size_t dimension() const noexcept { return dimension_; }

  std::size_t sector_begin(int n) const { return sector_offsets_.at(n); }
  std::size_t sector_end(int n) const { return sector_offsets_.at(n + 1); }
  int sector_of(std::size_t index) const { return sector_[index]; }

  std::span<const std::uint16_t> occupation(std::size_t index) const {
    return {occupations_.data() + index * modes_, static_cast<std::size_t>(modes_)};
  }

  /// Position of n; nullopt when |n| > cutoff or the vector is malformed.
  std::optional<std::size_t> index_of(std::span<const int> occupation) const;

  /// Rank in the infinite ordering. Valid for totals up to cutoff + 2, so
  /// states just above the cutoff get indices >= dimension().
  std::size_t extended_rank(std::span<const std::uint16_t> occupation) const;
  std::size_t extended_rank(std::span<const int> occupation) const;
  /// Number of states in sectors cutoff+1 and cutoff+2.
  std::size_t overflow_dimension() const noexcept { return overflow_dimension_; }

  /// Index of n - e_mode, or -1 if n_mode = 0.
  std::ptrdiff_t lowered(std::size_t index, int mode) const {
    return lowered_[index * modes_ + mode];
  }
  /// Index of n + e_mode, or -1 if that exceeds the cutoff.
  std::ptrdiff_t raised(std::size_t index, int mode) const;

 private:
  OccupationBasis(int modes, int cutoff);

  std::size_t compositions(int total, int parts) const {
    return compositions_[static_cast<std::size_t>(total) * (modes_ + 1) + parts];
  }
  template <class Int>
  std::size_t rank_impl(std::span<const Int> occupation) const;

  int modes_;
  int cutoff_;
  std::size_t dimension_ = 0;
  std::size_t overflow_dimension_ = 0;
  std::vector<std::size_t> sector_offsets_;
  std::vector<std::size_t> compositions_;
  std::vector<std::uint16_t> occupations_;
  std::vector<std::int32_t> lowered_;
  std::vector<std::uint16_t> sector_;
};

using BasisPtr = std::shared_ptr<const OccupationBasis>;

class FockState {
 public:
  explicit FockState(BasisPtr basis);
  FockState(BasisPtr basis, Eigen::VectorXcd amplitudes);

  static FockState vacuum(BasisPtr basis);
  static FockState basis_state(BasisPtr basis, std::span<const int> occupation);

  const OccupationBasis& basis() const noexcept { return *basis_; }
  const BasisPtr& basis_ptr() const noexcept { return basis_; }
  Eigen::VectorXcd& amplitudes() noexcept { return amplitudes_; }
  const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }

  double norm() const { return amplitudes_.norm(); }
  double squared_norm() const { return amplitudes_.squaredNorm(); }
  bool is_normalized(double tolerance = 1e-12) const;
  FockState normalized() const;
  /// <this, other>, antilinear in this.
  complex dot(const FockState& other) const;

  FockState& operator+=(const FockState& other);
  FockState& operator-=(const FockState& other);
  FockState& operator*=(complex scale);
  friend FockState operator+(FockState a, const FockState& b) { return a += b; }
  friend FockState operator-(FockState a, const FockState& b) { return a -= b; }
  friend FockState operator*(complex s, FockState a) { return a *= s; }

 private:
  void require_same_basis(const FockState& other) const;

  BasisPtr basis_;
  Eigen::VectorXcd amplitudes_;
};

/// Mass dropped by operators that would leave the truncated space.
class LeakageMeter {
 public:
  void add(double mass) { mass_ += mass; }
  double mass() const noexcept { return mass_; }
  void reset() noexcept { mass_ = 0.0; }
  /// Throws TruncationError when the accumulated mass exceeds the budget.
  void check(double budget, const std::string& context) const;

 private:
  double mass_ = 0.0;
};

FockState apply_create(int mode, const FockState& psi, LeakageMeter* leakage = nullptr);
FockState apply_annihilate(int mode, const FockState& psi);
/// a*(f) = sum_i f_i a*_i with f in mode coefficients.
FockState apply_create(const Eigen::VectorXcd& f, const FockState& psi,
                       LeakageMeter* leakage = nullptr);
/// a(f) = sum_i conj(f_i) a_i.
FockState apply_annihilate(const Eigen::VectorXcd& f, const FockState& psi);

/// Mode coefficients f_i = h^{d/2} f(x_i).
Eigen::VectorXcd mode_vector(const FieldVector& f);

/// One-particle operator in the site basis.
class ModeOperator {
 public:
  explicit ModeOperator(Eigen::MatrixXcd matrix, bool hermitian = false);
  static ModeOperator identity(int modes);
  static ModeOperator projector(const Eigen::VectorXcd& v);
  /// Random Hermitian matrix with standard normal entries.
  static ModeOperator random_hermitian(int modes, std::uint64_t seed);

  const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }
  bool hermitian() const noexcept { return hermitian_; }
  int modes() const noexcept { return static_cast<int>(matrix_.rows()); }
  double operator_norm() const;

 private:
  Eigen::MatrixXcd matrix_;
  bool hermitian_;
};

/// dGamma(J) psi = sum_ij J_ij a*_i a_j psi.
FockState second_quantize(const ModeOperator& J, const FockState& psi);

/// g(n) applied sector-wise: the amplitude of every state in sector n is multiplied by g(n).
FockState apply_number_function(const FockState& psi, const std::function<double(int)>& g);
/// (N + shift)^power.
FockState apply_number_power(const FockState& psi, double power, double shift = 0.0);

FockState project_sector(int n, const FockState& psi);
/// sum_n n^j ||P_n psi||^2.
double number_moment(int j, const FockState& psi);
/// ||P_n psi|| for n = 0..cutoff.
std::vector<double> sector_norms(const FockState& psi);

struct ParityNorms {
  double even = 0.0;
  double odd = 0.0;
};
ParityNorms parity_norms(const FockState& psi);

/// index, n_1..n_M, re, im; one line per nonzero amplitude.
void write_state_csv(std::ostream& out, const FockState& psi);

}  // namespace mflab
