#include "mflab/fock.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <random>

#include "mflab/csv.hpp"
#include "mflab/error.hpp"

namespace mflab {

namespace {

constexpr std::size_t kSaturated = std::numeric_limits<std::size_t>::max();

std::size_t saturating_add(std::size_t a, std::size_t b) {
  return a > kSaturated - b ? kSaturated : a + b;
}

// Compositions of `total` into `parts` non-negative parts, saturating.
std::vector<std::size_t> composition_table(int max_total, int modes) {
  const std::size_t stride = static_cast<std::size_t>(modes) + 1;
  std::vector<std::size_t> table((static_cast<std::size_t>(max_total) + 1) * stride, 0);
  for (int r = 0; r <= max_total; ++r) {
    table[r * stride] = r == 0 ? 1 : 0;
    for (int k = 1; k <= modes; ++k) {
      const std::size_t left = table[r * stride + k - 1];
      const std::size_t up = r > 0 ? table[(r - 1) * stride + k] : 0;
      table[r * stride + k] = saturating_add(left, up);
    }
  }
  return table;
}

void check_mode(int mode, const OccupationBasis& basis) {
  if (mode < 0 || mode >= basis.modes()) {
    throw ParameterError("mode index " + std::to_string(mode) + " outside [0, " +
                         std::to_string(basis.modes()) + ")");
  }
}

void check_mode_vector(const Eigen::VectorXcd& f, const OccupationBasis& basis) {
  if (f.size() != basis.modes()) {
    throw ShapeError("mode vector has length " + std::to_string(f.size()) + ", basis has " +
                     std::to_string(basis.modes()) + " modes");
  }
}

}  // namespace

std::size_t OccupationBasis::sector_dimension(int modes, int n) {
  if (modes < 1 || n < 0) return 0;
  // binom(n + M - 1, n) by the multiplicative formula, saturating on overflow.
  const int k = std::min(n, modes - 1);
  const long double exact = [&] {
    long double r = 1.0L;
    for (int i = 1; i <= k; ++i) r = r * (n + modes - 1 - k + i) / i;
    return r;
  }();
  if (exact > static_cast<long double>(kSaturated) / 2) return kSaturated;
  return static_cast<std::size_t>(std::llround(exact));
}

std::size_t OccupationBasis::total_dimension(int modes, int cutoff) {
  std::size_t total = 0;
  for (int n = 0; n <= cutoff; ++n) total = saturating_add(total, sector_dimension(modes, n));
  return total;
}

std::shared_ptr<const OccupationBasis> OccupationBasis::create(int modes, int cutoff,
                                                               std::size_t max_dimension) {
  if (modes < 1) throw ParameterError("basis needs at least one mode");
  if (cutoff < 0) throw ParameterError("basis cutoff must be non-negative");
  if (cutoff > std::numeric_limits<std::uint16_t>::max() - 2) {
    throw CapacityError("basis cutoff " + std::to_string(cutoff) + " exceeds the occupation range");
  }
  const std::size_t needed = total_dimension(modes, cutoff);
  const std::size_t limit =
      std::min<std::size_t>(max_dimension, std::numeric_limits<std::int32_t>::max());
  if (needed > limit) {
    throw CapacityError("basis with M=" + std::to_string(modes) + ", N_cut=" +
                        std::to_string(cutoff) + " has dimension " +
                        (needed == kSaturated ? std::string("> 2^64") : std::to_string(needed)) +
                        ", above the maximum " + std::to_string(limit));
  }
  return std::shared_ptr<const OccupationBasis>(new OccupationBasis(modes, cutoff));
}

OccupationBasis::OccupationBasis(int modes, int cutoff) : modes_(modes), cutoff_(cutoff) {
  compositions_ = composition_table(cutoff + 2, modes);
  sector_offsets_.assign(static_cast<std::size_t>(cutoff) + 4, 0);
  for (int n = 0; n <= cutoff + 2; ++n) {
    sector_offsets_[n + 1] = saturating_add(sector_offsets_[n], compositions(n, modes));
  }
  dimension_ = sector_offsets_[cutoff + 1];
  overflow_dimension_ = sector_offsets_[cutoff + 3] - dimension_;

  occupations_.assign(dimension_ * modes_, 0);
  sector_.assign(dimension_, 0);
  std::vector<std::uint16_t> occ(modes_);
  std::size_t index = 0;
  for (int n = 0; n <= cutoff; ++n) {
    std::fill(occ.begin(), occ.end(), 0);
    occ[0] = static_cast<std::uint16_t>(n);
    while (true) {
      std::copy(occ.begin(), occ.end(), occupations_.begin() + index * modes_);
      sector_[index] = static_cast<std::uint16_t>(n);
      ++index;
      // Next composition in descending lexicographic order.
      int j = modes_ - 2;
      while (j >= 0 && occ[j] == 0) --j;
      if (j < 0) break;
      const int tail = occ[modes_ - 1];
      occ[modes_ - 1] = 0;
      --occ[j];
      occ[j + 1] = static_cast<std::uint16_t>(occ[j + 1] + tail + 1);
    }
  }

  lowered_.assign(dimension_ * modes_, -1);
  std::vector<std::uint16_t> work(modes_);
  for (std::size_t i = 0; i < dimension_; ++i) {
    auto n = occupation(i);
    for (int m = 0; m < modes_; ++m) {
      if (n[m] == 0) continue;
      std::copy(n.begin(), n.end(), work.begin());
      --work[m];
      lowered_[i * modes_ + m] = static_cast<std::int32_t>(extended_rank(work));
    }
  }
}

template <class Int>
std::size_t OccupationBasis::rank_impl(std::span<const Int> occupation) const {
  long total = 0;
  for (auto v : occupation) total += v;
  std::size_t index = sector_offsets_[total];
  long rem = total;
  for (int i = 0; i + 1 < modes_; ++i) {
    const long ni = occupation[i];
    if (ni < rem) index += compositions(static_cast<int>(rem - ni - 1), modes_ - i);
    rem -= ni;
  }
  return index;
}

std::size_t OccupationBasis::extended_rank(std::span<const std::uint16_t> occupation) const {
  return rank_impl(occupation);
}

std::size_t OccupationBasis::extended_rank(std::span<const int> occupation) const {
  return rank_impl(occupation);
}

std::optional<std::size_t> OccupationBasis::index_of(std::span<const int> occupation) const {
  if (occupation.size() != static_cast<std::size_t>(modes_)) return std::nullopt;
  long total = 0;
  for (int v : occupation) {
    if (v < 0) return std::nullopt;
    total += v;
  }
  if (total > cutoff_) return std::nullopt;
  return rank_impl(occupation);
}

std::ptrdiff_t OccupationBasis::raised(std::size_t index, int mode) const {
  if (sector_[index] >= cutoff_) return -1;
  std::vector<std::uint16_t> work(occupation(index).begin(), occupation(index).end());
  ++work[mode];
  return static_cast<std::ptrdiff_t>(extended_rank(work));
}

FockState::FockState(BasisPtr basis)
    : basis_(std::move(basis)),
      amplitudes_(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis_->dimension()))) {}

FockState::FockState(BasisPtr basis, Eigen::VectorXcd amplitudes)
    : basis_(std::move(basis)), amplitudes_(std::move(amplitudes)) {
  if (static_cast<std::size_t>(amplitudes_.size()) != basis_->dimension()) {
    throw ShapeError("amplitude vector has length " + std::to_string(amplitudes_.size()) +
                     ", basis has dimension " + std::to_string(basis_->dimension()));
  }
}

FockState FockState::vacuum(BasisPtr basis) {
  FockState psi(std::move(basis));
  psi.amplitudes_[0] = 1.0;
  return psi;
}

FockState FockState::basis_state(BasisPtr basis, std::span<const int> occupation) {
  auto index = basis->index_of(occupation);
  if (!index) throw ParameterError("occupation vector is not in the basis");
  FockState psi(std::move(basis));
  psi.amplitudes_[static_cast<Eigen::Index>(*index)] = 1.0;
  return psi;
}

bool FockState::is_normalized(double tolerance) const {
  return std::abs(squared_norm() - 1.0) <= tolerance;
}

FockState FockState::normalized() const {
  const double n = norm();
  if (!(n > 0.0)) throw ParameterError("cannot normalize a zero state");
  return FockState(basis_, amplitudes_ / n);
}

void FockState::require_same_basis(const FockState& other) const {
  if (basis_ != other.basis_ && !(basis_->modes() == other.basis_->modes() &&
                                  basis_->cutoff() == other.basis_->cutoff())) {
    throw ShapeError("Fock states live on different bases");
  }
}

complex FockState::dot(const FockState& other) const {
  require_same_basis(other);
  return amplitudes_.dot(other.amplitudes_);
}

FockState& FockState::operator+=(const FockState& other) {
  require_same_basis(other);
  amplitudes_ += other.amplitudes_;
  return *this;
}

FockState& FockState::operator-=(const FockState& other) {
  require_same_basis(other);
  amplitudes_ -= other.amplitudes_;
  return *this;
}

FockState& FockState::operator*=(complex scale) {
  amplitudes_ *= scale;
  return *this;
}

void LeakageMeter::check(double budget, const std::string& context) const {
  if (mass_ > budget) {
    throw TruncationError(context + ": truncation leakage " + format_double(mass_) +
                          " exceeds budget " + format_double(budget) +
                          "; raise the particle-number cutoff");
  }
}

FockState apply_create(int mode, const FockState& psi, LeakageMeter* leakage) {
  const auto& basis = psi.basis();
  check_mode(mode, basis);
  FockState out(psi.basis_ptr());
  const auto& in = psi.amplitudes();
  auto& result = out.amplitudes();
  double dropped = 0.0;
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const complex a = in[static_cast<Eigen::Index>(i)];
    if (a == complex(0.0)) continue;
    const double factor = std::sqrt(basis.occupation(i)[mode] + 1.0);
    const auto target = basis.raised(i, mode);
    if (target < 0) {
      dropped += std::norm(a) * factor * factor;
    } else {
      result[target] += factor * a;
    }
  }
  if (leakage) leakage->add(dropped);
  return out;
}

FockState apply_annihilate(int mode, const FockState& psi) {
  const auto& basis = psi.basis();
  check_mode(mode, basis);
  FockState out(psi.basis_ptr());
  const auto& in = psi.amplitudes();
  auto& result = out.amplitudes();
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const auto target = basis.lowered(i, mode);
    if (target < 0) continue;
    result[target] += std::sqrt(static_cast<double>(basis.occupation(i)[mode])) *
                      in[static_cast<Eigen::Index>(i)];
  }
  return out;
}

FockState apply_create(const Eigen::VectorXcd& f, const FockState& psi, LeakageMeter* leakage) {
  const auto& basis = psi.basis();
  check_mode_vector(f, basis);
  FockState out(psi.basis_ptr());
  const auto& in = psi.amplitudes();
  auto& result = out.amplitudes();
  std::map<std::size_t, complex> overflow;
  std::vector<std::uint16_t> work(basis.modes());
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const complex a = in[static_cast<Eigen::Index>(i)];
    if (a == complex(0.0)) continue;
    const auto n = basis.occupation(i);
    const bool top = basis.sector_of(i) == basis.cutoff();
    for (int m = 0; m < basis.modes(); ++m) {
      if (f[m] == complex(0.0)) continue;
      const complex value = f[m] * std::sqrt(n[m] + 1.0) * a;
      if (top) {
        std::copy(n.begin(), n.end(), work.begin());
        ++work[m];
        if (leakage) overflow[basis.extended_rank(work)] += value;
      } else {
        result[basis.raised(i, m)] += value;
      }
    }
  }
  if (leakage) {
    double dropped = 0.0;
    for (const auto& [index, value] : overflow) dropped += std::norm(value);
    leakage->add(dropped);
  }
  return out;
}

FockState apply_annihilate(const Eigen::VectorXcd& f, const FockState& psi) {
  const auto& basis = psi.basis();
  check_mode_vector(f, basis);
  FockState out(psi.basis_ptr());
  const auto& in = psi.amplitudes();
  auto& result = out.amplitudes();
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const complex a = in[static_cast<Eigen::Index>(i)];
    if (a == complex(0.0)) continue;
    const auto n = basis.occupation(i);
    for (int m = 0; m < basis.modes(); ++m) {
      if (n[m] == 0 || f[m] == complex(0.0)) continue;
      result[basis.lowered(i, m)] += std::conj(f[m]) * std::sqrt(static_cast<double>(n[m])) * a;
    }
  }
  return out;
}

Eigen::VectorXcd mode_vector(const FieldVector& f) { return f.modes(); }

ModeOperator::ModeOperator(Eigen::MatrixXcd matrix, bool hermitian)
    : matrix_(std::move(matrix)), hermitian_(hermitian) {
  if (matrix_.rows() != matrix_.cols()) throw ShapeError("mode operator must be square");
  if (hermitian_ && (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ParameterError("mode operator flagged Hermitian but J - J^* exceeds 1e-12");
  }
}

ModeOperator ModeOperator::identity(int modes) {
  return ModeOperator(Eigen::MatrixXcd::Identity(modes, modes), true);
}

ModeOperator ModeOperator::projector(const Eigen::VectorXcd& v) {
  const double n2 = v.squaredNorm();
  if (!(n2 > 0.0)) throw ParameterError("projector onto the zero vector");
  Eigen::MatrixXcd p = v * v.adjoint() / n2;
  p = 0.5 * (p + p.adjoint()).eval();
  return ModeOperator(std::move(p), true);
}

ModeOperator ModeOperator::random_hermitian(int modes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd a(modes, modes);
  for (int i = 0; i < modes; ++i) {
    for (int j = 0; j < modes; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      a(i, j) = complex(re, im);
    }
  }
  Eigen::MatrixXcd h = 0.5 * (a + a.adjoint());
  return ModeOperator(std::move(h), true);
}

double ModeOperator::operator_norm() const {
  if (hermitian_) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(matrix_, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(matrix_);
  return svd.singularValues()(0);
}

FockState second_quantize(const ModeOperator& J, const FockState& psi) {
  const auto& basis = psi.basis();
  if (J.modes() != basis.modes()) {
    throw ShapeError("one-particle operator is " + std::to_string(J.modes()) + "x" +
                     std::to_string(J.modes()) + ", basis has " + std::to_string(basis.modes()) +
                     " modes");
  }
  const auto& m = J.matrix();
  FockState out(psi.basis_ptr());
  const auto& in = psi.amplitudes();
  auto& result = out.amplitudes();
  const int modes = basis.modes();
  std::vector<std::uint16_t> work(modes);
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const complex a = in[static_cast<Eigen::Index>(i)];
    if (a == complex(0.0)) continue;
    const auto n = basis.occupation(i);
    std::copy(n.begin(), n.end(), work.begin());
    for (int q = 0; q < modes; ++q) {
      if (n[q] == 0) continue;
      const complex lowered = std::sqrt(static_cast<double>(n[q])) * a;
      --work[q];
      for (int p = 0; p < modes; ++p) {
        const complex jpq = m(p, q);
        if (jpq == complex(0.0)) continue;
        const double raise = std::sqrt(work[p] + 1.0);
        ++work[p];
        result[static_cast<Eigen::Index>(basis.extended_rank(work))] += jpq * raise * lowered;
        --work[p];
      }
      ++work[q];
    }
  }
  return out;
}

FockState apply_number_function(const FockState& psi, const std::function<double(int)>& g) {
  const auto& basis = psi.basis();
  FockState out = psi;
  for (int n = 0; n <= basis.cutoff(); ++n) {
    const double factor = g(n);
    const auto begin = static_cast<Eigen::Index>(basis.sector_begin(n));
    const auto size = static_cast<Eigen::Index>(basis.sector_end(n) - basis.sector_begin(n));
    out.amplitudes().segment(begin, size) *= factor;
  }
  return out;
}

FockState apply_number_power(const FockState& psi, double power, double shift) {
  return apply_number_function(psi, [&](int n) {
    const double base = n + shift;
    if (base == 0.0 && power < 0.0) {
      throw ParameterError("negative power of a vanishing number operator");
    }
    return power == 0.0 ? 1.0 : std::pow(base, power);
  });
}

FockState project_sector(int n, const FockState& psi) {
  const auto& basis = psi.basis();
  if (n < 0 || n > basis.cutoff()) {
    throw ParameterError("sector " + std::to_string(n) + " outside [0, " +
                         std::to_string(basis.cutoff()) + "]");
  }
  return apply_number_function(psi, [n](int m) { return m == n ? 1.0 : 0.0; });
}

std::vector<double> sector_norms(const FockState& psi) {
  const auto& basis = psi.basis();
  std::vector<double> norms(basis.cutoff() + 1);
  for (int n = 0; n <= basis.cutoff(); ++n) {
    const auto begin = static_cast<Eigen::Index>(basis.sector_begin(n));
    const auto size = static_cast<Eigen::Index>(basis.sector_end(n) - basis.sector_begin(n));
    norms[n] = psi.amplitudes().segment(begin, size).norm();
  }
  return norms;
}

double number_moment(int j, const FockState& psi) {
  if (j < 0) throw ParameterError("number moment order must be non-negative");
  const auto norms = sector_norms(psi);
  double s = 0.0;
  for (std::size_t n = 0; n < norms.size(); ++n) {
    s += std::pow(static_cast<double>(n), j) * norms[n] * norms[n];
  }
  return s;
}

ParityNorms parity_norms(const FockState& psi) {
  const auto norms = sector_norms(psi);
  double even = 0.0;
  double odd = 0.0;
  for (std::size_t n = 0; n < norms.size(); ++n) (n % 2 ? odd : even) += norms[n] * norms[n];
  return {std::sqrt(even), std::sqrt(odd)};
}

void write_state_csv(std::ostream& out, const FockState& psi) {
  const auto& basis = psi.basis();
  out << "index";
  for (int m = 0; m < basis.modes(); ++m) out << ",n" << m;
  out << ",re,im\n";
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const complex a = psi.amplitudes()[static_cast<Eigen::Index>(i)];
    if (a == complex(0.0)) continue;
    out << i;
    for (auto v : basis.occupation(i)) out << ',' << v;
    out << ',' << format_double(a.real()) << ',' << format_double(a.imag()) << '\n';
  }
}

}  // namespace mflab
