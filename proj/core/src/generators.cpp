#include "mflab/generators.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <utility>

#include "mflab/csv.hpp"
#include "mflab/error.hpp"

namespace mflab {

namespace {

using Entry = std::pair<std::size_t, complex>;

void require_modes(const OccupationBasis& basis, const Grid& grid) {
  if (static_cast<std::size_t>(basis.modes()) != grid.site_count()) {
    throw ShapeError("basis has " + std::to_string(basis.modes()) + " modes, grid has " +
                     std::to_string(grid.site_count()) + " sites");
  }
}

void require_particles(int N) {
  if (N < 1) throw ParameterError("particle number N must be at least 1");
}

// Applies every term to one occupation vector and appends (extended row, value).
class ColumnKernel {
 public:
  ColumnKernel(const GeneratorTerms& terms, const OccupationBasis& basis)
      : terms_(terms), basis_(basis), m_(basis.modes()), work_(m_) {}

  void column(std::span<const std::uint16_t> n, int sector, std::vector<Entry>& out) {
    std::copy(n.begin(), n.end(), work_.begin());
    if (terms_.one_body) one_body(*terms_.one_body, out);
    if (terms_.pair_create) pair_create(*terms_.pair_create, out);
    if (terms_.pair_annihilate) pair_annihilate(*terms_.pair_annihilate, out);
    if (terms_.cubic_create && sector <= terms_.cubic_cutoff) cubic_create(*terms_.cubic_create, out);
    if (terms_.cubic_annihilate && sector - 1 <= terms_.cubic_cutoff) {
      cubic_annihilate(*terms_.cubic_annihilate, out);
    }
    if (terms_.density_density) density(*terms_.density_density, out);
    if (terms_.linear_create) linear_create(*terms_.linear_create, out);
    if (terms_.linear_annihilate) linear_annihilate(*terms_.linear_annihilate, out);
  }

 private:
  std::size_t rank() const { return basis_.extended_rank(work_); }

  // Each helper leaves work_ as it found it.
  double lower(int i) {
    const double f = std::sqrt(static_cast<double>(work_[i]));
    --work_[i];
    return f;
  }
  double raise(int i) {
    ++work_[i];
    return std::sqrt(static_cast<double>(work_[i]));
  }

  void one_body(const Eigen::MatrixXcd& k, std::vector<Entry>& out) {
    for (int q = 0; q < m_; ++q) {
      if (work_[q] == 0) continue;
      const double a = lower(q);
      for (int p = 0; p < m_; ++p) {
        if (k(p, q) == complex(0.0)) continue;
        const double b = raise(p);
        out.emplace_back(rank(), k(p, q) * a * b);
        --work_[p];
      }
      ++work_[q];
    }
  }

  void pair_create(const Eigen::MatrixXcd& c, std::vector<Entry>& out) {
    for (int q = 0; q < m_; ++q) {
      const double a = raise(q);
      for (int p = 0; p < m_; ++p) {
        if (c(p, q) == complex(0.0)) continue;
        const double b = raise(p);
        out.emplace_back(rank(), c(p, q) * a * b);
        --work_[p];
      }
      --work_[q];
    }
  }

  void pair_annihilate(const Eigen::MatrixXcd& c, std::vector<Entry>& out) {
    for (int q = 0; q < m_; ++q) {
      if (work_[q] == 0) continue;
      const double a = lower(q);
      for (int p = 0; p < m_; ++p) {
        if (work_[p] == 0 || c(p, q) == complex(0.0)) continue;
        const double b = lower(p);
        out.emplace_back(rank(), c(p, q) * a * b);
        ++work_[p];
      }
      ++work_[q];
    }
  }

  // a*_x a*_y a_x
  void cubic_create(const Eigen::MatrixXcd& c, std::vector<Entry>& out) {
    for (int x = 0; x < m_; ++x) {
      if (work_[x] == 0) continue;
      const double a = lower(x);
      for (int y = 0; y < m_; ++y) {
        if (c(x, y) == complex(0.0)) continue;
        const double b = raise(y);
        const double e = raise(x);
        out.emplace_back(rank(), c(x, y) * a * b * e);
        --work_[x];
        --work_[y];
      }
      ++work_[x];
    }
  }

  // a*_x a_y a_x
  void cubic_annihilate(const Eigen::MatrixXcd& c, std::vector<Entry>& out) {
    for (int x = 0; x < m_; ++x) {
      if (work_[x] == 0) continue;
      const double a = lower(x);
      for (int y = 0; y < m_; ++y) {
        if (work_[y] == 0 || c(x, y) == complex(0.0)) continue;
        const double b = lower(y);
        const double e = raise(x);
        out.emplace_back(rank(), c(x, y) * a * b * e);
        --work_[x];
        ++work_[y];
      }
      ++work_[x];
    }
  }

  void density(const Eigen::MatrixXd& w, std::vector<Entry>& out) {
    double value = 0.0;
    for (int x = 0; x < m_; ++x) {
      if (work_[x] == 0) continue;
      const double nx = work_[x];
      for (int y = 0; y < m_; ++y) {
        value += w(x, y) * nx * (x == y ? nx - 1.0 : static_cast<double>(work_[y]));
      }
    }
    if (value != 0.0) out.emplace_back(rank(), value);
  }

  void linear_create(const Eigen::VectorXcd& u, std::vector<Entry>& out) {
    for (int i = 0; i < m_; ++i) {
      if (u[i] == complex(0.0)) continue;
      const double a = raise(i);
      out.emplace_back(rank(), u[i] * a);
      --work_[i];
    }
  }

  void linear_annihilate(const Eigen::VectorXcd& v, std::vector<Entry>& out) {
    for (int i = 0; i < m_; ++i) {
      if (work_[i] == 0 || v[i] == complex(0.0)) continue;
      const double a = lower(i);
      out.emplace_back(rank(), v[i] * a);
      ++work_[i];
    }
  }

  const GeneratorTerms& terms_;
  const OccupationBasis& basis_;
  int m_;
  std::vector<std::uint16_t> work_;
};

struct CscBuilder {
  std::vector<std::int64_t> outer{0};
  std::vector<std::int64_t> inner;
  std::vector<complex> values;

  SparseGenerator::Matrix finish(std::size_t rows, std::size_t cols) const {
    Eigen::Map<const SparseGenerator::Matrix> view(
        static_cast<std::int64_t>(rows), static_cast<std::int64_t>(cols),
        static_cast<std::int64_t>(values.size()), outer.data(), inner.data(), values.data());
    return SparseGenerator::Matrix(view);
  }
};

template <class Matrix>
void check_square(const Matrix& m, int modes, const char* what) {
  if (m.rows() != modes || m.cols() != modes) {
    throw ShapeError(std::string(what) + " coefficient matrix does not match the mode count");
  }
}

}  // namespace

SparseGenerator::SparseGenerator(BasisPtr basis, Matrix matrix, Matrix overflow, GeneratorInfo info)
    : basis_(std::move(basis)),
      matrix_(std::move(matrix)),
      overflow_(std::move(overflow)),
      info_(std::move(info)) {
  if (static_cast<std::size_t>(matrix_.rows()) != basis_->dimension() ||
      matrix_.rows() != matrix_.cols()) {
    throw ShapeError("generator matrix does not match the basis dimension");
  }
}

FockState SparseGenerator::apply(const FockState& psi) const {
  if (psi.dimension() != dimension()) throw ShapeError("state and generator dimensions differ");
  Eigen::VectorXcd out = matrix_ * psi.amplitudes();
  return FockState(basis_, std::move(out));
}

double SparseGenerator::hermiticity_defect() const {
  Matrix adjoint = matrix_.adjoint();
  Matrix diff = matrix_ - adjoint;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
    for (Matrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

std::set<int> SparseGenerator::sector_shifts() const {
  std::set<int> shifts;
  for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
    for (Matrix::InnerIterator it(matrix_, k); it; ++it) {
      if (it.value() == complex(0.0)) continue;
      shifts.insert(basis_->sector_of(static_cast<std::size_t>(it.row())) -
                    basis_->sector_of(static_cast<std::size_t>(it.col())));
    }
  }
  return shifts;
}

double SparseGenerator::overflow_norm(const Eigen::VectorXcd& v) const {
  if (overflow_.nonZeros() == 0) return 0.0;
  return (overflow_ * v).norm();
}

double SparseGenerator::one_norm() const {
  double best = 0.0;
  for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
    double s = 0.0;
    for (Matrix::InnerIterator it(matrix_, k); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

SparseGenerator SparseGenerator::plus(const SparseGenerator& other, std::string label) const {
  if (other.dimension() != dimension() || other.basis().modes() != basis().modes()) {
    throw ShapeError("cannot add generators on different bases");
  }
  GeneratorInfo info = info_;
  info.label = std::move(label);
  info.hermitian = info_.hermitian && other.info_.hermitian;
  Matrix sum = matrix_ + other.matrix_;
  Matrix overflow = overflow_ + other.overflow_;
  return SparseGenerator(basis_, std::move(sum), std::move(overflow), std::move(info));
}

SparseGenerator SparseGenerator::scaled(complex factor) const {
  GeneratorInfo info = info_;
  if (factor.imag() != 0.0) info.hermitian = false;
  Matrix m = matrix_ * factor;
  Matrix o = overflow_ * factor;
  return SparseGenerator(basis_, std::move(m), std::move(o), std::move(info));
}

void SparseGenerator::write_coordinates(std::ostream& out) const {
  CsvWriter csv(out);
  csv.header({"row", "col", "re", "im"});
  for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
    for (Matrix::InnerIterator it(matrix_, k); it; ++it) {
      csv.row({std::to_string(it.row()), std::to_string(it.col()),
               format_double(it.value().real()), format_double(it.value().imag())});
    }
  }
}

SparseGenerator assemble(const GeneratorTerms& terms, BasisPtr basis, GeneratorInfo info) {
  const int m = basis->modes();
  if (terms.one_body) check_square(*terms.one_body, m, "one-body");
  if (terms.pair_create) check_square(*terms.pair_create, m, "pair-creation");
  if (terms.pair_annihilate) check_square(*terms.pair_annihilate, m, "pair-annihilation");
  if (terms.cubic_create) check_square(*terms.cubic_create, m, "cubic");
  if (terms.cubic_annihilate) check_square(*terms.cubic_annihilate, m, "cubic");
  if (terms.density_density) check_square(*terms.density_density, m, "interaction");
  if (terms.linear_create && terms.linear_create->size() != m) {
    throw ShapeError("linear coefficient vector does not match the mode count");
  }
  if (terms.linear_annihilate && terms.linear_annihilate->size() != m) {
    throw ShapeError("linear coefficient vector does not match the mode count");
  }

  const std::size_t dim = basis->dimension();
  ColumnKernel kernel(terms, *basis);
  CscBuilder main, overflow;
  std::vector<Entry> entries;
  for (std::size_t col = 0; col < dim; ++col) {
    entries.clear();
    kernel.column(basis->occupation(col), basis->sector_of(col), entries);
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < entries.size();) {
      const std::size_t row = entries[k].first;
      complex sum = 0.0;
      for (; k < entries.size() && entries[k].first == row; ++k) sum += entries[k].second;
      if (sum == complex(0.0)) continue;
      auto& target = row < dim ? main : overflow;
      target.inner.push_back(static_cast<std::int64_t>(row < dim ? row : row - dim));
      target.values.push_back(sum);
    }
    main.outer.push_back(static_cast<std::int64_t>(main.values.size()));
    overflow.outer.push_back(static_cast<std::int64_t>(overflow.values.size()));
  }
  return SparseGenerator(basis, main.finish(dim, dim),
                         overflow.finish(basis->overflow_dimension(), dim), std::move(info));
}

GeneratorTerms merge(GeneratorTerms a, const GeneratorTerms& b) {
  auto add = [](auto& into, const auto& from) {
    if (!from) return;
    if (into) {
      *into += *from;
    } else {
      into = from;
    }
  };
  add(a.one_body, b.one_body);
  add(a.pair_create, b.pair_create);
  add(a.pair_annihilate, b.pair_annihilate);
  add(a.cubic_create, b.cubic_create);
  add(a.cubic_annihilate, b.cubic_annihilate);
  add(a.density_density, b.density_density);
  add(a.linear_create, b.linear_create);
  add(a.linear_annihilate, b.linear_annihilate);
  if (b.cubic_create || b.cubic_annihilate) a.cubic_cutoff = std::min(a.cubic_cutoff, b.cubic_cutoff);
  return a;
}

GeneratorTerms kinetic_terms(const Grid& grid) {
  GeneratorTerms t;
  t.one_body = laplacian_matrix(grid).cast<complex>();
  return t;
}

GeneratorTerms interaction_terms(const SampledPotential& potential, int N) {
  require_particles(N);
  GeneratorTerms t;
  t.density_density = potential.pair_matrix() / (2.0 * N);
  return t;
}

GeneratorTerms quadratic_mean_field_terms(const FieldVector& phi,
                                          const SampledPotential& potential) {
  if (!(phi.grid() == potential.grid())) throw ShapeError("field and potential grids differ");
  const Eigen::VectorXcd c = phi.modes();
  const Eigen::MatrixXd v = potential.pair_matrix();
  const Eigen::VectorXd w = v * c.cwiseAbs2();
  GeneratorTerms t;
  // Mean field on the diagonal plus exchange V_ij c_i conj(c_j) a*_i a_j.
  Eigen::MatrixXcd one_body = v.cast<complex>().cwiseProduct(c * c.adjoint());
  one_body.diagonal() += w.cast<complex>();
  t.one_body = std::move(one_body);
  t.pair_create = 0.5 * v.cast<complex>().cwiseProduct(c * c.transpose());
  t.pair_annihilate = 0.5 * v.cast<complex>().cwiseProduct(c.conjugate() * c.adjoint());
  return t;
}

GeneratorTerms cubic_terms(const FieldVector& phi, const SampledPotential& potential, int N,
                           int cutoff) {
  require_particles(N);
  if (!(phi.grid() == potential.grid())) throw ShapeError("field and potential grids differ");
  if (cutoff < 0) throw ParameterError("truncation cutoff must be non-negative");
  const Eigen::VectorXcd c = phi.modes();
  const Eigen::MatrixXcd v = potential.pair_matrix().cast<complex>();
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  const auto m = c.size();
  GeneratorTerms t;
  // A_xy = V_xy c_y, B_xy = V_xy conj(c_y).
  t.cubic_create = scale * v.cwiseProduct(Eigen::VectorXcd::Ones(m) * c.transpose());
  t.cubic_annihilate = scale * v.cwiseProduct(Eigen::VectorXcd::Ones(m) * c.adjoint());
  t.cubic_cutoff = cutoff;
  return t;
}

SparseGenerator assemble_hamiltonian(int N, const SampledPotential& potential, BasisPtr basis) {
  require_modes(*basis, potential.grid());
  auto terms = merge(kinetic_terms(potential.grid()), interaction_terms(potential, N));
  return assemble(terms, std::move(basis), {"H_N", 0.0, N, true});
}

SparseGenerator assemble_L2(const FieldVector& phi, const SampledPotential& potential,
                            BasisPtr basis) {
  require_modes(*basis, potential.grid());
  auto terms = merge(kinetic_terms(potential.grid()), quadratic_mean_field_terms(phi, potential));
  return assemble(terms, std::move(basis), {"L2", 0.0, 0, true});
}

SparseGenerator assemble_L3(const FieldVector& phi, const SampledPotential& potential, int N,
                            BasisPtr basis) {
  require_modes(*basis, potential.grid());
  return assemble(cubic_terms(phi, potential, N), std::move(basis), {"L3", 0.0, N, true});
}

SparseGenerator assemble_L4(const SampledPotential& potential, int N, BasisPtr basis) {
  require_modes(*basis, potential.grid());
  return assemble(interaction_terms(potential, N), std::move(basis), {"L4", 0.0, N, true});
}

SparseGenerator assemble_truncated(const FieldVector& phi, const SampledPotential& potential,
                                   int N, int cutoff, BasisPtr basis) {
  require_modes(*basis, potential.grid());
  auto terms = merge(kinetic_terms(potential.grid()), quadratic_mean_field_terms(phi, potential));
  terms = merge(std::move(terms), cubic_terms(phi, potential, N, cutoff));
  terms = merge(std::move(terms), interaction_terms(potential, N));
  return assemble(terms, std::move(basis), {"L_N^(M)", 0.0, N, true});
}

double phase_L0(const HartreeTrajectory& trajectory, const SampledPotential& potential, int N,
                double s, double t) {
  if (!trajectory.covers(s, t)) {
    throw ParameterError("Hartree trajectory does not cover [" + format_double(std::min(s, t)) +
                         ", " + format_double(std::max(s, t)) + "]");
  }
  if (t < s) return -phase_L0(trajectory, potential, N, t, s);
  const std::size_t first = trajectory.nearest_index(s);
  const std::size_t last = trajectory.nearest_index(t);
  const double cell = trajectory.grid().cell_volume();
  double integral = 0.0;
  std::vector<double> density(trajectory.grid().site_count());
  for (std::size_t k = first; k < last; ++k) {
    const auto& phi = trajectory.states()[k];
    for (std::size_t x = 0; x < density.size(); ++x) density[x] = std::norm(phi[x]);
    const auto mean_field = convolve_density(potential, density);
    double inner = 0.0;
    for (std::size_t x = 0; x < density.size(); ++x) inner += mean_field[x] * density[x];
    integral += (trajectory.times()[k + 1] - trajectory.times()[k]) * cell * inner;
  }
  return 0.5 * N * integral;
}

SparseGenerator second_quantization_generator(const ModeOperator& J, BasisPtr basis) {
  if (J.modes() != basis->modes()) throw ShapeError("one-particle operator does not match the basis");
  GeneratorTerms t;
  t.one_body = J.matrix();
  return assemble(t, std::move(basis), {"dGamma(J)", 0.0, 0, J.hermitian()});
}

SparseGenerator weyl_generator(const Eigen::VectorXcd& f, BasisPtr basis) {
  const complex i(0.0, 1.0);
  GeneratorTerms t;
  t.linear_create = i * f;
  t.linear_annihilate = -i * f.conjugate();
  return assemble(t, std::move(basis), {"i(a*(f) - a(f))", 0.0, 0, true});
}

}  // namespace mflab
