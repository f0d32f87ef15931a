#pragma once

// Periodic d-dimensional lattice: geometry, sampled pair potentials, complex
// one-particle fields and the spectral (FFT) machinery acting on them.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mflab {

using complex = std::complex<double>;

class Grid {
 public:
  static constexpr int kMaxDimension = 3;

  Grid(int dimension, int sites_per_axis, double spacing);

  int dimension() const noexcept { return dimension_; }
  int sites_per_axis() const noexcept { return sites_per_axis_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t site_count() const noexcept { return site_count_; }
  /// h^d, the lattice measure of one site.
  double cell_volume() const noexcept { return cell_volume_; }

  /// Site index = x0 + L*x1 + L^2*x2; unused axes are zero.
  std::array<int, 3> coordinates(std::size_t site) const;
  /// Wraps every coordinate modulo L.
  std::size_t site_index(std::array<int, 3> coords) const;
  /// Index of the displacement x_to - x_from.
  std::size_t displacement_index(std::size_t from, std::size_t to) const;
  /// Minimal-image displacement in site units; a tie at L/2 stays positive.
  std::array<int, 3> minimal_image(std::size_t displacement) const;
  double minimal_image_distance(std::size_t displacement) const;

  bool operator==(const Grid&) const = default;

 private:
  int dimension_;
  int sites_per_axis_;
  double spacing_;
  std::size_t site_count_;
  double cell_volume_;
};

struct PowerLawTerm {
  double strength = 0.0;
  double exponent = 1.0;  // must lie in (0, 3/2)
};

/// V(x) = sum_i strength_i |x|^-exponent_i + offset (+ optional bounded table).
struct PotentialSpec {
  std::vector<PowerLawTerm> terms;
  double offset = 0.0;
  /// Per-displacement values added on top of the power-law part, indexed like
  /// Grid::displacement_index. Must be even under r -> -r.
  std::optional<std::vector<double>> bounded_part;

  static PotentialSpec coulomb_like(double strength, double exponent = 1.0);
  static PotentialSpec constant(double value);

  void validate(const Grid& grid) const;
  bool is_zero() const;
  std::string describe() const;
};

/// Potential sampled on every lattice displacement.
class SampledPotential {
 public:
  SampledPotential(Grid grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t displacement) const { return values_[displacement]; }
  /// V(x_i - x_j).
  double between(std::size_t i, std::size_t j) const {
    return values_[grid_.displacement_index(j, i)];
  }
  /// Dense symmetric matrix V(x_i - x_j).
  Eigen::MatrixXd pair_matrix() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

SampledPotential sample_potential(const PotentialSpec& spec, const Grid& grid);

/// Complex wave function on the lattice. The L2 mass is h^d * sum |phi|^2.
class FieldVector {
 public:
  explicit FieldVector(Grid grid);
  FieldVector(Grid grid, std::vector<complex> values);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const complex> values() const noexcept { return values_; }
  std::span<complex> values() noexcept { return values_; }
  std::vector<complex>& data() noexcept { return values_; }
  complex operator[](std::size_t i) const { return values_[i]; }
  complex& operator[](std::size_t i) { return values_[i]; }

  double mass() const;
  bool is_normalized(double tolerance = 1e-12) const;
  FieldVector normalized() const;
  bool is_finite() const;

  /// Mode coefficients h^{d/2} phi(x_i), unit-norm in C^M for normalized phi.
  Eigen::VectorXcd modes() const;
  static FieldVector from_modes(Grid grid, const Eigen::VectorXcd& modes);

 private:
  Grid grid_;
  std::vector<complex> values_;
};

/// Unnormalized forward / normalized inverse DFT over the lattice.
class SpectralTransform {
 public:
  explicit SpectralTransform(const Grid& grid);
  ~SpectralTransform();
  SpectralTransform(const SpectralTransform&) = delete;
  SpectralTransform& operator=(const SpectralTransform&) = delete;

  const Grid& grid() const noexcept { return grid_; }
  void forward(std::span<const complex> in, std::span<complex> out) const;
  void inverse(std::span<const complex> in, std::span<complex> out) const;

 private:
  Grid grid_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Fourier symbol of -Delta_h: (2/h^2) sum_a (1 - cos(2 pi q_a / L)).
std::vector<double> laplacian_symbol(const Grid& grid);

/// Dense -Delta_h built from the nearest-neighbour stencil (circulant).
Eigen::MatrixXd laplacian_matrix(const Grid& grid);

/// -Delta_h phi, evaluated spectrally.
FieldVector apply_negative_laplacian(const FieldVector& phi);

/// (V * rho)(x) = h^d sum_y V(x - y) rho(y), evaluated spectrally.
std::vector<double> convolve_density(const SampledPotential& potential,
                                     std::span<const double> density);

struct FieldNorms {
  double l2 = 0.0;
  double linf = 0.0;
  double h1 = 0.0;
};

FieldNorms norms(const FieldVector& phi);
double lp_norm(const FieldVector& phi, double p);
/// <phi, -Delta_h phi> in the lattice inner product.
double kinetic_quadratic_form(const FieldVector& phi);

enum class InitialShape { gaussian, plane_wave, uniform, random };

struct InitialStateSpec {
  InitialShape shape = InitialShape::gaussian;
  std::vector<double> center;  // length units; defaults to the cell centre
  double width = 1.0;          // length units
  std::vector<int> momentum;   // integer wavenumber per axis
  std::uint64_t seed = 1;

  std::string describe() const;
};

/// Normalized initial condition on the grid.
FieldVector make_initial_state(const Grid& grid, const InitialStateSpec& spec);

InitialShape parse_initial_shape(const std::string& name);
std::string to_string(InitialShape shape);

}  // namespace mflab
