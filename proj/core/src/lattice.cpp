#include "mflab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include <fftw3.h>

#include "mflab/error.hpp"

namespace mflab {

namespace {

// The FFTW planner is not re-entrant; execution of finished plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int wrap(int value, int period) {
  int r = value % period;
  return r < 0 ? r + period : r;
}

}  // namespace

Grid::Grid(int dimension, int sites_per_axis, double spacing)
    : dimension_(dimension), sites_per_axis_(sites_per_axis), spacing_(spacing) {
  if (dimension < 1 || dimension > kMaxDimension) {
    throw ParameterError("grid dimension must be 1, 2 or 3, got " + std::to_string(dimension));
  }
  if (sites_per_axis < 2) {
    throw ParameterError("grid needs at least 2 sites per axis, got " +
                         std::to_string(sites_per_axis));
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw ParameterError("grid spacing must be positive and finite");
  }
  site_count_ = 1;
  for (int a = 0; a < dimension; ++a) site_count_ *= static_cast<std::size_t>(sites_per_axis);
  cell_volume_ = std::pow(spacing, dimension);
}

std::array<int, 3> Grid::coordinates(std::size_t site) const {
  std::array<int, 3> c{0, 0, 0};
  for (int a = 0; a < dimension_; ++a) {
    c[a] = static_cast<int>(site % sites_per_axis_);
    site /= sites_per_axis_;
  }
  return c;
}

std::size_t Grid::site_index(std::array<int, 3> coords) const {
  std::size_t index = 0;
  for (int a = dimension_ - 1; a >= 0; --a) {
    index = index * sites_per_axis_ + static_cast<std::size_t>(wrap(coords[a], sites_per_axis_));
  }
  return index;
}

std::size_t Grid::displacement_index(std::size_t from, std::size_t to) const {
  auto a = coordinates(from);
  auto b = coordinates(to);
  return site_index({b[0] - a[0], b[1] - a[1], b[2] - a[2]});
}

std::array<int, 3> Grid::minimal_image(std::size_t displacement) const {
  auto c = coordinates(displacement);
  for (int a = 0; a < dimension_; ++a) {
    if (2 * c[a] > sites_per_axis_) c[a] -= sites_per_axis_;
  }
  return c;
}

double Grid::minimal_image_distance(std::size_t displacement) const {
  auto c = minimal_image(displacement);
  double s = 0.0;
  for (int a = 0; a < dimension_; ++a) s += static_cast<double>(c[a]) * c[a];
  return spacing_ * std::sqrt(s);
}

PotentialSpec PotentialSpec::coulomb_like(double strength, double exponent) {
  PotentialSpec spec;
  spec.terms.push_back({strength, exponent});
  return spec;
}

PotentialSpec PotentialSpec::constant(double value) {
  PotentialSpec spec;
  spec.offset = value;
  return spec;
}

void PotentialSpec::validate(const Grid& grid) const {
  for (const auto& term : terms) {
    if (!(term.exponent > 0.0 && term.exponent < 1.5)) {
      throw ParameterError("potential exponent must lie in (0, 3/2), got " +
                           std::to_string(term.exponent));
    }
    if (!std::isfinite(term.strength)) throw ParameterError("potential strength must be finite");
  }
  if (!std::isfinite(offset)) throw ParameterError("potential offset must be finite");
  if (bounded_part) {
    const auto& table = *bounded_part;
    if (table.size() != grid.site_count()) {
      throw ShapeError("bounded potential table has " + std::to_string(table.size()) +
                       " entries, grid has " + std::to_string(grid.site_count()) + " sites");
    }
    for (std::size_t r = 0; r < table.size(); ++r) {
      const std::size_t minus = grid.displacement_index(r, 0);
      if (!std::isfinite(table[r]) || std::abs(table[r] - table[minus]) > 1e-12) {
        throw ParameterError("bounded potential table must be finite and even under r -> -r");
      }
    }
  }
}

bool PotentialSpec::is_zero() const {
  bool zero = offset == 0.0;
  for (const auto& term : terms) zero = zero && term.strength == 0.0;
  if (bounded_part) {
    for (double v : *bounded_part) zero = zero && v == 0.0;
  }
  return zero;
}

std::string PotentialSpec::describe() const {
  std::ostringstream out;
  out.precision(17);
  out << "terms=[";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out << ",";
    out << terms[i].strength << ":" << terms[i].exponent;
  }
  out << "] offset=" << offset;
  if (bounded_part) out << " bounded_part=" << bounded_part->size() << " entries";
  return out.str();
}

SampledPotential::SampledPotential(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.site_count()) {
    throw ShapeError("sampled potential size does not match the grid");
  }
}

Eigen::MatrixXd SampledPotential::pair_matrix() const {
  const auto m = static_cast<Eigen::Index>(grid_.site_count());
  Eigen::MatrixXd v(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) v(i, j) = between(i, j);
  }
  return v;
}

SampledPotential sample_potential(const PotentialSpec& spec, const Grid& grid) {
  spec.validate(grid);
  const double h = grid.spacing();
  std::vector<double> values(grid.site_count());
  for (std::size_t r = 0; r < values.size(); ++r) {
    // Cell half-width regularizes the singular self-displacement.
    const double dist = r == 0 ? 0.5 * h : grid.minimal_image_distance(r);
    double v = spec.offset;
    for (const auto& term : spec.terms) v += term.strength * std::pow(dist, -term.exponent);
    if (spec.bounded_part) v += (*spec.bounded_part)[r];
    values[r] = v;
  }
  return SampledPotential(grid, std::move(values));
}

FieldVector::FieldVector(Grid grid) : grid_(grid), values_(grid.site_count()) {}

FieldVector::FieldVector(Grid grid, std::vector<complex> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.site_count()) {
    throw ShapeError("field has " + std::to_string(values_.size()) + " values, grid has " +
                     std::to_string(grid_.site_count()) + " sites");
  }
}

double FieldVector::mass() const {
  double s = 0.0;
  for (const auto& v : values_) s += std::norm(v);
  return grid_.cell_volume() * s;
}

bool FieldVector::is_normalized(double tolerance) const {
  return std::abs(mass() - 1.0) <= tolerance;
}

FieldVector FieldVector::normalized() const {
  const double m = mass();
  if (!(m > 0.0)) throw ParameterError("cannot normalize a zero field");
  FieldVector out = *this;
  const double scale = 1.0 / std::sqrt(m);
  for (auto& v : out.values_) v *= scale;
  return out;
}

bool FieldVector::is_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const complex& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

Eigen::VectorXcd FieldVector::modes() const {
  const double w = std::sqrt(grid_.cell_volume());
  Eigen::VectorXcd c(static_cast<Eigen::Index>(values_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i) c[static_cast<Eigen::Index>(i)] = w * values_[i];
  return c;
}

FieldVector FieldVector::from_modes(Grid grid, const Eigen::VectorXcd& modes) {
  if (static_cast<std::size_t>(modes.size()) != grid.site_count()) {
    throw ShapeError("mode vector length does not match the grid");
  }
  const double w = 1.0 / std::sqrt(grid.cell_volume());
  std::vector<complex> values(grid.site_count());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = w * modes[static_cast<Eigen::Index>(i)];
  return FieldVector(grid, std::move(values));
}

SpectralTransform::SpectralTransform(const Grid& grid) : grid_(grid) {
  const int rank = grid.dimension();
  std::array<int, 3> dims{grid.sites_per_axis(), grid.sites_per_axis(), grid.sites_per_axis()};
  std::vector<complex> scratch_in(grid.site_count()), scratch_out(grid.site_count());
  auto* in = reinterpret_cast<fftw_complex*>(scratch_in.data());
  auto* out = reinterpret_cast<fftw_complex*>(scratch_out.data());
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft(rank, dims.data(), in, out, FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
  inverse_plan_ = fftw_plan_dft(rank, dims.data(), in, out, FFTW_BACKWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!forward_plan_ || !inverse_plan_) throw ParameterError("FFTW failed to create a plan");
}

SpectralTransform::~SpectralTransform() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void SpectralTransform::forward(std::span<const complex> in, std::span<complex> out) const {
  if (in.size() != grid_.site_count() || out.size() != grid_.site_count()) {
    throw ShapeError("spectral transform size mismatch");
  }
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_),
                   reinterpret_cast<fftw_complex*>(const_cast<complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

void SpectralTransform::inverse(std::span<const complex> in, std::span<complex> out) const {
  if (in.size() != grid_.site_count() || out.size() != grid_.site_count()) {
    throw ShapeError("spectral transform size mismatch");
  }
  fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_),
                   reinterpret_cast<fftw_complex*>(const_cast<complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / static_cast<double>(grid_.site_count());
  for (auto& v : out) v *= scale;
}

std::vector<double> laplacian_symbol(const Grid& grid) {
  const double h2 = grid.spacing() * grid.spacing();
  const int l = grid.sites_per_axis();
  std::vector<double> symbol(grid.site_count());
  for (std::size_t q = 0; q < symbol.size(); ++q) {
    auto c = grid.coordinates(q);
    double s = 0.0;
    for (int a = 0; a < grid.dimension(); ++a) {
      s += 1.0 - std::cos(2.0 * std::numbers::pi * c[a] / l);
    }
    symbol[q] = 2.0 * s / h2;
  }
  return symbol;
}

Eigen::MatrixXd laplacian_matrix(const Grid& grid) {
  const auto m = static_cast<Eigen::Index>(grid.site_count());
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto c = grid.coordinates(static_cast<std::size_t>(i));
    lap(i, i) += 2.0 * grid.dimension() * inv_h2;
    for (int a = 0; a < grid.dimension(); ++a) {
      for (int step : {-1, 1}) {
        auto n = c;
        n[a] += step;
        lap(i, static_cast<Eigen::Index>(grid.site_index(n))) -= inv_h2;
      }
    }
  }
  return lap;
}

FieldVector apply_negative_laplacian(const FieldVector& phi) {
  const Grid& grid = phi.grid();
  SpectralTransform fft(grid);
  const auto symbol = laplacian_symbol(grid);
  std::vector<complex> spectrum(grid.site_count()), out(grid.site_count());
  fft.forward(phi.values(), spectrum);
  for (std::size_t q = 0; q < spectrum.size(); ++q) spectrum[q] *= symbol[q];
  fft.inverse(spectrum, out);
  return FieldVector(grid, std::move(out));
}

std::vector<double> convolve_density(const SampledPotential& potential,
                                     std::span<const double> density) {
  const Grid& grid = potential.grid();
  const std::size_t m = grid.site_count();
  if (density.size() != m) {
    throw ShapeError("density has " + std::to_string(density.size()) + " values, grid has " +
                     std::to_string(m) + " sites");
  }
  SpectralTransform fft(grid);
  std::vector<complex> v(m), rho(m), v_hat(m), rho_hat(m), out(m);
  for (std::size_t i = 0; i < m; ++i) {
    v[i] = potential[i];
    rho[i] = density[i];
  }
  fft.forward(v, v_hat);
  fft.forward(rho, rho_hat);
  for (std::size_t q = 0; q < m; ++q) v_hat[q] *= rho_hat[q];
  fft.inverse(v_hat, out);
  std::vector<double> result(m);
  for (std::size_t i = 0; i < m; ++i) result[i] = grid.cell_volume() * out[i].real();
  return result;
}

double kinetic_quadratic_form(const FieldVector& phi) {
  const Grid& grid = phi.grid();
  SpectralTransform fft(grid);
  const auto symbol = laplacian_symbol(grid);
  std::vector<complex> spectrum(grid.site_count());
  fft.forward(phi.values(), spectrum);
  double s = 0.0;
  for (std::size_t q = 0; q < spectrum.size(); ++q) s += symbol[q] * std::norm(spectrum[q]);
  // Parseval for the unnormalized transform: sum |phi|^2 = sum |phi_hat|^2 / M.
  return grid.cell_volume() * s / static_cast<double>(grid.site_count());
}

FieldNorms norms(const FieldVector& phi) {
  FieldNorms n;
  const double mass = phi.mass();
  n.l2 = std::sqrt(mass);
  for (const auto& v : phi.values()) n.linf = std::max(n.linf, std::abs(v));
  n.h1 = std::sqrt(mass + kinetic_quadratic_form(phi));
  return n;
}

double lp_norm(const FieldVector& phi, double p) {
  if (!(p >= 1.0)) throw ParameterError("lp_norm needs p >= 1");
  double s = 0.0;
  for (const auto& v : phi.values()) s += std::pow(std::abs(v), p);
  return std::pow(phi.grid().cell_volume() * s, 1.0 / p);
}

InitialShape parse_initial_shape(const std::string& name) {
  if (name == "gaussian") return InitialShape::gaussian;
  if (name == "plane_wave") return InitialShape::plane_wave;
  if (name == "uniform") return InitialShape::uniform;
  if (name == "random") return InitialShape::random;
  throw ParameterError("unknown initial shape '" + name + "'");
}

std::string to_string(InitialShape shape) {
  switch (shape) {
    case InitialShape::gaussian: return "gaussian";
    case InitialShape::plane_wave: return "plane_wave";
    case InitialShape::uniform: return "uniform";
    case InitialShape::random: return "random";
  }
  return "unknown";
}

std::string InitialStateSpec::describe() const {
  std::ostringstream out;
  out.precision(17);
  out << "shape=" << to_string(shape) << " center=[";
  for (std::size_t i = 0; i < center.size(); ++i) out << (i ? "," : "") << center[i];
  out << "] width=" << width << " momentum=[";
  for (std::size_t i = 0; i < momentum.size(); ++i) out << (i ? "," : "") << momentum[i];
  out << "] seed=" << seed;
  return out.str();
}

FieldVector make_initial_state(const Grid& grid, const InitialStateSpec& spec) {
  const int d = grid.dimension();
  const int l = grid.sites_per_axis();
  const double h = grid.spacing();
  const double box = l * h;
  if (!spec.center.empty() && static_cast<int>(spec.center.size()) != d) {
    throw ParameterError("initial.center needs one value per axis");
  }
  if (!spec.momentum.empty() && static_cast<int>(spec.momentum.size()) != d) {
    throw ParameterError("initial.momentum needs one value per axis");
  }
  FieldVector phi(grid);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  for (std::size_t s = 0; s < grid.site_count(); ++s) {
    const auto c = grid.coordinates(s);
    double phase = 0.0;
    for (int a = 0; a < d; ++a) {
      const int k = spec.momentum.empty() ? 0 : spec.momentum[a];
      phase += 2.0 * std::numbers::pi * k * c[a] / l;
    }
    complex value;
    switch (spec.shape) {
      case InitialShape::gaussian: {
        if (!(spec.width > 0.0)) throw ParameterError("initial.width must be positive");
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
          const double centre = spec.center.empty() ? 0.5 * box : spec.center[a];
          double delta = std::fmod(c[a] * h - centre, box);
          if (delta >= 0.5 * box) delta -= box;
          if (delta < -0.5 * box) delta += box;
          r2 += delta * delta;
        }
        value = std::polar(std::exp(-r2 / (2.0 * spec.width * spec.width)), phase);
        break;
      }
      case InitialShape::plane_wave:
        value = std::polar(1.0, phase);
        break;
      case InitialShape::uniform:
        value = 1.0;
        break;
      case InitialShape::random: {
        const double re = normal(rng);
        const double im = normal(rng);
        value = complex(re, im);
        break;
      }
    }
    phi[s] = value;
  }
  return phi.normalized();
}

}  // namespace mflab
