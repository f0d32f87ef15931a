#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mflab/error.hpp"
#include "mflab/lattice.hpp"
#include "oracles.hpp"

using namespace mflab;
using mflab::oracle::Rng;

namespace {

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / std::max(den, 1e-300);
}

// Circulant stencil built by hand: 2d/h^2 on the diagonal, -1/h^2 per neighbour.
Eigen::MatrixXd stencil(const Grid& g) {
  const auto M = static_cast<int>(g.site_count());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
  const double w = 1.0 / (g.spacing() * g.spacing());
  for (int s = 0; s < M; ++s) {
    const auto x = g.coordinates(s);
    A(s, s) += 2.0 * g.dimension() * w;
    for (int a = 0; a < g.dimension(); ++a) {
      for (int step : {-1, 1}) {
        auto y = x;
        y[a] += step;
        A(s, static_cast<int>(g.site_index(y))) -= w;
      }
    }
  }
  return A;
}

}  // namespace

TEST(Grid, IndexRoundTrip) {
  const Grid g(3, 4, 0.5);
  EXPECT_EQ(g.site_count(), 64u);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.125);
  for (std::size_t s = 0; s < g.site_count(); ++s) EXPECT_EQ(g.site_index(g.coordinates(s)), s);
  EXPECT_EQ(g.coordinates(1 + 4 * 2 + 16 * 3), (std::array<int, 3>{1, 2, 3}));
}

TEST(Grid, MinimalImageTieStaysPositive) {
  const Grid g(1, 6, 1.0);
  EXPECT_EQ(g.minimal_image(3)[0], 3);
  EXPECT_EQ(g.minimal_image(4)[0], -2);
  EXPECT_EQ(g.minimal_image(5)[0], -1);
  EXPECT_DOUBLE_EQ(g.minimal_image_distance(4), 2.0);
  EXPECT_EQ(g.displacement_index(5, 1), 2u);
}

TEST(Grid, RejectsBadParameters) {
  EXPECT_THROW(Grid(4, 4, 1.0), ParameterError);
  EXPECT_THROW(Grid(1, 1, 1.0), ParameterError);
  EXPECT_THROW(Grid(1, 4, 0.0), ParameterError);
}

TEST(SamplePotential, PowerLawAtDisplacementTwo) {
  const Grid g(1, 8, 1.0);
  const auto V = sample_potential(PotentialSpec::coulomb_like(1.0, 1.0), g);
  EXPECT_DOUBLE_EQ(V[2], 0.5);
}

TEST(SamplePotential, RegularizedAtOrigin) {
  const Grid g(1, 8, 1.0);
  const auto V = sample_potential(PotentialSpec::coulomb_like(1.0, 1.0), g);
  EXPECT_DOUBLE_EQ(V[0], 2.0);
}

TEST(SamplePotential, ConstantWhenNoTerms) {
  const Grid g(2, 4, 0.7);
  const auto V = sample_potential(PotentialSpec::constant(3.0), g);
  for (double v : V.values()) EXPECT_DOUBLE_EQ(v, 3.0);
}

TEST(SamplePotential, RejectsExponentOutsideRange) {
  const Grid g(1, 8, 1.0);
  EXPECT_THROW(sample_potential(PotentialSpec::coulomb_like(1.0, 1.5), g), ParameterError);
  EXPECT_THROW(sample_potential(PotentialSpec::coulomb_like(1.0, 0.0), g), ParameterError);
}

TEST(SamplePotential, BoundedTableMustBeEven) {
  const Grid g(1, 4, 1.0);
  PotentialSpec spec;
  spec.bounded_part = std::vector<double>{0.0, 1.0, 0.0, 0.5};
  EXPECT_THROW(sample_potential(spec, g), ParameterError);
  spec.bounded_part = std::vector<double>{0.0, 1.0};
  EXPECT_THROW(sample_potential(spec, g), ShapeError);
}

TEST(Convolution, PointMassReturnsPotential) {
  const Grid g(2, 5, 0.7);
  const auto V = sample_potential(PotentialSpec::coulomb_like(0.8, 0.9), g);
  std::vector<double> rho(g.site_count(), 0.0);
  rho[0] = 1.0 / g.cell_volume();
  const auto out = convolve_density(V, rho);
  for (std::size_t x = 0; x < g.site_count(); ++x) EXPECT_NEAR(out[x], V.between(x, 0), 1e-12);
}

TEST(Convolution, UniformDensityGivesMeanPotential) {
  const Grid g(1, 8, 0.5);
  const auto V = sample_potential(PotentialSpec::coulomb_like(1.0, 1.0), g);
  std::vector<double> rho(g.site_count(), 1.0 / (g.site_count() * g.cell_volume()));
  double mean = 0.0;
  for (double v : V.values()) mean += v / static_cast<double>(g.site_count());
  for (double c : convolve_density(V, rho)) EXPECT_NEAR(c, mean, 1e-12);
}

TEST(Convolution, MatchesDirectSumOnRandomDensity) {
  Rng rng(1);
  const Grid g(1, 8, 1.0);
  const auto V = sample_potential(PotentialSpec::coulomb_like(0.6, 1.2), g);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> rho(g.site_count());
  for (double& r : rho) r = u(rng);
  EXPECT_LT(rel_error(convolve_density(V, rho), oracle::direct_convolution(V, rho)), 1e-10);
}

TEST(Norms, ConstantField) {
  const Grid g(2, 4, 0.5);
  FieldVector phi(g);
  for (auto& v : phi.values()) v = 1.0 / std::sqrt(g.site_count() * g.cell_volume());
  const auto n = norms(phi);
  EXPECT_NEAR(n.l2, 1.0, 1e-14);
  EXPECT_NEAR(n.h1, 1.0, 1e-14);
}

TEST(Norms, SingleSiteSpike) {
  const Grid g(3, 4, 0.5);
  FieldVector phi(g);
  phi[5] = complex(0.6, -0.8) * 3.0;
  EXPECT_NEAR(norms(phi).l2, 3.0 * std::pow(0.5, 1.5), 1e-14);
  EXPECT_NEAR(norms(phi).linf, 3.0, 1e-14);
  EXPECT_NEAR(lp_norm(phi, 4.0), 3.0 * std::pow(0.125, 0.25), 1e-13);
}

TEST(Norms, PlaneWaveH1MatchesQuadraticForm) {
  const Grid g(1, 8, 1.0);
  FieldVector phi(g);
  for (std::size_t x = 0; x < 8; ++x) {
    phi[x] = std::polar(1.0 / std::sqrt(8.0), 2.0 * std::numbers::pi * x / 8.0);
  }
  const double symbol = std::pow(2.0 * std::sin(std::numbers::pi / 8.0), 2);
  EXPECT_NEAR(std::pow(norms(phi).h1, 2), 1.0 + symbol, 1e-13);

  // <phi, (1 - Delta_h) phi> from the hand-built stencil.
  const Eigen::VectorXcd v = phi.modes();
  const double form = (v.adjoint() * (Eigen::MatrixXd::Identity(8, 8) + stencil(g)) * v)(0).real();
  EXPECT_NEAR(std::pow(norms(phi).h1, 2), form, 1e-13);
}

TEST(Laplacian, SpectralMatchesStencilOnSeveralGrids) {
  Rng rng(1);
  for (const Grid& g : {Grid(1, 16, 0.3), Grid(2, 8, 0.5), Grid(3, 4, 1.0), Grid(1, 64, 1.0)}) {
    const auto phi = oracle::random_field(rng, g);
    const auto spectral = apply_negative_laplacian(phi);
    Eigen::VectorXcd v(g.site_count());
    for (std::size_t i = 0; i < g.site_count(); ++i) v(i) = phi[i];
    const Eigen::VectorXcd dense = stencil(g).cast<complex>() * v;
    double err = 0.0;
    for (std::size_t i = 0; i < g.site_count(); ++i) err = std::max(err, std::abs(spectral[i] - dense(i)));
    EXPECT_LT(err, 1e-10 * dense.cwiseAbs().maxCoeff()) << g.dimension() << "D L=" << g.sites_per_axis();
    EXPECT_LT((laplacian_matrix(g) - stencil(g)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Laplacian, SymbolIsNonNegativeAndZeroAtOrigin) {
  const auto s = laplacian_symbol(Grid(2, 6, 0.5));
  EXPECT_DOUBLE_EQ(s[0], 0.0);
  for (double v : s) EXPECT_GE(v, 0.0);
}

TEST(InitialState, ShapesAreNormalized) {
  const Grid g(2, 6, 0.5);
  for (auto shape : {InitialShape::gaussian, InitialShape::plane_wave, InitialShape::uniform,
                     InitialShape::random}) {
    InitialStateSpec spec;
    spec.shape = shape;
    spec.momentum = {1, 0};
    EXPECT_TRUE(make_initial_state(g, spec).is_normalized(1e-12)) << to_string(shape);
  }
  EXPECT_EQ(parse_initial_shape("plane_wave"), InitialShape::plane_wave);
  EXPECT_THROW(parse_initial_shape("square"), ParameterError);
}

TEST(FieldVector, ModesRoundTrip) {
  Rng rng(1);
  const Grid g(2, 3, 0.4);
  const auto phi = oracle::random_field(rng, g);
  EXPECT_NEAR(phi.modes().norm(), 1.0, 1e-14);
  const auto back = FieldVector::from_modes(g, phi.modes());
  for (std::size_t i = 0; i < g.site_count(); ++i) EXPECT_NEAR(std::abs(back[i] - phi[i]), 0.0, 1e-14);
}
