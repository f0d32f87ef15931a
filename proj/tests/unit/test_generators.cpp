#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "mflab/coherent.hpp"
#include "mflab/generators.hpp"
#include "oracles.hpp"

using namespace mflab;
using mflab::oracle::Rng;

namespace {

using Dense = Eigen::MatrixXcd;

// Ladder operators as dense matrices, built directly from occupation vectors.
struct Ladder {
  explicit Ladder(BasisPtr b) : basis(std::move(b)) {
    const auto D = static_cast<int>(basis->dimension());
    for (int i = 0; i < basis->modes(); ++i) {
      Dense a = Dense::Zero(D, D);
      for (int s = 0; s < D; ++s) {
        const auto o = basis->occupation(s);
        std::vector<int> n(o.begin(), o.end());
        if (n[i] == 0) continue;
        const double amp = std::sqrt(double(n[i]));
        --n[i];
        a(static_cast<int>(*basis->index_of(n)), s) = amp;
      }
      annihilate.push_back(a);
      create.push_back(a.adjoint());
    }
  }
  Dense at_most(int M) const {
    const auto D = static_cast<int>(basis->dimension());
    Dense chi = Dense::Zero(D, D);
    for (int s = 0; s < D; ++s) chi(s, s) = basis->sector_of(s) <= M ? 1.0 : 0.0;
    return chi;
  }
  BasisPtr basis;
  std::vector<Dense> annihilate, create;
};

// Top-left block belonging to the smaller cutoff.
Dense restrict(const Dense& m, const OccupationBasis& b) {
  const auto n = static_cast<int>(b.dimension());
  return m.topLeftCorner(n, n);
}

Dense dense(const SparseGenerator& G) { return Dense(G.matrix()); }

struct Instance {
  Grid grid{1, 3, 0.8};
  SampledPotential V = sample_potential(PotentialSpec::coulomb_like(0.7, 1.0), grid);
  FieldVector phi;
  explicit Instance(Rng& rng) : phi(oracle::random_field(rng, grid)) {}
};

Dense oracle_L2(const Ladder& L, const SampledPotential& V, const Eigen::VectorXcd& c) {
  const int M = L.basis->modes();
  const Eigen::MatrixXd W = V.pair_matrix();
  const Eigen::MatrixXd lap = laplacian_matrix(V.grid());
  const auto D = static_cast<int>(L.basis->dimension());
  Dense out = Dense::Zero(D, D);
  for (int x = 0; x < M; ++x) {
    double mean_field = 0.0;
    for (int y = 0; y < M; ++y) mean_field += W(x, y) * std::norm(c(y));
    out += mean_field * L.create[x] * L.annihilate[x];
    for (int y = 0; y < M; ++y) {
      out += lap(x, y) * L.create[x] * L.annihilate[y];
      out += W(x, y) * std::conj(c(x)) * c(y) * L.create[y] * L.annihilate[x];
      const Dense pair = 0.5 * W(x, y) * c(x) * c(y) * L.create[x] * L.create[y];
      out += pair + pair.adjoint();
    }
  }
  return out;
}

Dense oracle_L3(const Ladder& L, const SampledPotential& V, const Eigen::VectorXcd& c, int N,
                int cutoff) {
  const int M = L.basis->modes();
  const Eigen::MatrixXd W = V.pair_matrix();
  const Dense chi = L.at_most(cutoff);
  const auto D = static_cast<int>(L.basis->dimension());
  Dense out = Dense::Zero(D, D);
  for (int x = 0; x < M; ++x) {
    for (int y = 0; y < M; ++y) {
      out += W(x, y) * std::conj(c(y)) * L.create[x] * L.annihilate[y] * chi * L.annihilate[x];
      out += W(x, y) * c(y) * L.create[x] * chi * L.create[y] * L.annihilate[x];
    }
  }
  return out / std::sqrt(double(N));
}

Dense oracle_L4(const Ladder& L, const SampledPotential& V, int N) {
  const int M = L.basis->modes();
  const Eigen::MatrixXd W = V.pair_matrix();
  const auto D = static_cast<int>(L.basis->dimension());
  Dense out = Dense::Zero(D, D);
  for (int x = 0; x < M; ++x) {
    for (int y = 0; y < M; ++y) {
      out += W(x, y) * L.create[x] * L.create[y] * L.annihilate[x] * L.annihilate[y];
    }
  }
  return out / (2.0 * N);
}

double max_abs(const Dense& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Hamiltonian, FreeCaseIsSecondQuantizedLaplacian) {
  const Grid g(1, 4, 0.5);
  const auto V = sample_potential(PotentialSpec{}, g);
  const auto b = OccupationBasis::create(4, 3);
  const auto H = assemble_hamiltonian(3, V, b);
  const auto K = second_quantization_generator(ModeOperator(laplacian_matrix(g).cast<complex>()), b);
  EXPECT_LT(max_abs(dense(H) - dense(K)), 1e-14);
  const Dense sector1 = dense(H).block(1, 1, 4, 4);
  EXPECT_LT(max_abs(sector1 - laplacian_matrix(g).cast<complex>()), 1e-14);
}

TEST(Hamiltonian, InteractionVanishesInSectorOne) {
  const Grid g(2, 3, 1.0);
  const auto V = sample_potential(PotentialSpec::coulomb_like(1.3, 1.0), g);
  const auto b = OccupationBasis::create(9, 2);
  const Dense H = dense(assemble_hamiltonian(2, V, b));
  EXPECT_LT(max_abs(H.block(1, 1, 9, 9) - laplacian_matrix(g).cast<complex>()), 1e-13);
}

TEST(Hamiltonian, MatchesFirstQuantizedOracle) {
  for (auto [L, N] : {std::pair{2, 2}, std::pair{3, 3}, std::pair{4, 2}}) {
    const Grid g(1, L, 1.0);
    const auto V = sample_potential(PotentialSpec::coulomb_like(0.5, 1.0), g);
    const auto b = OccupationBasis::create(L, N);
    const oracle::SymmetricTensor tensor(L, N);
    const Dense expected = tensor.hamiltonian_in_sector(V, b);
    const auto begin = static_cast<int>(b->sector_begin(N));
    const Dense block = dense(assemble_hamiltonian(N, V, b)).block(begin, begin, expected.rows(), expected.cols());
    EXPECT_LT(max_abs(block - expected), 1e-12) << "L=" << L << " N=" << N;
  }
}

TEST(Hamiltonian, PreservesSectors) {
  const Grid g(1, 4, 1.0);
  const auto V = sample_potential(PotentialSpec::coulomb_like(0.5, 1.0), g);
  const auto H = assemble_hamiltonian(3, V, OccupationBasis::create(4, 5));
  EXPECT_EQ(H.sector_shifts(), std::set<int>{0});
  EXPECT_LT(H.hermiticity_defect(), 1e-12);
}

TEST(FluctuationGenerators, MatchDenseLadderProducts) {
  Rng rng(1);
  const Instance in(rng);
  const int cutoff = 4, N = 5;
  const auto b = OccupationBasis::create(3, cutoff);
  const Ladder big(OccupationBasis::create(3, cutoff + 2));
  const Eigen::VectorXcd c = in.phi.modes();
  EXPECT_LT(max_abs(dense(assemble_L2(in.phi, in.V, b)) - restrict(oracle_L2(big, in.V, c), *b)), 1e-13);
  EXPECT_LT(max_abs(dense(assemble_L3(in.phi, in.V, N, b)) -
                    restrict(oracle_L3(big, in.V, c, N, 1000), *b)), 1e-13);
  EXPECT_LT(max_abs(dense(assemble_L4(in.V, N, b)) - restrict(oracle_L4(big, in.V, N), *b)), 1e-13);
}

TEST(FluctuationGenerators, TruncatedSpotEntries) {
  Rng rng(1);
  const Instance in(rng);
  const auto b = OccupationBasis::create(3, 3);
  ASSERT_LE(b->dimension(), 20u);
  const Ladder big(OccupationBasis::create(3, 5));
  const Eigen::VectorXcd c = in.phi.modes();
  const int N = 4, M = 2;
  const Dense expected = restrict(oracle_L2(big, in.V, c) + oracle_L3(big, in.V, c, N, M) +
                                  oracle_L4(big, in.V, N), *b);
  EXPECT_LT(max_abs(dense(assemble_truncated(in.phi, in.V, N, M, b)) - expected), 1e-13);
}

TEST(FluctuationGenerators, TruncationAboveCutoffIsFull) {
  Rng rng(1);
  const Instance in(rng);
  const auto b = OccupationBasis::create(3, 5);
  const Dense full = dense(assemble_L2(in.phi, in.V, b)) + dense(assemble_L3(in.phi, in.V, 3, b)) +
                     dense(assemble_L4(in.V, 3, b));
  EXPECT_LT(max_abs(dense(assemble_truncated(in.phi, in.V, 3, 5, b)) - full), 1e-14);
  EXPECT_LT(max_abs(dense(assemble_truncated(in.phi, in.V, 3, 50, b)) - full), 1e-14);
}

TEST(FluctuationGenerators, ZeroTruncationOnlyChangesCubicEntries) {
  Rng rng(1);
  const Instance in(rng);
  const auto b = OccupationBasis::create(3, 5);
  const auto full = assemble_truncated(in.phi, in.V, 3, 5, b);
  const auto cut = assemble_truncated(in.phi, in.V, 3, 0, b);
  const Dense diff = dense(full) - dense(cut);
  EXPECT_GT(max_abs(diff), 0.1);
  for (int j = 0; j < diff.cols(); ++j) {
    for (int i = 0; i < diff.rows(); ++i) {
      if (std::abs(diff(i, j)) > 1e-13) EXPECT_EQ(std::abs(b->sector_of(i) - b->sector_of(j)), 1);
    }
  }
  // Only the vacuum -> one-particle entries of L3 survive at M = 0.
  const Dense c = dense(cut) - dense(assemble_L2(in.phi, in.V, b)) - dense(assemble_L4(in.V, 3, b));
  const auto n1 = static_cast<int>(b->sector_begin(2));
  EXPECT_LT(max_abs(c.bottomRightCorner(c.rows() - n1, c.cols() - n1)), 1e-14);
}

TEST(FluctuationGenerators, L3ScalesAsInverseRootN) {
  Rng rng(1);
  const Instance in(rng);
  const auto b = OccupationBasis::create(3, 4);
  const Dense a = dense(assemble_L3(in.phi, in.V, 3, b));
  const Dense q = dense(assemble_L3(in.phi, in.V, 12, b));
  for (int j = 0; j < a.cols(); ++j) {
    for (int i = 0; i < a.rows(); ++i) {
      if (std::abs(q(i, j)) > 1e-14) EXPECT_NEAR(std::abs(a(i, j) / q(i, j) - 2.0), 0.0, 1e-12);
    }
  }
}

TEST(FluctuationGenerators, L4DoesNotDependOnTime) {
  const Grid g(1, 4, 1.0);
  const auto V = sample_potential(PotentialSpec::coulomb_like(0.5, 1.0), g);
  const auto b = OccupationBasis::create(4, 4);
  EXPECT_EQ(max_abs(dense(assemble_L4(V, 3, b)) - dense(assemble_L4(V, 3, b))), 0.0);
  EXPECT_EQ(assemble_L4(V, 3, b).sector_shifts(), std::set<int>{0});
}

TEST(FluctuationGenerators, HermitianWithExpectedSectorShifts) {
  Rng rng(1);
  const Instance in(rng);
  const auto b = OccupationBasis::create(3, 6);
  const auto L2 = assemble_L2(in.phi, in.V, b);
  const auto L3 = assemble_L3(in.phi, in.V, 2, b);
  const auto L4 = assemble_L4(in.V, 2, b);
  const auto LM = assemble_truncated(in.phi, in.V, 2, 3, b);
  for (const auto* G : {&L2, &L3, &L4, &LM}) EXPECT_LT(G->hermiticity_defect(), 1e-12) << G->info().label;
  EXPECT_EQ(L2.sector_shifts(), (std::set<int>{-2, 0, 2}));
  EXPECT_EQ(L3.sector_shifts(), (std::set<int>{-1, 1}));
  EXPECT_EQ(L4.sector_shifts(), std::set<int>{0});
}

TEST(PhaseL0, EmptyIntervalAndQuadrature) {
  const Grid g(1, 6, 1.0);
  const auto V = sample_potential(PotentialSpec::coulomb_like(0.5, 1.0), g);
  const auto traj = evolve_hartree(make_initial_state(g, {}), V, 1e-3, 0.2, 10);
  EXPECT_EQ(phase_L0(traj, V, 4, 0.1, 0.1), 0.0);

  double expected = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const auto& phi = traj.states()[k];
    double s = 0.0;
    for (std::size_t x = 0; x < 6; ++x) {
      for (std::size_t y = 0; y < 6; ++y) s += V.between(x, y) * std::norm(phi[x]) * std::norm(phi[y]);
    }
    expected += traj.spacing() * s;
  }
  EXPECT_NEAR(phase_L0(traj, V, 4, 0.0, 0.2), 2.0 * expected, 1e-12);
}

TEST(SecondQuantizationGenerator, AgreesWithDirectApplication) {
  Rng rng(1);
  const auto b = OccupationBasis::create(3, 4);
  const ModeOperator J(oracle::random_hermitian(rng, 3), true);
  const FockState psi = oracle::random_state(rng, b, 4);
  const auto G = second_quantization_generator(J, b);
  EXPECT_LT((G.apply(psi).amplitudes() - second_quantize(J, psi).amplitudes()).norm(), 1e-13);
}

TEST(WeylGenerator, IsIAStarMinusA) {
  Rng rng(1);
  const auto b = OccupationBasis::create(2, 5);
  const Eigen::VectorXcd f = oracle::random_vector(rng, 2);
  const FockState psi = oracle::random_state(rng, b, 4);
  const auto G = weyl_generator(f, b);
  const FockState expected = complex(0.0, 1.0) * (apply_create(f, psi) - apply_annihilate(f, psi));
  EXPECT_LT((G.apply(psi).amplitudes() - expected.amplitudes()).norm(), 1e-13);
  EXPECT_LT(G.hermiticity_defect(), 1e-14);
}

TEST(SparseGenerator, OverflowAndNormBounds) {
  Rng rng(1);
  const auto b = OccupationBasis::create(2, 3);
  const Eigen::VectorXcd f = oracle::random_vector(rng, 2);
  const auto G = weyl_generator(f, b);
  const FockState top = oracle::random_sector_state(rng, b, 3);
  // Everything that a*(f) would push into sector 4 is overflow.
  const auto big = OccupationBasis::create(2, 4);
  FockState lifted(big);
  lifted.amplitudes().head(b->dimension()) = top.amplitudes();
  const double escaped = apply_create(f, lifted).amplitudes().tail(big->dimension() - b->dimension()).norm();
  EXPECT_NEAR(G.overflow_norm(top.amplitudes()), escaped, 1e-13);

  Eigen::SelfAdjointEigenSolver<Dense> eig(dense(G));
  EXPECT_GE(G.one_norm() + 1e-12, eig.eigenvalues().cwiseAbs().maxCoeff());
  std::ostringstream out;
  G.write_coordinates(out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "row,col,re,im");
}
