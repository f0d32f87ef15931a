#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "mflab/coherent.hpp"
#include "mflab/error.hpp"
#include "mflab/fock.hpp"
#include "oracles.hpp"

using namespace mflab;
using mflab::oracle::Rng;

namespace {

std::vector<int> occ(const OccupationBasis& b, std::size_t i) {
  const auto o = b.occupation(i);
  return {o.begin(), o.end()};
}

FockState state(BasisPtr b, std::vector<int> n) { return FockState::basis_state(std::move(b), n); }

double distance(const FockState& a, const FockState& b) { return (a.amplitudes() - b.amplitudes()).norm(); }

}  // namespace

TEST(OccupationBasis, TwoModesCutoffTwo) {
  const auto b = OccupationBasis::create(2, 2);
  ASSERT_EQ(b->dimension(), 6u);
  const std::vector<std::vector<int>> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(occ(*b, i), expected[i]);
  EXPECT_EQ(b->sector_begin(2), 3u);
  EXPECT_EQ(b->sector_of(4), 2);
}

TEST(OccupationBasis, SingleModeCutoffFive) {
  const auto b = OccupationBasis::create(1, 5);
  ASSERT_EQ(b->dimension(), 6u);
  for (int n = 0; n <= 5; ++n) EXPECT_EQ(occ(*b, n), std::vector<int>{n});
}

TEST(OccupationBasis, ThreeModesCutoffTwo) {
  EXPECT_EQ(OccupationBasis::create(3, 2)->dimension(), 10u);
  EXPECT_EQ(OccupationBasis::sector_dimension(3, 2), 6u);
  EXPECT_EQ(OccupationBasis::total_dimension(6, 8), 3003u);
}

TEST(OccupationBasis, IndexRankAndNeighbours) {
  const auto b = OccupationBasis::create(4, 5);
  for (std::size_t i = 0; i < b->dimension(); ++i) {
    const auto n = occ(*b, i);
    EXPECT_EQ(b->index_of(n), i);
    EXPECT_EQ(b->extended_rank(std::span<const int>(n)), i);
    for (int m = 0; m < 4; ++m) {
      auto lower = n;
      if (lower[m] > 0) {
        --lower[m];
        EXPECT_EQ(b->lowered(i, m), static_cast<std::ptrdiff_t>(*b->index_of(lower)));
      } else {
        EXPECT_EQ(b->lowered(i, m), -1);
      }
      auto upper = n;
      ++upper[m];
      const auto r = b->raised(i, m);
      if (b->sector_of(i) < 5) {
        EXPECT_EQ(r, static_cast<std::ptrdiff_t>(*b->index_of(upper)));
      } else {
        EXPECT_EQ(r, -1);
        EXPECT_GE(b->extended_rank(std::span<const int>(upper)), b->dimension());
      }
    }
  }
  EXPECT_FALSE(b->index_of(std::vector<int>{3, 3, 0, 0}).has_value());
  EXPECT_FALSE(b->index_of(std::vector<int>{1, 0}).has_value());
}

TEST(OccupationBasis, CapacityLimit) {
  EXPECT_THROW(OccupationBasis::create(20, 20, 1'000'000), CapacityError);
  EXPECT_THROW(OccupationBasis::create(0, 2), ParameterError);
}

TEST(Ladder, CreateOnVacuum) {
  const auto b = OccupationBasis::create(2, 3);
  EXPECT_LT(distance(apply_create(0, FockState::vacuum(b)), state(b, {1, 0})), 1e-15);
}

TEST(Ladder, AnnihilateTwoQuanta) {
  const auto b = OccupationBasis::create(2, 3);
  const FockState out = apply_annihilate(0, state(b, {2, 0}));
  EXPECT_LT(distance(out, std::sqrt(2.0) * state(b, {1, 0})), 1e-15);
  EXPECT_EQ(apply_annihilate(1, state(b, {2, 0})).norm(), 0.0);
}

TEST(Ladder, CanonicalCommutationBelowCutoff) {
  Rng rng(1);
  const auto b = OccupationBasis::create(3, 5);
  const FockState psi = oracle::random_state(rng, b, 4);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const FockState comm = apply_annihilate(i, apply_create(j, psi)) - apply_create(j, apply_annihilate(i, psi));
      const FockState expected = complex(i == j ? 1.0 : 0.0) * psi;
      EXPECT_LT(distance(comm, expected), 1e-13) << i << "," << j;
    }
  }
}

TEST(Ladder, SmearedOperatorsUseConjugateInAnnihilation) {
  Rng rng(1);
  const auto b = OccupationBasis::create(3, 4);
  const FockState psi = oracle::random_state(rng, b, 3);
  const Eigen::VectorXcd f = oracle::random_vector(rng, 3);
  FockState create(b), annihilate(b);
  for (int i = 0; i < 3; ++i) {
    create += f(i) * apply_create(i, psi);
    annihilate += std::conj(f(i)) * apply_annihilate(i, psi);
  }
  EXPECT_LT(distance(apply_create(f, psi), create), 1e-13);
  EXPECT_LT(distance(apply_annihilate(f, psi), annihilate), 1e-13);
}

TEST(Ladder, LeakageIsReportedAtTheCutoff) {
  const auto b = OccupationBasis::create(2, 2);
  LeakageMeter meter;
  const FockState out = apply_create(0, state(b, {2, 0}), &meter);
  EXPECT_EQ(out.norm(), 0.0);
  EXPECT_NEAR(meter.mass(), 3.0, 1e-14);
  EXPECT_THROW(meter.check(1e-8, "test"), TruncationError);
  meter.reset();
  EXPECT_NO_THROW(meter.check(1e-8, "test"));
}

TEST(Ladder, RejectsBadModes) {
  const auto b = OccupationBasis::create(2, 2);
  EXPECT_THROW(apply_create(2, FockState::vacuum(b)), ParameterError);
  EXPECT_THROW(apply_create(Eigen::VectorXcd::Ones(3), FockState::vacuum(b)), ShapeError);
}

TEST(SecondQuantize, IdentityIsNumberOperator) {
  Rng rng(1);
  const auto b = OccupationBasis::create(3, 4);
  for (int n = 0; n <= 4; ++n) {
    const FockState psi = oracle::random_sector_state(rng, b, n);
    EXPECT_LT(distance(second_quantize(ModeOperator::identity(3), psi), complex(n) * psi), 1e-13);
  }
}

TEST(SecondQuantize, ProjectorCountsOneMode) {
  const auto b = OccupationBasis::create(2, 3);
  const FockState psi = state(b, {1, 1});
  const auto P = ModeOperator::projector(Eigen::Vector2cd(1.0, 0.0));
  EXPECT_LT(distance(second_quantize(P, psi), psi), 1e-15);
}

TEST(SecondQuantize, MatchesSymmetricTensorOracle) {
  Rng rng(1);
  const auto b = OccupationBasis::create(3, 2);
  const oracle::SymmetricTensor tensor(3, 2);
  const ModeOperator J(oracle::random_hermitian(rng, 3), true);
  const FockState psi = oracle::random_sector_state(rng, b, 2);
  const FockState expected = tensor.extract(tensor.one_body(J.matrix(), tensor.embed(psi)), b);
  EXPECT_LT(distance(second_quantize(J, psi), expected), 1e-13);
}

TEST(SecondQuantize, ShapeMismatch) {
  const auto b = OccupationBasis::create(3, 2);
  EXPECT_THROW(second_quantize(ModeOperator::identity(2), FockState::vacuum(b)), ShapeError);
  EXPECT_THROW(ModeOperator(Eigen::MatrixXcd::Ones(2, 3)), ShapeError);
}

TEST(Moments, Vacuum) {
  const auto b = OccupationBasis::create(3, 3);
  const FockState vac = FockState::vacuum(b);
  EXPECT_EQ(number_moment(0, vac), 1.0);
  for (int j = 1; j <= 3; ++j) EXPECT_EQ(number_moment(j, vac), 0.0);
  EXPECT_EQ(parity_norms(vac).even, 1.0);
  EXPECT_EQ(parity_norms(vac).odd, 0.0);
}

TEST(Moments, TwoQuantaSingleMode) {
  const auto b = OccupationBasis::create(1, 4);
  EXPECT_DOUBLE_EQ(number_moment(2, state(b, {2})), 4.0);
}

TEST(Moments, CoherentMeanMatchesNormSquared) {
  const auto b = OccupationBasis::create(1, 40);
  const FockState psi = coherent_state(Eigen::VectorXcd::Constant(1, std::sqrt(2.0)), b);
  EXPECT_NEAR(number_moment(1, psi), 2.0, 1e-10);
}

TEST(Moments, SectorToolsAgree) {
  Rng rng(1);
  const auto b = OccupationBasis::create(2, 5);
  const FockState psi = oracle::random_state(rng, b, 5);
  const auto norms = sector_norms(psi);
  ASSERT_EQ(norms.size(), 6u);
  double even = 0.0, odd = 0.0, moment = 0.0, total = 0.0;
  for (int n = 0; n <= 5; ++n) {
    EXPECT_NEAR(project_sector(n, psi).norm(), norms[n], 1e-14);
    (n % 2 ? odd : even) += norms[n] * norms[n];
    moment += n * n * norms[n] * norms[n];
    total += norms[n] * norms[n];
  }
  EXPECT_NEAR(total, 1.0, 1e-14);
  EXPECT_NEAR(parity_norms(psi).even, std::sqrt(even), 1e-14);
  EXPECT_NEAR(parity_norms(psi).odd, std::sqrt(odd), 1e-14);
  EXPECT_NEAR(number_moment(2, psi), moment, 1e-12);
  const FockState shifted = apply_number_power(psi, 0.5, 1.0);
  EXPECT_NEAR(shifted.squared_norm(), number_moment(1, psi) + 1.0, 1e-12);
}

TEST(Adjointness, CreationAndAnnihilation) {
  Rng rng(1);
  const auto b = OccupationBasis::create(3, 5);
  const FockState phi = oracle::random_state(rng, b, 4);
  const FockState psi = oracle::random_state(rng, b, 4);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT(std::abs(apply_create(i, phi).dot(psi) - phi.dot(apply_annihilate(i, psi))), 1e-14);
  }
}

TEST(FockState, ArithmeticAndErrors) {
  const auto b = OccupationBasis::create(2, 2);
  const auto other = OccupationBasis::create(2, 3);
  EXPECT_THROW(FockState::vacuum(b) + FockState::vacuum(other), ShapeError);
  EXPECT_THROW(FockState(b).normalized(), ParameterError);
  EXPECT_THROW(FockState::basis_state(b, std::vector<int>{3, 0}), ParameterError);
  const FockState v = FockState::vacuum(b);
  EXPECT_EQ((complex(2.0) * v).norm(), 2.0);
}

TEST(FockState, CsvListsNonzeroAmplitudes) {
  const auto b = OccupationBasis::create(2, 2);
  std::ostringstream out;
  write_state_csv(out, state(b, {1, 1}));
  EXPECT_NE(out.str().find("4,1,1,1,0"), std::string::npos) << out.str();
}
