#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "mflab/error.hpp"
#include "mflab/experiments.hpp"

using namespace mflab;

namespace {

RateConfig small_scan() {
  RateConfig c;
  c.setup.grid = Grid(1, 4, 1.0);
  c.N_list = {2, 3, 4};
  c.t_list = {0.25, 0.5};
  return c;
}

}  // namespace

TEST(Fit, ExactPowerLaw) {
  const std::vector<double> N{2, 3, 4, 6, 8};
  std::vector<double> D;
  for (double n : N) D.push_back(0.3 / n);
  const SlopeFit f = fit_loglog(N, D);
  EXPECT_FALSE(f.degenerate);
  EXPECT_NEAR(f.slope, -1.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 0.3, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_EQ(f.points, 5);
}

TEST(Fit, DegenerateCases) {
  EXPECT_TRUE(fit_loglog({2, 4}, {1.0, 0.5}).degenerate);
  EXPECT_TRUE(fit_loglog({2, 4, 8}, {1.0, 1e-15, 0.5}).degenerate);
  EXPECT_THROW(fit_loglog({2, 4, 8}, {1.0, 0.5}), ShapeError);
}

TEST(Fit, Linear) {
  const SlopeFit f = fit_linear({0.0, 1.0, 2.0}, {1.0, 3.0, 5.0});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
}

TEST(RateScan, FreeEvolutionHasNoError) {
  RateConfig c = small_scan();
  c.setup.potential = PotentialSpec{};
  c.setup.initial.shape = InitialShape::random;
  c.N_list = {2, 3, 4, 6};
  c.t_list = {0.5, 1.0};
  for (const auto& p : rate_scan(c).points) EXPECT_LE(p.D, 1e-10) << p.N << " " << p.t;

  // Roundoff of the random datum sits near 1e-13, above the fit floor; the
  // smooth default datum stays below it.
  c.setup.initial = {};
  const RateReport r = rate_scan(c);
  for (const auto& p : r.points) EXPECT_LE(p.D, 1e-10) << p.N << " " << p.t;
  for (const auto& f : r.fits) EXPECT_TRUE(f.degenerate);
}

TEST(RateScan, StaysInSectorAndIsDeterministic) {
  const RateConfig c = small_scan();
  const RateReport a = rate_scan(c);
  const RateReport b = rate_scan(c);
  ASSERT_EQ(a.points.size(), 6u);
  for (const auto& p : a.points) {
    EXPECT_EQ(p.sector_defect, 0.0);
    EXPECT_GT(p.D, 0.0);
  }
  std::ostringstream sa, sb;
  write_rate_csv(sa, a, "echo", true);
  write_rate_csv(sb, b, "echo", true);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_NE(sa.str().find("N,t,D,basis_dim,leakage,wall_seconds"), std::string::npos);
}

TEST(RateScan, DefaultSlopeIsInverseN) {
  RateConfig c;
  c.t_list = {0.5};
  const RateReport r = rate_scan(c);
  ASSERT_EQ(r.fits.size(), 1u);
  EXPECT_FALSE(r.fits[0].degenerate);
  EXPECT_GE(r.fits[0].slope, -1.25);
  EXPECT_LE(r.fits[0].slope, -0.75);
}

TEST(RateScan, RejectsUnorderedN) {
  RateConfig c = small_scan();
  c.N_list = {4, 2};
  EXPECT_THROW(rate_scan(c), ParameterError);
}

TEST(CoherentScan, InitialStateAndSlope) {
  RateConfig c;
  c.setup.grid = Grid(1, 4, 1.0);
  c.setup.initial.center = {1.5};
  c.N_list = {2, 4, 8};
  c.t_list = {0.0, 0.5};
  const RateReport r = coherent_rate_scan(c);
  for (int N : c.N_list) EXPECT_LE(r.D(N, 0.0), 1e-9) << N;
  ASSERT_EQ(r.fits.size(), 2u);
  EXPECT_GE(r.fits[1].slope, -1.3);
  EXPECT_LE(r.fits[1].slope, -0.7);
}

TEST(ProofIdentity, SmallInstance) {
  ProofIdentityConfig c;
  c.setup.grid = Grid(1, 2, 1.0);
  c.N = 2;
  c.t = 0.2;
  c.operators = 2;
  const ProofIdentityReport r = proof_identity_check(c);
  ASSERT_EQ(r.rows.size(), 2u);
  for (const auto& row : r.rows) EXPECT_LE(row.residual, 1e-6 * row.operator_norm);
}

TEST(StepConvergence, SecondOrder) {
  ExperimentSetup s;
  s.grid = Grid(1, 4, 1.0);
  const StepConvergenceReport r = step_convergence(s, 3, 0.5, 0.02, 3);
  ASSERT_EQ(r.ratios.size(), 1u);
  EXPECT_NEAR(r.ratios[0], 4.0, 0.6);
}

TEST(FluctuationSuite, InvariantsAndProbes) {
  FluctuationConfig c;
  c.t_list = {0.5, 1.0};
  c.N_list = {2, 4, 8};
  const FluctuationReport r = fluctuation_suite(c);
  for (double odd : r.odd_mass) EXPECT_LE(odd, 1e-10);
  for (double even : r.even_mass) EXPECT_NEAR(even, 1.0, 1e-10);
  ASSERT_FALSE(r.truncation.empty());
  EXPECT_EQ(r.truncation.back().truncation, c.cutoff);
  EXPECT_LE(r.truncation.back().difference, 1e-10);
  EXPECT_NEAR(r.l3_norms.fit.slope, -0.5, 1e-6);
  for (const auto& m : r.moments) {
    EXPECT_EQ(m.t.front(), 0.0);
    EXPECT_EQ(m.moment.front(), 0.0);
  }
  EXPECT_LE(r.max_leakage, c.setup.leakage_budget);
  std::ostringstream out;
  write_fluctuation_csv(out, r, "echo");
  EXPECT_FALSE(out.str().empty());
}
