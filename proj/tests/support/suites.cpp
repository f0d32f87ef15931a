#include "suites.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mflab/coherent.hpp"
#include "mflab/fock.hpp"
#include "mflab/observe.hpp"
#include "oracles.hpp"

namespace mflab::oracle {

namespace {

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double distance(const FockState& a, const FockState& b) { return (a.amplitudes() - b.amplitudes()).norm(); }

void record(IdentityCheck& c, double residual) {
  ++c.trials;
  c.worst = std::max(c.worst, residual);
}

// Roundoff allowance for bounds that are attained with equality.
constexpr double kSlack = 1e-12;

void record(BoundCheck& c, double lhs, double rhs) {
  ++c.trials;
  if (rhs == 0.0) {
    if (lhs > kSlack) ++c.violations;
    return;
  }
  const double ratio = lhs / rhs;
  c.worst_ratio = std::max(c.worst_ratio, ratio);
  if (ratio > 1.0 + kSlack) ++c.violations;
}

}  // namespace

std::vector<IdentityCheck> algebra_suite(int trials, std::uint64_t seed) {
  Rng rng(seed);
  IdentityCheck ccr{"ccr"}, adjoint{"adjointness"}, sectors{"sector_preservation"},
      composition{"weyl_composition"}, covariance{"weyl_covariance"}, number{"dgamma_identity"};

  for (int trial = 0; trial < trials; ++trial) {
    const int M = uniform(rng, 1, 4);
    const int cutoff = uniform(rng, 3, 6);
    const auto b = OccupationBasis::create(M, cutoff);

    // [a_i, a*_j] = delta_ij, [a_i, a_j] = [a*_i, a*_j] = 0 two sectors below the cutoff.
    {
      const FockState psi = random_state(rng, b, cutoff - 2);
      double worst = 0.0;
      for (int i = 0; i < M; ++i) {
        for (int j = 0; j < M; ++j) {
          const FockState mixed = apply_annihilate(i, apply_create(j, psi)) - apply_create(j, apply_annihilate(i, psi));
          worst = std::max(worst, distance(mixed, complex(i == j ? 1.0 : 0.0) * psi));
          const FockState lower = apply_annihilate(i, apply_annihilate(j, psi)) - apply_annihilate(j, apply_annihilate(i, psi));
          const FockState upper = apply_create(i, apply_create(j, psi)) - apply_create(j, apply_create(i, psi));
          worst = std::max({worst, lower.norm(), upper.norm()});
        }
      }
      record(ccr, worst);
    }

    // <a*(f) u, v> = <u, a(f) v> and dGamma(J) symmetric.
    {
      const FockState u = random_state(rng, b, cutoff - 1);
      const FockState v = random_state(rng, b, cutoff);
      const Eigen::VectorXcd f = random_vector(rng, M);
      const ModeOperator J(random_hermitian(rng, M), true);
      const double r1 = std::abs(apply_create(f, u).dot(v) - u.dot(apply_annihilate(f, v)));
      const double r2 = std::abs(second_quantize(J, u).dot(v) - u.dot(second_quantize(J, v)));
      record(adjoint, std::max(r1, r2) / (1.0 + f.norm() + J.operator_norm()));
    }

    // dGamma(J) keeps sector n, a*(f) and a(f) move it by exactly one.
    {
      const int n = uniform(rng, 1, cutoff - 1);
      const FockState psi = random_sector_state(rng, b, n);
      const Eigen::VectorXcd f = random_vector(rng, M);
      const ModeOperator J(random_hermitian(rng, M), true);
      const FockState dj = second_quantize(J, psi);
      const FockState up = apply_create(f, psi);
      const FockState down = apply_annihilate(f, psi);
      record(sectors, std::max({distance(dj, project_sector(n, dj)), distance(up, project_sector(n + 1, up)),
                                distance(down, project_sector(n - 1, down))}));
    }

    // dGamma(1) = N.
    {
      const FockState psi = random_state(rng, b, cutoff);
      record(number, distance(second_quantize(ModeOperator::identity(M), psi), apply_number_power(psi, 1.0)));
    }
  }

  // Weyl checks need room above the displaced support, so they use their own bases.
  for (int trial = 0; trial < trials; ++trial) {
    const int M = uniform(rng, 1, 3);
    const auto b = OccupationBasis::create(M, M == 3 ? 22 : 30);
    const FockState psi = random_state(rng, b, 2);

    const Eigen::VectorXcd f = random_vector(rng, M).normalized() * std::uniform_real_distribution<>(0.1, 0.6)(rng);
    const Eigen::VectorXcd g = random_vector(rng, M).normalized() * std::uniform_real_distribution<>(0.1, 0.6)(rng);

    // W(f) W(g) = exp(-i Im <f, g>) W(f + g).
    const FockState lhs = apply_weyl(f, apply_weyl(g, psi));
    const FockState rhs = std::exp(complex(0.0, -f.dot(g).imag())) * apply_weyl(f + g, psi);
    record(composition, distance(lhs, rhs));

    // W*(f) a(g) W(f) = a(g) + <g, f>.
    const FockState moved = apply_weyl(-f, apply_annihilate(g, apply_weyl(f, psi)));
    record(covariance, distance(moved, apply_annihilate(g, psi) + g.dot(f) * psi));
  }

  return {ccr, adjoint, sectors, composition, covariance, number};
}

std::vector<BoundCheck> operator_bound_suite(int trials, std::uint64_t seed) {
  Rng rng(seed);
  BoundCheck annihilate{"annihilation"}, create{"creation"}, field{"field"}, second{"second_quantization"};
  for (int trial = 0; trial < trials; ++trial) {
    const int M = uniform(rng, 1, 4);
    const int cutoff = uniform(rng, 2, 6);
    const auto b = OccupationBasis::create(M, cutoff);
    // Top sector left empty so that creation is exact.
    const FockState psi = trial % 3 == 0 ? random_sector_state(rng, b, uniform(rng, 0, cutoff - 1))
                                         : random_state(rng, b, cutoff - 1);
    const Eigen::VectorXcd f = random_vector(rng, M) * std::exp(std::normal_distribution<>(0.0, 1.0)(rng));
    const ModeOperator J(random_hermitian(rng, M), true);

    const double root_n = apply_number_power(psi, 0.5).norm();
    const double root_n1 = apply_number_power(psi, 0.5, 1.0).norm();
    record(annihilate, apply_annihilate(f, psi).norm(), f.norm() * root_n);
    record(create, apply_create(f, psi).norm(), f.norm() * root_n1);
    record(field, apply_field(f, psi).norm(), 2.0 * f.norm() * root_n1);
    record(second, second_quantize(J, psi).norm(), J.operator_norm() * apply_number_power(psi, 1.0).norm());
  }
  return {annihilate, create, field, second};
}

}  // namespace mflab::oracle
