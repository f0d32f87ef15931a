#include "selftest.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include <Eigen/Eigenvalues>

#include "mflab/coherent.hpp"
#include "mflab/experiments.hpp"
#include "mflab/generators.hpp"
#include "mflab/hartree.hpp"
#include "mflab/observe.hpp"
#include "mflab/propagate.hpp"

namespace mflab::cli {

namespace {

class Suite {
 public:
  explicit Suite(std::uint64_t seed) : rng_(seed) {}

  void check(const std::string& group, const std::string& name, double value, double tolerance) {
    checks_.push_back({group, name, value, tolerance, std::isfinite(value) && value <= tolerance});
  }

  double normal() { return normal_(rng_); }
  complex cnormal() {
    const double re = normal();
    return {re, normal()};
  }
  Eigen::VectorXcd random_vector(Eigen::Index n) {
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = cnormal();
    return v;
  }
  FockState random_state(const BasisPtr& basis, int top_sector) {
    FockState psi(basis);
    for (std::size_t i = 0; i < basis->sector_end(top_sector); ++i) {
      psi.amplitudes()[static_cast<Eigen::Index>(i)] = cnormal();
    }
    return psi.normalized();
  }
  std::uint64_t next_seed() { return rng_(); }

  std::vector<SelfCheck> take() { return std::move(checks_); }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::vector<SelfCheck> checks_;
};

void lattice_checks(Suite& s) {
  const Grid cube(3, 4, 0.5);
  double mismatches = 0;
  for (std::size_t i = 0; i < cube.site_count(); ++i) {
    if (cube.site_index(cube.coordinates(i)) != i) ++mismatches;
  }
  s.check("lattice", "site index round trip", mismatches, 0.0);

  const Grid plane(2, 5, 0.7);
  PotentialSpec spec;
  spec.terms = {{0.8, 1.0}, {0.3, 0.5}};
  spec.offset = 0.1;
  const auto V = sample_potential(spec, plane);
  double odd = 0.0;
  for (std::size_t r = 0; r < plane.site_count(); ++r) {
    odd = std::max(odd, std::abs(V[r] - V[plane.displacement_index(r, 0)]));
  }
  s.check("lattice", "sampled potential is even", odd, 0.0);

  const Grid line(1, 8, 0.8);
  FieldVector phi(line);
  for (std::size_t x = 0; x < line.site_count(); ++x) phi[x] = s.cnormal();
  const auto spectral = apply_negative_laplacian(phi);
  const Eigen::VectorXcd dense = laplacian_matrix(line).cast<complex>() *
                                 Eigen::Map<const Eigen::VectorXcd>(phi.values().data(), 8);
  double diff = 0.0;
  for (std::size_t x = 0; x < 8; ++x) diff = std::max(diff, std::abs(spectral[x] - dense[x]));
  s.check("lattice", "spectral Laplacian equals the stencil", diff, 1e-10);

  const auto W = sample_potential(PotentialSpec::coulomb_like(0.7, 0.8), line);
  std::vector<double> rho(8);
  for (double& r : rho) r = std::abs(s.normal());
  const auto fast = convolve_density(W, rho);
  double worst = 0.0;
  for (std::size_t x = 0; x < 8; ++x) {
    double direct = 0.0;
    for (std::size_t y = 0; y < 8; ++y) direct += line.cell_volume() * W.between(x, y) * rho[y];
    worst = std::max(worst, std::abs(fast[x] - direct) / std::abs(direct));
  }
  s.check("lattice", "spectral convolution equals direct sum", worst, 1e-10);
}

void hartree_checks(Suite& s) {
  const ExperimentSetup setup;
  const auto V = sample_potential(setup.potential, setup.grid);
  const auto phi0 = make_initial_state(setup.grid, setup.initial);
  const auto traj = evolve_hartree(phi0, V, setup.hartree_dt, 1.0, 10);
  const double e0 = energy(phi0, V);
  double mass = 0.0, drift = 0.0;
  for (const auto& phi : traj.states()) {
    mass = std::max(mass, std::abs(phi.mass() - 1.0));
    drift = std::max(drift, std::abs(energy(phi, V) - e0) / (1.0 + std::abs(e0)));
  }
  s.check("hartree", "mass conservation", mass, 1e-9);
  s.check("hartree", "energy conservation", drift, 1e-6);

  FieldVector phi = traj.states().back();
  HartreePropagator back(V, -setup.hartree_dt);
  for (int k = 0; k < 1000; ++k) back.step(phi);
  double err = 0.0;
  for (std::size_t x = 0; x < setup.grid.site_count(); ++x) err += std::norm(phi[x] - phi0[x]);
  s.check("hartree", "time reversal", std::sqrt(err * setup.grid.cell_volume()), 1e-6);
}

void fock_checks(Suite& s) {
  const auto basis = OccupationBasis::create(3, 5);
  const FockState psi = s.random_state(basis, 4);
  const FockState chi = s.random_state(basis, 4);
  double ccr = 0.0, adjoint = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      FockState c = apply_annihilate(i, apply_create(j, psi)) - apply_create(j, apply_annihilate(i, psi));
      if (i == j) c -= psi;
      ccr = std::max(ccr, c.norm());
    }
    adjoint = std::max(adjoint, std::abs(apply_create(i, chi).dot(psi) -
                                         chi.dot(apply_annihilate(i, psi))));
  }
  s.check("fock", "canonical commutation relations", ccr, 1e-12);
  s.check("fock", "a* is the adjoint of a", adjoint, 1e-12);

  const FockState number = second_quantize(ModeOperator::identity(3), psi);
  const FockState counted = apply_number_power(psi, 1.0);
  s.check("fock", "dGamma(1) equals the number operator", (number - counted).norm(), 1e-12);
}

void coherent_checks(Suite& s) {
  const auto basis = OccupationBasis::create(2, tail_rule_cutoff(2.0));
  Eigen::VectorXcd f = s.random_vector(2);
  f *= std::sqrt(2.0) / f.norm();
  const FockState psi = coherent_state(f, basis);
  const double mean = number_moment(1, psi);
  const double var = number_moment(2, psi) - mean * mean;
  s.check("coherent", "Poisson mean", std::abs(mean - 2.0), 1e-8);
  s.check("coherent", "Poisson variance", std::abs(var - 2.0), 1e-8);

  Eigen::VectorXcd g = 0.5 * s.random_vector(2);
  const auto big = OccupationBasis::create(2, tail_rule_cutoff(std::pow(f.norm() + g.norm(), 2)) + 8);
  const FockState vacuum = FockState::vacuum(big);
  const FockState lhs = apply_weyl(f, apply_weyl(g, vacuum));
  const complex phase = std::polar(1.0, -f.dot(g).imag());
  const FockState rhs = phase * coherent_state(f + g, big);
  s.check("coherent", "Weyl composition law", (lhs - rhs).norm(), 1e-8);

  double violations = 0;
  for (int N = 1; N <= 1'000'000; ++N) {
    const double ratio = d_N(N) / std::pow(N, 0.25);
    if (ratio < 0.5 || ratio > 2.0) ++violations;
  }
  s.check("coherent", "d_N within [N^1/4 / 2, 2 N^1/4]", violations, 0.0);
}

void generator_checks(Suite& s) {
  const Grid grid(1, 3, 1.0);
  const auto V = sample_potential(PotentialSpec::coulomb_like(0.5, 1.0), grid);
  const auto basis = OccupationBasis::create(3, 6);
  const auto phi = make_initial_state(grid, {});
  const auto H = assemble_hamiltonian(3, V, basis);
  const auto L2 = assemble_L2(phi, V, basis);
  const auto L3 = assemble_L3(phi, V, 3, basis);
  const auto L4 = assemble_L4(V, 3, basis);
  double defect = 0.0;
  for (const auto* g : {&H, &L2, &L3, &L4}) defect = std::max(defect, g->hermiticity_defect());
  s.check("generators", "Hermiticity", defect, 1e-12);

  const bool shifts = H.sector_shifts() == std::set<int>{0} &&
                      L2.sector_shifts() == std::set<int>{-2, 0, 2} &&
                      L3.sector_shifts() == std::set<int>{-1, 1} &&
                      L4.sector_shifts() == std::set<int>{0};
  s.check("generators", "sector structure", shifts ? 0.0 : 1.0, 0.0);
}

void propagate_checks(Suite& s) {
  const Grid grid(1, 3, 1.0);
  const auto V = sample_potential(PotentialSpec::coulomb_like(0.5, 1.0), grid);
  const auto basis = OccupationBasis::create(3, 4);
  const auto H = assemble_hamiltonian(3, V, basis);
  const FockState psi = s.random_state(basis, 4);
  const Eigen::MatrixXcd dense = Eigen::MatrixXcd(H.matrix().cast<complex>());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(dense);
  const double tau = 0.7;
  const Eigen::VectorXcd phases =
      (eig.eigenvalues().array() * complex(0.0, -tau)).exp().matrix();
  const Eigen::VectorXcd exact =
      eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint() * psi.amplitudes();
  const FockState krylov = expm_apply(H, psi, tau);
  s.check("propagate", "Krylov matches dense exponential",
          (krylov.amplitudes() - exact).norm(), 1e-10);

  const auto weak = sample_potential(PotentialSpec::coulomb_like(0.05, 1.0), grid);
  const auto phi0 = make_initial_state(grid, {});
  auto traj = std::make_shared<const HartreeTrajectory>(evolve_hartree(phi0, weak, 1e-3, 0.5));
  const auto fbasis = OccupationBasis::create(3, 10);
  FluctuationPropagator U(traj, weak, 4, fbasis, {FluctuationKind::full, 0}, {});
  const FockState out = U.evolve(FockState::vacuum(fbasis), 0.0, 0.5);
  s.check("propagate", "fluctuation dynamics is unitary", std::abs(out.norm() - 1.0), 1e-8);
}

void observe_checks(Suite& s) {
  const Grid grid(1, 4, 1.0);
  const auto phi = make_initial_state(grid, {});
  const auto basis = OccupationBasis::create(4, 3);
  const DensityMatrix gamma = reduced_density(product_state(phi, 3, basis));
  const DensityMatrix rho = DensityMatrix::pure(phi.modes());
  s.check("observe", "product state has a pure reduced density",
          (gamma.matrix() - rho.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  s.check("observe", "trace one", std::abs(gamma.trace() - 1.0), 1e-10);

  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(4), b = Eigen::VectorXcd::Zero(4);
  a[0] = 1.0;
  b[1] = 1.0;
  s.check("observe", "orthogonal pure states are at distance 2",
          std::abs(trace_distance(DensityMatrix::pure(a), DensityMatrix::pure(b)) - 2.0), 1e-12);
}

void experiment_checks(Suite& s) {
  std::vector<double> n{2, 3, 4, 6, 8}, d;
  for (double x : n) d.push_back(0.3 / x);
  const SlopeFit fit = fit_loglog(n, d);
  s.check("experiments", "fitter recovers slope -1", std::abs(fit.slope + 1.0), 1e-12);

  RateConfig free;
  free.setup.grid = Grid(1, 4, 1.0);
  free.setup.potential = PotentialSpec{};
  free.N_list = {2, 3, 4};
  free.t_list = {0.5};
  const RateReport report = rate_scan(free);
  double worst = 0.0;
  for (const auto& p : report.points) worst = std::max(worst, p.D);
  s.check("experiments", "free evolution keeps D at zero", worst, 1e-10);
}

}  // namespace

std::vector<SelfCheck> run_selftest(std::uint64_t seed) {
  Suite s(seed);
  lattice_checks(s);
  hartree_checks(s);
  fock_checks(s);
  coherent_checks(s);
  generator_checks(s);
  propagate_checks(s);
  observe_checks(s);
  experiment_checks(s);
  return s.take();
}

}  // namespace mflab::cli
