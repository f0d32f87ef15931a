#include "mflab/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mflab/coherent.hpp"
#include "mflab/csv.hpp"
#include "mflab/error.hpp"

namespace mflab {

namespace {

// (e^z - 1) / z
complex phi1(complex z) {
  if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
  return (std::exp(z) - 1.0) / z;
}

struct TridiagonalExp {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  TridiagonalExp(const std::vector<double>& alpha, const std::vector<double>& beta, int m) {
    Eigen::VectorXd diag(m);
    Eigen::VectorXd sub(std::max(m - 1, 0));
    for (int i = 0; i < m; ++i) diag[i] = alpha[i];
    for (int i = 0; i + 1 < m; ++i) sub[i] = beta[i];
    if (m == 1) {
      eigenvalues = diag;
      eigenvectors = Eigen::MatrixXd::Ones(1, 1);
      return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    eigenvalues = eig.eigenvalues();
    eigenvectors = eig.eigenvectors();
  }

  // exp(-i s T) e_1
  Eigen::VectorXcd propagate(double s) const {
    const auto m = eigenvalues.size();
    Eigen::VectorXcd coeff(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      coeff[k] = std::polar(1.0, -s * eigenvalues[k]) * eigenvectors(0, k);
    }
    return eigenvectors.cast<complex>() * coeff;
  }

  // |e_m^T phi1(-i s T) e_1|
  double residual_weight(double s) const {
    const auto m = eigenvalues.size();
    complex sum = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      sum += eigenvectors(m - 1, k) * phi1(complex(0.0, -s * eigenvalues[k])) * eigenvectors(0, k);
    }
    return std::abs(sum);
  }
};

}  // namespace

Eigen::VectorXcd expm_apply(const LinearMap& G, const Eigen::VectorXcd& v, double tau,
                            const KrylovOptions& options, KrylovStats* stats) {
  if (!(options.tolerance > 0.0)) throw ParameterError("Krylov tolerance must be positive");
  if (options.max_dimension < 2) throw ParameterError("Krylov dimension must be at least 2");
  const double norm0 = v.norm();
  if (norm0 == 0.0 || tau == 0.0) return v;
  if (!std::isfinite(tau)) throw ParameterError("propagation time must be finite");

  const auto dim = v.size();
  const int mmax = static_cast<int>(std::min<Eigen::Index>(options.max_dimension, dim));
  const double total = std::abs(tau);
  const double direction = tau > 0 ? 1.0 : -1.0;
  Eigen::MatrixXcd basis(dim, mmax + 1);
  Eigen::VectorXcd u(dim);
  std::vector<double> alpha(mmax), beta(mmax);
  Eigen::VectorXcd w = v;
  double done = 0.0;
  long substeps = 0;

  while (done < total) {
    const double remaining = total - done;
    const double b0 = w.norm();
    basis.col(0) = w / b0;
    int m = 0;
    double h_next = 0.0;
    double step = 0.0;
    std::unique_ptr<TridiagonalExp> small;
    auto allowed = [&](double s) { return options.tolerance * norm0 * s / total; };

    for (int j = 0; j < mmax; ++j) {
      G(basis.col(j), u);
      if (stats) ++stats->matvecs;
      double a = 0.0;
      for (int pass = 0; pass < 2; ++pass) {
        Eigen::VectorXcd coeff = basis.leftCols(j + 1).adjoint() * u;
        u.noalias() -= basis.leftCols(j + 1) * coeff;
        a += coeff[j].real();
      }
      alpha[j] = a;
      h_next = u.norm();
      m = j + 1;
      double scale = 0.0;
      for (int i = 0; i <= j; ++i) scale = std::max(scale, std::abs(alpha[i]) + (i ? beta[i - 1] : 0.0));
      if (h_next <= 1e-13 * std::max(scale, 1e-300) || m == dim) {
        small = std::make_unique<TridiagonalExp>(alpha, beta, m);
        step = remaining;
        break;
      }
      beta[j] = h_next;
      basis.col(j + 1) = u / h_next;
      // The estimate is meaningless for a one-dimensional space.
      if (m < 2 && m < mmax) continue;
      small = std::make_unique<TridiagonalExp>(alpha, beta, m);
      const double err = b0 * h_next * remaining * small->residual_weight(direction * remaining);
      if (err <= allowed(remaining)) {
        step = remaining;
        break;
      }
      if (m == mmax) {
        double s = remaining;
        double e = err;
        while (e > allowed(s)) {
          const double ratio = 0.9 * std::pow(allowed(s) / e, 1.0 / m);
          s *= std::clamp(ratio, 0.2, 0.9);
          if (s < 1e-14 * total) {
            throw ConvergenceError("Krylov step size underflow: the generator norm is too large "
                                   "for the requested tolerance");
          }
          e = b0 * h_next * s * small->residual_weight(direction * s);
        }
        step = s;
        if (stats) stats->error_estimate += e;
      }
    }
    const Eigen::VectorXcd y = small->propagate(direction * step);
    w = b0 * (basis.leftCols(m) * y);
    done += step;
    if (remaining - step <= 1e-15 * total) done = total;
    if (++substeps > options.max_substeps) {
      throw ConvergenceError("Krylov propagation exceeded " + std::to_string(options.max_substeps) +
                             " substeps");
    }
  }
  if (stats) stats->substeps += substeps;
  return w;
}

FockState expm_apply(const SparseGenerator& G, const FockState& psi, double tau,
                     const KrylovOptions& options, KrylovStats* stats) {
  if (psi.dimension() != G.dimension()) throw ShapeError("state and generator dimensions differ");
  const auto& matrix = G.matrix();
  LinearMap apply = [&matrix](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    out.noalias() = matrix * in;
  };
  return FockState(psi.basis_ptr(), expm_apply(apply, psi.amplitudes(), tau, options, stats));
}

namespace {

GeneratorTerms static_terms(const SampledPotential& potential, int N) {
  return merge(kinetic_terms(potential.grid()), interaction_terms(potential, N));
}

}  // namespace

FluctuationPropagator::FluctuationPropagator(std::shared_ptr<const HartreeTrajectory> trajectory,
                                             SampledPotential potential, int N, BasisPtr basis,
                                             FluctuationSpec spec, FluctuationOptions options)
    : trajectory_(std::move(trajectory)),
      potential_(std::move(potential)),
      N_(N),
      basis_(std::move(basis)),
      spec_(spec),
      options_(options),
      static_part_(assemble(static_terms(potential_, N), basis_, {"kinetic+L4", 0.0, N, true})) {
  if (!trajectory_) throw ParameterError("fluctuation dynamics needs a Hartree trajectory");
  if (!(trajectory_->grid() == potential_.grid())) {
    throw ShapeError("trajectory and potential grids differ");
  }
  if (static_cast<std::size_t>(basis_->modes()) != potential_.grid().site_count()) {
    throw ShapeError("basis modes do not match the grid");
  }
  if (!(options_.dt > 0.0)) throw ParameterError("fluctuation dt must be positive");
  const double ratio = options_.dt / trajectory_->spacing();
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-6 || static_cast<long>(rounded) % 2 != 0 || rounded < 2) {
    throw ParameterError("fluctuation dt " + format_double(options_.dt) +
                         " must be an even multiple of the stored Hartree spacing " +
                         format_double(trajectory_->spacing()));
  }
  if (spec_.kind == FluctuationKind::truncated && spec_.truncation < 0) {
    throw ParameterError("truncation cutoff must be non-negative");
  }
}

SparseGenerator FluctuationPropagator::time_dependent_part(double t) const {
  const FieldVector& phi = trajectory_->at(t);
  GeneratorTerms terms = quadratic_mean_field_terms(phi, potential_);
  if (spec_.kind == FluctuationKind::full) {
    terms = merge(std::move(terms), cubic_terms(phi, potential_, N_));
  } else if (spec_.kind == FluctuationKind::truncated) {
    terms = merge(std::move(terms), cubic_terms(phi, potential_, N_, spec_.truncation));
  }
  return assemble(terms, basis_, {"L(t)", t, N_, true});
}

SparseGenerator FluctuationPropagator::generator(double t) const {
  auto g = static_part_.plus(time_dependent_part(t), "L(t)");
  return g;
}

FockState FluctuationPropagator::evolve(const FockState& psi, double s, double t) {
  return std::move(evolve(std::vector<FockState>{psi}, s, t).front());
}

std::vector<FockState> FluctuationPropagator::evolve(const std::vector<FockState>& states, double s,
                                                     double t) {
  for (const auto& psi : states) {
    if (psi.dimension() != basis_->dimension()) throw ShapeError("state does not match the basis");
  }
  const double lo = std::min(s, t);
  const double hi = std::max(s, t);
  const double ratio = (hi - lo) / options_.dt;
  const auto steps = static_cast<long>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-6) {
    throw ParameterError("interval length " + format_double(hi - lo) +
                         " is not a multiple of the fluctuation dt " + format_double(options_.dt));
  }
  if (!trajectory_->covers(lo, hi)) {
    throw ParameterError("Hartree trajectory does not cover [" + format_double(lo) + ", " +
                         format_double(hi) + "]");
  }
  std::vector<Eigen::VectorXcd> w;
  w.reserve(states.size());
  for (const auto& psi : states) w.push_back(psi.amplitudes());
  std::vector<double> leaked(states.size(), 0.0);
  const double sign = t >= s ? 1.0 : -1.0;
  const auto& fixed = static_part_.matrix();
  for (long i = 0; i < steps; ++i) {
    const long k = sign > 0 ? i : steps - 1 - i;
    const double mid = lo + (static_cast<double>(k) + 0.5) * options_.dt;
    const SparseGenerator moving = time_dependent_part(mid);
    const auto& varying = moving.matrix();
    LinearMap apply = [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
      out.noalias() = fixed * in;
      out.noalias() += varying * in;
    };
    for (std::size_t j = 0; j < w.size(); ++j) {
      leaked[j] += options_.dt * moving.overflow_norm(w[j]);
      w[j] = expm_apply(apply, w[j], sign * options_.dt, options_.krylov, &stats_);
    }
  }
  if (!leaked.empty()) leak_amplitude_ += *std::max_element(leaked.begin(), leaked.end());
  if (leakage() > options_.leakage_budget) {
    throw TruncationError("fluctuation dynamics leaked " + format_double(leakage()) +
                          " above the budget " + format_double(options_.leakage_budget) +
                          " (N_cut = " + std::to_string(basis_->cutoff()) + ")");
  }
  std::vector<FockState> out;
  out.reserve(w.size());
  for (auto& v : w) out.emplace_back(basis_, std::move(v));
  return out;
}

FockState evolve_fluctuation(FluctuationSpec spec,
                             std::shared_ptr<const HartreeTrajectory> trajectory,
                             const SampledPotential& potential, int N, const FockState& psi0,
                             double s, double t, const FluctuationOptions& options) {
  FluctuationPropagator propagator(std::move(trajectory), potential, N, psi0.basis_ptr(), spec,
                                   options);
  return propagator.evolve(psi0, s, t);
}

double conjugated_annihilation_identity_check(std::shared_ptr<const HartreeTrajectory> trajectory,
                                              const SampledPotential& potential, int N, double s,
                                              double t, int mode, BasisPtr basis,
                                              const IdentityCheckOptions& options) {
  if (mode < 0 || mode >= basis->modes()) throw ParameterError("mode index out of range");
  if (options.test_sectors < 0 || options.test_sectors > basis->cutoff()) {
    throw ParameterError("test state sectors exceed the basis cutoff");
  }
  const Eigen::VectorXcd cs = trajectory->at(s).modes();
  const Eigen::VectorXcd ct = trajectory->at(t).modes();
  const double root_n = std::sqrt(static_cast<double>(N));

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  FockState psi(basis);
  const auto top = basis->sector_end(options.test_sectors);
  for (std::size_t i = 0; i < top; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    psi.amplitudes()[static_cast<Eigen::Index>(i)] = complex(re, im);
  }
  psi = psi.normalized();

  const auto& krylov = options.fluctuation.krylov;
  const SparseGenerator hamiltonian = assemble_hamiltonian(N, potential, basis);
  LeakageMeter leak;
  FockState lhs = apply_weyl(root_n * cs, psi, krylov, &leak);
  lhs = expm_apply(hamiltonian, lhs, t - s, krylov);
  lhs = apply_annihilate(mode, lhs) - (root_n * ct[mode]) * lhs;
  lhs = expm_apply(hamiltonian, lhs, s - t, krylov);
  lhs = apply_weyl(-root_n * cs, lhs, krylov, &leak);
  leak.check(options.fluctuation.leakage_budget, "identity check Weyl displacement");

  FluctuationPropagator propagator(std::move(trajectory), potential, N, basis,
                                   {FluctuationKind::full, 0}, options.fluctuation);
  FockState rhs = propagator.evolve(psi, s, t);
  rhs = apply_annihilate(mode, rhs);
  rhs = propagator.evolve(rhs, t, s);
  return (lhs - rhs).norm();
}

}  // namespace mflab
