#include "mflab/coherent.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SparseLU>

#include "mflab/error.hpp"
#include "mflab/generators.hpp"

namespace mflab {

namespace {

// Product prod_i c_i^{n_i} / sqrt(n_i!) in log-modulus / phase form; zero if
// some n_i > 0 meets c_i = 0.
complex monomial(const Eigen::VectorXcd& c, std::span<const std::uint16_t> n, double log_prefactor) {
  double log_modulus = log_prefactor;
  double phase = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] == 0) continue;
    const complex ci = c[static_cast<Eigen::Index>(i)];
    if (ci == complex(0.0)) return 0.0;
    log_modulus += n[i] * std::log(std::abs(ci)) - 0.5 * std::lgamma(n[i] + 1.0);
    phase += n[i] * std::arg(ci);
  }
  return std::polar(std::exp(log_modulus), phase);
}

}  // namespace

int tail_rule_cutoff(double norm_squared) {
  if (!(norm_squared >= 0.0) || !std::isfinite(norm_squared)) {
    throw ParameterError("displacement norm must be finite");
  }
  if (norm_squared == 0.0) return 0;
  const double lambda = norm_squared;
  const int rule = static_cast<int>(std::ceil(lambda + 8.0 * std::sqrt(lambda)));
  // Smallest n with Poisson tail P(X > n) <= 1e-15, summed from far above.
  const int top = static_cast<int>(std::ceil(lambda + 40.0 * std::sqrt(lambda) + 100.0));
  std::vector<double> suffix(top + 2, 0.0);
  for (int k = top; k >= 0; --k) {
    const double log_pmf = -lambda + k * std::log(lambda) - std::lgamma(k + 1.0);
    suffix[k] = suffix[k + 1] + std::exp(log_pmf);
  }
  int tail = 0;
  while (tail < top && suffix[tail + 1] > 1e-15) ++tail;
  return std::max(rule, tail);
}

void check_tail_rule(double norm_squared, int cutoff) {
  const int needed = tail_rule_cutoff(norm_squared);
  if (cutoff < needed) {
    throw TruncationError("particle-number cutoff " + std::to_string(cutoff) +
                          " violates the tail rule; N_cut >= " + std::to_string(needed) +
                          " is required");
  }
}

FockState coherent_state(const Eigen::VectorXcd& f, BasisPtr basis) {
  if (f.size() != basis->modes()) throw ShapeError("displacement does not match the mode count");
  const double lambda = f.squaredNorm();
  check_tail_rule(lambda, basis->cutoff());
  FockState psi(basis);
  for (std::size_t i = 0; i < basis->dimension(); ++i) {
    psi.amplitudes()[static_cast<Eigen::Index>(i)] = monomial(f, basis->occupation(i), -0.5 * lambda);
  }
  return psi;
}

FockState apply_weyl(const Eigen::VectorXcd& f, const FockState& psi, const KrylovOptions& options,
                     LeakageMeter* leakage) {
  if (f.size() != psi.basis().modes()) throw ShapeError("displacement does not match the mode count");
  if (f.squaredNorm() == 0.0) return psi;
  const SparseGenerator g = weyl_generator(f, psi.basis_ptr());
  // Eight equal segments; W(f/8)^8 = W(f). The overflow norm is integrated
  // along the path with the trapezoid rule.
  constexpr int segments = 8;
  FockState w = psi;
  double path = 0.5 * g.overflow_norm(w.amplitudes());
  for (int k = 1; k <= segments; ++k) {
    w = expm_apply(g, w, 1.0 / segments, options);
    const double b = g.overflow_norm(w.amplitudes());
    path += k == segments ? 0.5 * b : b;
  }
  path /= segments;
  if (leakage) leakage->add(path * path);
  return w;
}

FockState product_state(const Eigen::VectorXcd& c, int N, BasisPtr basis) {
  if (c.size() != basis->modes()) throw ShapeError("mode vector does not match the mode count");
  if (N < 0) throw ParameterError("particle number must be non-negative");
  if (N > basis->cutoff()) {
    throw CapacityError("product state with N=" + std::to_string(N) + " exceeds the cutoff " +
                        std::to_string(basis->cutoff()));
  }
  FockState psi(basis);
  const double log_prefactor = 0.5 * std::lgamma(N + 1.0);
  for (std::size_t i = basis->sector_begin(N); i < basis->sector_end(N); ++i) {
    psi.amplitudes()[static_cast<Eigen::Index>(i)] = monomial(c, basis->occupation(i), log_prefactor);
  }
  return psi;
}

FockState product_state(const FieldVector& phi, int N, BasisPtr basis) {
  return product_state(phi.modes(), N, std::move(basis));
}

double log_d_N(double N) {
  if (!(N >= 1.0)) throw ParameterError("d_N needs N >= 1");
  return 0.5 * std::lgamma(N + 1.0) - 0.5 * N * std::log(N) + 0.5 * N;
}

double d_N(double N) { return std::exp(log_d_N(N)); }

int single_mode_cutoff(int N) {
  return 4 * N + static_cast<int>(std::ceil(12.0 * std::sqrt(static_cast<double>(N)))) + 16;
}

std::vector<double> displaced_number_state(int N) {
  if (N < 1) throw ParameterError("displaced number state needs N >= 1");
  const int K = single_mode_cutoff(N);
  const double alpha = std::sqrt(static_cast<double>(N));
  // chi is the eigenvector with eigenvalue N of (a* + alpha)(a + alpha), a
  // symmetric tridiagonal matrix in the number basis. Shifted inverse iteration.
  const double shift = N + 1e-6;
  Eigen::SparseMatrix<double> t(K + 1, K + 1);
  std::vector<Eigen::Triplet<double>> entries;
  for (int m = 0; m <= K; ++m) {
    entries.emplace_back(m, m, m + alpha * alpha - shift);
    if (m < K) {
      const double off = alpha * std::sqrt(m + 1.0);
      entries.emplace_back(m, m + 1, off);
      entries.emplace_back(m + 1, m, off);
    }
  }
  t.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(t);
  if (lu.info() != Eigen::Success) throw ConvergenceError("displaced number state: factorization failed");
  Eigen::VectorXd x = Eigen::VectorXd::Ones(K + 1).normalized();
  for (int it = 0; it < 6; ++it) {
    x = lu.solve(x);
    x.normalize();
  }
  if (x[0] < 0) x = -x;
  return {x.data(), x.data() + x.size()};
}

std::vector<double> sector_norms_of_displaced_product(int N) {
  auto chi = displaced_number_state(N);
  for (double& v : chi) v = std::abs(v);
  return chi;
}

double displaced_product_inverse_number_norm(int N) {
  const auto chi = displaced_number_state(N);
  double s = 0.0;
  for (std::size_t m = 0; m < chi.size(); ++m) s += chi[m] * chi[m] / (m + 1.0);
  return d_N(N) * std::sqrt(s);
}

FockState displaced_product_state(const Eigen::VectorXcd& c, int N, BasisPtr basis) {
  if (c.size() != basis->modes()) throw ShapeError("mode vector does not match the mode count");
  if (std::abs(c.squaredNorm() - 1.0) > 1e-10) {
    throw ParameterError("displaced product state needs normalized mode coefficients");
  }
  const auto chi = displaced_number_state(N);
  FockState psi(basis);
  for (std::size_t i = 0; i < basis->dimension(); ++i) {
    const auto m = static_cast<std::size_t>(basis->sector_of(i));
    if (m >= chi.size() || chi[m] == 0.0) continue;
    const complex amp = monomial(c, basis->occupation(i), 0.5 * std::lgamma(m + 1.0));
    psi.amplitudes()[static_cast<Eigen::Index>(i)] = chi[m] * amp;
  }
  return psi;
}

}  // namespace mflab
