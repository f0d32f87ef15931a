#include "mflab/observe.hpp"

#include <cmath>

#include "mflab/coherent.hpp"
#include "mflab/error.hpp"

namespace mflab {

DensityMatrix::DensityMatrix(Eigen::MatrixXcd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) throw ShapeError("density matrix must be square");
}

DensityMatrix DensityMatrix::pure(const Eigen::VectorXcd& v) {
  const double n2 = v.squaredNorm();
  if (!(n2 > 0.0)) throw UndefinedDensityError("projector onto the zero vector");
  Eigen::MatrixXcd p = v * v.adjoint() / n2;
  return DensityMatrix(std::move(p));
}

double DensityMatrix::hermiticity_defect() const {
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
}

Eigen::VectorXd DensityMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(matrix_, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

DensityMatrix reduced_density(const FockState& psi) {
  const auto& basis = psi.basis();
  const int m = basis.modes();
  const auto dim = static_cast<Eigen::Index>(basis.dimension());
  // Column i holds a_i psi, so (B^* B)_{ji} = <a_j psi, a_i psi> = <a*_j a_i>.
  Eigen::MatrixXcd lowered = Eigen::MatrixXcd::Zero(dim, m);
  const auto& amp = psi.amplitudes();
  for (std::size_t k = 0; k < basis.dimension(); ++k) {
    const complex a = amp[static_cast<Eigen::Index>(k)];
    if (a == complex(0.0)) continue;
    const auto n = basis.occupation(k);
    for (int i = 0; i < m; ++i) {
      if (n[i] == 0) continue;
      lowered(basis.lowered(k, i), i) += std::sqrt(static_cast<double>(n[i])) * a;
    }
  }
  const Eigen::MatrixXcd gram = lowered.adjoint() * lowered;
  const double number = gram.trace().real();
  if (!(number > 0.0)) {
    throw UndefinedDensityError("reduced density undefined: <psi, N psi> = 0");
  }
  Eigen::MatrixXcd gamma = gram.transpose() / number;
  gamma = 0.5 * (gamma + gamma.adjoint()).eval();
  return DensityMatrix(std::move(gamma));
}

double trace_norm(const Eigen::MatrixXcd& hermitian) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hermitian, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityMatrix& gamma, const DensityMatrix& rho) {
  if (gamma.modes() != rho.modes()) {
    throw ShapeError("density matrices have sizes " + std::to_string(gamma.modes()) + " and " +
                     std::to_string(rho.modes()));
  }
  return trace_norm(gamma.matrix() - rho.matrix());
}

FockState apply_field(const Eigen::VectorXcd& f, const FockState& psi, LeakageMeter* leakage) {
  return apply_create(f, psi, leakage) + apply_annihilate(f, psi);
}

complex trace_against(const ModeOperator& J, const DensityMatrix& gamma, const Eigen::VectorXcd& c) {
  if (J.modes() != gamma.modes() || c.size() != gamma.modes()) {
    throw ShapeError("operator, density and mode vector sizes differ");
  }
  const Eigen::MatrixXcd diff = gamma.matrix() - c * c.adjoint() / c.squaredNorm();
  return (J.matrix() * diff).trace();
}

FluctuationObservables::FluctuationObservables(std::shared_ptr<const HartreeTrajectory> trajectory,
                                               SampledPotential potential, int N, BasisPtr basis,
                                               FluctuationOptions options)
    : propagator_(trajectory, std::move(potential), N, basis, {FluctuationKind::full, 0}, options),
      N_(N),
      chi_(displaced_product_state(trajectory->at(0.0).modes(), N, basis)) {}

const FockState& FluctuationObservables::evolved_vacuum(double t) {
  if (!cached_time_ || *cached_time_ != t) {
    cached_state_ = propagator_.evolve(FockState::vacuum(propagator_.basis()), 0.0, t);
    cached_time_ = t;
  }
  return *cached_state_;
}

FluctuationExpectations FluctuationObservables::evaluate(const ModeOperator& J, double t) {
  return evaluate(std::vector<ModeOperator>{J}, t).front();
}

std::vector<FluctuationExpectations> FluctuationObservables::evaluate(
    const std::vector<ModeOperator>& Js, double t) {
  for (const auto& J : Js) {
    if (J.modes() != propagator_.basis()->modes()) {
      throw ShapeError("one-particle operator does not match the basis");
    }
  }
  const FockState& forward = evolved_vacuum(t);
  const Eigen::VectorXcd ct = propagator_.trajectory().at(t).modes();
  const double dn = d_N(N_);
  const double root_n = std::sqrt(static_cast<double>(N_));

  // Interleaved: dGamma(J) U Omega, then phi(J phi_t) U Omega, per operator.
  LeakageMeter leak;
  std::vector<FockState> kicked;
  for (const auto& J : Js) {
    kicked.push_back(second_quantize(J, forward));
    const Eigen::VectorXcd jphi = J.matrix() * ct;
    kicked.push_back(apply_field(jphi, forward, &leak));
  }
  leak.check(propagator_.options().leakage_budget, "field operator in E2");
  const auto back = propagator_.evolve(kicked, t, 0.0);

  std::vector<FluctuationExpectations> out(Js.size());
  for (std::size_t k = 0; k < Js.size(); ++k) {
    out[k].e1 = dn / N_ * chi_.dot(back[2 * k]);
    out[k].e2 = dn / root_n * chi_.dot(back[2 * k + 1]);
  }
  return out;
}

}  // namespace mflab
