#pragma once

// One-particle reduced density matrices, trace distance, the field operator
// phi(f) and the fluctuation expectations E1_t(J), E2_t(J).

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mflab/fock.hpp"
#include "mflab/propagate.hpp"

namespace mflab {

class DensityMatrix {
 public:
  explicit DensityMatrix(Eigen::MatrixXcd matrix);
  /// |v><v| / |v|^2.
  static DensityMatrix pure(const Eigen::VectorXcd& v);

  const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }
  int modes() const noexcept { return static_cast<int>(matrix_.rows()); }
  double trace() const { return matrix_.trace().real(); }
  double hermiticity_defect() const;
  Eigen::VectorXd eigenvalues() const;

 private:
  Eigen::MatrixXcd matrix_;
};

/// gamma(x; y) = <psi, a*_y a_x psi> / <psi, N psi>.
DensityMatrix reduced_density(const FockState& psi);

/// Tr |gamma - rho|, without the factor 1/2.
double trace_distance(const DensityMatrix& gamma, const DensityMatrix& rho);
double trace_norm(const Eigen::MatrixXcd& hermitian);

/// phi(f) psi = a*(f) psi + a(f) psi.
FockState apply_field(const Eigen::VectorXcd& f, const FockState& psi,
                      LeakageMeter* leakage = nullptr);

struct FluctuationExpectations {
  complex e1 = 0.0;
  complex e2 = 0.0;
};

/// E1_t(J) = (d_N/N) <chi, U*(t) dGamma(J) U(t) Omega> and
/// E2_t(J) = (d_N/sqrt N) <chi, U*(t) phi(J phi_t) U(t) Omega>, with
/// chi = W*(sqrt(N) phi_0) (a*(phi_0))^N / sqrt(N!) Omega.
class FluctuationObservables {
 public:
  FluctuationObservables(std::shared_ptr<const HartreeTrajectory> trajectory,
                         SampledPotential potential, int N, BasisPtr basis,
                         FluctuationOptions options);

  FluctuationExpectations evaluate(const ModeOperator& J, double t);
  /// Several operators at once; the backward evolutions share their generators.
  std::vector<FluctuationExpectations> evaluate(const std::vector<ModeOperator>& Js, double t);
  complex E1(const ModeOperator& J, double t) { return evaluate(J, t).e1; }
  complex E2(const ModeOperator& J, double t) { return evaluate(J, t).e2; }

  const FockState& chi() const noexcept { return chi_; }
  /// U(t; 0) Omega, cached per t.
  const FockState& evolved_vacuum(double t);
  double leakage() const { return propagator_.leakage(); }

 private:
  FluctuationPropagator propagator_;
  int N_;
  FockState chi_;
  std::optional<double> cached_time_;
  std::optional<FockState> cached_state_;
};

/// Tr J (gamma - |phi><phi|) for a reduced density gamma and mode vector c.
complex trace_against(const ModeOperator& J, const DensityMatrix& gamma, const Eigen::VectorXcd& c);

}  // namespace mflab
