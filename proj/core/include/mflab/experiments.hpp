#pragma once

// Experiment drivers: the 1/N rate scans (product and coherent initial data)
// and the fluctuation-bound probes.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mflab/fock.hpp"
#include "mflab/lattice.hpp"
#include "mflab/propagate.hpp"

namespace mflab {

/// Lattice, interaction, initial datum and numerical settings shared by all experiments.
struct ExperimentSetup {
  Grid grid{1, 6, 1.0};
  PotentialSpec potential = PotentialSpec::coulomb_like(0.5, 1.0);
  InitialStateSpec initial{};
  double hartree_dt = 1e-3;
  KrylovOptions krylov{};
  double leakage_budget = 1e-8;
  std::size_t max_dimension = OccupationBasis::kDefaultMaxDimension;
  int threads = 1;

  std::string describe() const;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
  bool degenerate = true;
};

/// Least squares of ln y against ln x. Degenerate with fewer than three points
/// or when some y <= 1e-14.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);
/// Least squares of y against x; r_squared as usual, never degenerate for >= 2 distinct x.
SlopeFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

struct RateConfig {
  ExperimentSetup setup{};
  std::vector<int> N_list{2, 3, 4, 6, 8};
  std::vector<double> t_list{0.25, 0.5, 1.0};
  /// Fock cutoff for the coherent scan; 0 selects the tail rule for each N.
  int coherent_cutoff = 0;
};

struct RatePoint {
  int N = 0;
  double t = 0.0;
  double D = 0.0;
  std::size_t basis_dim = 0;
  double leakage = 0.0;
  /// Norm outside the initial particle-number sector (product initial data).
  double sector_defect = 0.0;
  double wall_seconds = 0.0;
};

struct RateReport {
  std::string kind;
  std::string setup_echo;
  std::vector<int> N_list;
  std::vector<double> t_list;
  /// Ordered by N, then t.
  std::vector<RatePoint> points;
  /// One fit per entry of t_list.
  std::vector<SlopeFit> fits;
  double runtime_seconds = 0.0;

  double D(int N, double t) const;
};

/// D(N, t) = Tr |gamma_{N,t} - |phi_t><phi_t|| for the product initial state
/// evolved by exp(-i H_N t), against the Hartree solution.
RateReport rate_scan(const RateConfig& config);
/// Same with the coherent initial state W(sqrt(N) phi) Omega on the truncated Fock space.
RateReport coherent_rate_scan(const RateConfig& config);

/// Writes one row per (N, t). With deterministic output the wall_seconds
/// column holds 0 so that repeated runs give identical bytes.
void write_rate_csv(std::ostream& out, const RateReport& report, const std::string& config_echo,
                    bool deterministic);

/// Tr J (gamma_{N,t} - |phi_t><phi_t|) from exp(-i H_N t) on the product state,
/// against E1_t(J) + E2_t(J) from the fluctuation dynamics.
struct ProofIdentityConfig {
  ExperimentSetup setup{Grid{1, 4, 1.0}, PotentialSpec::coulomb_like(0.5, 1.0), {}, 5e-4};
  int N = 3;
  double t = 0.3;
  int cutoff = 22;
  /// Generator step of the fluctuation dynamics.
  double dt = 1e-3;
  int operators = 5;
  std::uint64_t seed = 1;
};

struct ProofIdentityRow {
  complex direct = 0.0;
  complex e1 = 0.0;
  complex e2 = 0.0;
  double operator_norm = 0.0;
  /// |direct - e1 - e2|.
  double residual = 0.0;
};

struct ProofIdentityReport {
  std::string setup_echo;
  int N = 0;
  double t = 0.0;
  std::vector<ProofIdentityRow> rows;
  double leakage = 0.0;
  double runtime_seconds = 0.0;
};

ProofIdentityReport proof_identity_check(const ProofIdentityConfig& config);

/// Self-error of the N-body-vs-Hartree pipeline under step refinement: D(N, t)
/// with Hartree steps dt, dt/2, ..., and the ratios of successive differences.
struct StepConvergenceReport {
  std::vector<double> dt;
  std::vector<double> D;
  /// |D(dt_k) - D(dt_{k+1})|.
  std::vector<double> differences;
  /// differences[k] / differences[k+1].
  std::vector<double> ratios;
};

StepConvergenceReport step_convergence(const ExperimentSetup& setup, int N, double t,
                                       double dt, int levels = 3);

struct FluctuationConfig {
  ExperimentSetup setup{Grid{1, 4, 1.0}, PotentialSpec::coulomb_like(0.05, 1.0)};
  /// Particle-number cutoff of the fluctuation Fock space.
  int cutoff = 12;
  /// Generator step; an even multiple of the Hartree step.
  double dt = 0.01;
  /// Sample times for moments and parity, ascending, each a multiple of dt.
  std::vector<double> t_list{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  /// N for the moment, parity and truncation probes.
  int N = 4;
  /// N values for the 1/sqrt(N) scaling probes.
  std::vector<int> N_list{2, 4, 8, 16};
  /// Moment orders j.
  std::vector<int> moments{1, 2};
  /// Weight (N+1)^{j/2} in the L3 and U-vs-U~ probes.
  int weight_power = 0;
  /// Time at which the L3 and U-vs-U~ probes are taken.
  double probe_time = 0.5;
  std::uint64_t seed = 1;
};

struct MomentSeries {
  std::string dynamics;  // "U" or "U_tilde"
  int j = 0;
  std::vector<double> t;
  /// <N^j> and <(N+1)^j>.
  std::vector<double> moment;
  std::vector<double> shifted_moment;
  /// ln <(N+1)^j> = ln C + K g(t), g(t) = t^{3/2} for U and t for U~.
  SlopeFit envelope;
};

struct ScalingSeries {
  std::vector<int> N;
  std::vector<double> value;
  SlopeFit fit;
};

struct TruncationProbe {
  int truncation = 0;
  /// ||U(t;0) Omega - U^(M)(t;0) Omega|| at the last sample time.
  double difference = 0.0;
};

struct FluctuationReport {
  std::string setup_echo;
  std::vector<MomentSeries> moments;
  /// Odd-sector mass of U~(t;0) Omega per sample time.
  std::vector<double> parity_times;
  std::vector<double> odd_mass;
  std::vector<double> even_mass;
  /// ||(N+1)^{j/2} L3 psi|| over N; slope -1/2 exactly.
  ScalingSeries l3_norms;
  /// sqrt(N) ||(N+1)^{j/2} L3 psi|| / ((||phi_t||_inf + 1) ||(N+1)^{(j+3)/2} psi||) per N.
  std::vector<double> l3_constants;
  /// ||(N+1)^{j/2} (U* phi(f) U - U~* phi(f) U~) Omega|| over N; slope about -1/2.
  ScalingSeries field_difference;
  std::vector<TruncationProbe> truncation;
  bool truncation_monotone = false;
  double max_leakage = 0.0;
  double runtime_seconds = 0.0;
};

FluctuationReport fluctuation_suite(const FluctuationConfig& config);

void write_fluctuation_csv(std::ostream& out, const FluctuationReport& report,
                           const std::string& config_echo);

}  // namespace mflab
