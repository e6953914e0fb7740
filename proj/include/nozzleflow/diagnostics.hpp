#pragma once

// Measurements on computed fields: flux through sections, subsonic margin,
// far-field decay and its fitted rates, the flux-deficit lower bound, the
// weighted slab inequality, section Poincare constants and truncation-length
// stability.

#include <iosfwd>
#include <optional>
#include <vector>

#include "nozzleflow/assembly.hpp"
#include "nozzleflow/solver.hpp"

namespace nozzle {

struct FarField {
  double f_bar = 1.0;
  double q_bar = 0.0;
  double rho_bar = 1.0;
  double area = 0.0;  // pi f_bar^2
};

// Far state carrying m0 through the limiting section: rho(q^2) q = m0/(pi f_bar^2).
FarField far_state(double f_bar, const DensityLaw& law, double m0);
FarField far_state(const NozzleGeometry& geom, const DensityLaw& law, double m0);

// \int_{Sigma_t} H(|grad phi|^2) d3 phi.  The gradient at each face point is
// the mean of the two adjacent elements (one-sided on the end sections).
double flux_at(const PotentialField& field, const TruncatedDensity& trunc, double t);

// max over volume quadrature points of |grad phi|.
double max_speed(const PotentialField& field);

struct SlabDeviation {
  double energy = 0.0;  // \int_{Omega(T,T+1)} |grad phi - q_bar e3|^2
  double sup = 0.0;     // max over the slab's quadrature points
  double volume = 0.0;
};
SlabDeviation slab_deviation(const PotentialField& field, const FarField& far, double T);

struct FitResult {
  double rate = 0.0;  // decay rate of |grad phi - q_bar e3| (half the energy slope)
  double ci = 0.0;    // about two standard errors of rate
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double other_r_squared = 0.0;  // same data under the competing model
  bool model_mismatch = false;   // the competing model fits better
  int used = 0;
};

// log E = c - 2 d T.  Points with E <= floor are dropped; throws noise_floor if
// fewer than five remain or the slope is not significantly negative.
FitResult fit_exponential_rate(const std::vector<double>& T, const std::vector<double>& E, double floor = 0.0);
// log E = c - 2 l log T, same rules.
FitResult fit_algebraic_rate(const std::vector<double>& T, const std::vector<double>& E, double floor = 0.0);
// Unhalved variant for a quantity that decays like T^-p itself (sup norms).
FitResult fit_power_exponent(const std::vector<double>& T, const std::vector<double>& v, double floor = 0.0);

struct DecayReport {
  std::vector<double> stations;
  std::vector<double> slab_energy;
  std::vector<double> sup_dev;
  double noise_floor = 0.0;
  std::optional<FitResult> exponential;
  std::optional<FitResult> algebraic;
  double predicted_beta = 0.0;  // lambda / Lambda_eff^2
};

DecayReport decay_report(const PotentialField& field, const FarField& far, const std::vector<double>& stations,
                         double noise_floor = 0.0);
void write_decay_table(const DecayReport& report, std::ostream& os);

// Slab energies of the uniform-flow solve on a straight copy of the lattice,
// started from zero: what the solver leaves behind when the exact answer has
// no decay at all.  Returns ten times the largest of them.
double noise_floor(const Mesh& mesh, const TruncatedDensity& trunc, double m0, const std::vector<double>& stations,
                   const SolverConfig& config = {});

struct OptimalityStation {
  double t = 0.0;
  double area = 0.0;
  double deficit = 0.0;      // rho_bar q_bar | |Sigma_bar| - |Sigma_t| |
  double flux_error = 0.0;   // |flux_at(t) - m0|
  double lower_bound = 0.0;  // certified lower bound on sup |grad phi - q_bar e3| over Sigma_t
  double section_sup = 0.0;  // measured sup over the face points of Sigma_t
  double slab_sup = 0.0;     // measured sup over Omega(t, t+1)
};

struct OptimalityReport {
  std::vector<OptimalityStation> stations;
  std::optional<FitResult> sup_fit;  // exponent of slab_sup against t
};

// Throws inconsistent_flux when |flux_at(t) - m0| > flux_tol at any station.
OptimalityReport optimality_lower_bound(const PotentialField& field, const TruncatedDensity& trunc,
                                        const FarField& far, double m0, const std::vector<double>& stations,
                                        double flux_tol);

double zeta_weight(double x3, double t1, double t2, double beta, double h);

struct WeightedSlabResult {
  double lhs = 0.0;  // lambda \int (zeta - 1) |grad Phi|^2
  double rhs = 0.0;  // Lambda_eff^2 beta \int_ramps zeta |grad Phi|^2
  double beta = 0.0;
  double Lambda_eff = 0.0;
  double residual() const { return lhs - rhs; }
};

// Phi = phi1 - phi2.  beta defaults to lambda / Lambda_eff^2 with
// Lambda_eff = max(Lambda, Lambda_P).
WeightedSlabResult weighted_slab_check(const PotentialField& phi1, const PotentialField& phi2,
                                       const TruncatedDensity& trunc, double t1, double t2, double h,
                                       double Lambda_P, std::optional<double> beta = std::nullopt);

// Neumann Poincare constant of Sigma_t: 1/sqrt(mu_2) for the smallest nonzero
// eigenvalue of -Delta on the section, from a Q1 section mesh refined
// `refine` times over the mesh's (N_r, N_theta).
double poincare_constant(const Mesh& mesh, double t, int refine = 2);
double section_poincare_constant(const NozzleGeometry& geom, double t, int N_r, int N_theta);

struct DomainConvergence {
  double discrepancy = 0.0;  // L2 norm of grad phi_L - grad phi_{factor L} on Omega(-L/2, L/2)
  double reference = 0.0;    // L2 norm of grad phi_L there
  SolveReport short_report, long_report;
};

// Solves on L and factor L with equal axial spacing (uniform lattice) and
// compares gradients on the shared elements of Omega(-L/2, L/2).
DomainConvergence domain_convergence(const NozzleGeometry& geom, const TruncatedDensity& trunc, double m0,
                                     const MeshSpec& spec, double factor, const SolverConfig& config = {});

// L2 difference of gradients of two fields over the elements of the first
// mesh lying in [z0, z1], matched by lattice position.  Throws
// incompatible_meshes when the lattices disagree there.
double gradient_discrepancy(const PotentialField& a, const PotentialField& b, double z0, double z1,
                            double* reference = nullptr);

}  // namespace nozzle
