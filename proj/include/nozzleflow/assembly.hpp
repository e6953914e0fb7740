#pragma once

// Discrete energy
//
//     I_L(phi) = sum_qp w F_eps(|grad phi|^2) - m0 b . phi,
//
// with b_i = |Sigma_L|^{-1} \int_{Sigma_L} N_i, together with its gradient and
// Hessian.  Inflow nodes carry the constraint phi = 0: their residual entries
// are zero and their Hessian rows and columns are replaced by the identity.

#include <span>
#include <vector>

#include "nozzleflow/gas.hpp"
#include "nozzleflow/mesh.hpp"
#include "nozzleflow/sparse.hpp"

namespace nozzle {

struct PotentialField {
  const Mesh* mesh = nullptr;
  std::vector<double> phi;

  static PotentialField zero(const Mesh& mesh);
  // phi = c (x3 - z_min), which vanishes on the inflow section.
  static PotentialField linear(const Mesh& mesh, double c);

  // Gradient at volume quadrature point q of element e.
  Vec3 gradient(int element, int q) const;
  // Gradient at reference point xi of element e, using the given J^{-T}.
  Vec3 gradient_at(int element, const Vec3& xi, const Mat3& inv_jac_t) const;
  // Nodal velocity: volume-weighted average of the quadrature-point gradients
  // of the elements touching each node.
  std::vector<Vec3> nodal_gradient() const;
};

// Per-quadrature-point state of one field: gradient and truncated density
// with its derivative.  Rebuilt once per Newton iterate.
struct CoefficientCache {
  std::vector<Vec3> grad;
  std::vector<double> H;
  std::vector<double> dH;
  double max_speed_sq = 0.0;
};

class Assembler {
 public:
  Assembler(const Mesh& mesh, const TruncatedDensity& trunc, int threads = 1);

  const Mesh& mesh() const { return *mesh_; }
  const TruncatedDensity& truncation() const { return *trunc_; }
  int threads() const { return threads_; }
  void set_threads(int threads) { threads_ = threads < 1 ? 1 : threads; }

  // Flux load per unit m0: b_i = |Sigma_L|^{-1} \int_{Sigma_L} N_i.
  const std::vector<double>& unit_flux_load() const { return load_; }
  double outflow_area() const { return outflow_area_; }

  CoefficientCache evaluate(const PotentialField& field) const;

  double energy(const PotentialField& field, double m0) const;
  // Sum of |element contributions|, a scale for round-off in energy().
  double energy_magnitude(const PotentialField& field, double m0) const;

  std::vector<double> residual(const CoefficientCache& cache, double m0) const;
  std::vector<double> residual(const PotentialField& field, double m0) const;

  CsrMatrix hessian(const CoefficientCache& cache) const;
  CsrMatrix hessian(const PotentialField& field) const;

  // Unconstrained stiffness \int H(0) grad N_i . grad N_j (no Dirichlet rows).
  CsrMatrix laplace_stiffness() const;

 private:
  void element_energy(const PotentialField& field, std::vector<double>& out) const;

  const Mesh* mesh_;
  const TruncatedDensity* trunc_;
  int threads_;
  CsrMatrix pattern_;
  std::vector<std::array<int, 64>> slots_;  // CSR positions of each element block
  std::vector<double> load_;
  double outflow_area_ = 0.0;
};

}  // namespace nozzle
