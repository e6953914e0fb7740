#pragma once

// Normalized Bernoulli density law for a polytropic gas and its subsonic
// truncation.  Units are scaled by the critical speed so that the sonic state
// is (q, rho) = (1, 1); in these units the Bernoulli relation reads
//
//     q^2/2 + rho^(gamma-1)/(gamma-1) = 1/2 + 1/(gamma-1),
//
// i.e. rho(q^2) = ((gamma+1)/2 - (gamma-1)/2 q^2)^(1/(gamma-1)).

#include <array>
#include <functional>
#include <span>

#include "nozzleflow/vec.hpp"

namespace nozzle {

struct GasModel {
  double gamma = 1.4;

  // A in p = A rho^gamma.  Sonic normalization forces A*gamma = 1, so this is
  // informational only.
  double pressure_scale() const { return 1.0 / gamma; }
};

class DensityLaw {
 public:
  explicit DensityLaw(GasModel gas = {});

  const GasModel& gas() const { return gas_; }
  double gamma() const { return gas_.gamma; }

  // rho(q^2).  Throws negative_input for q_sq < 0 and out_of_range at or past
  // the vacuum speed.
  double density(double q_sq) const;
  // d rho / d(q^2)
  double density_derivative(double q_sq) const;
  // d^2 rho / d(q^2)^2
  double density_second_derivative(double q_sq) const;
  // \int_0^{q_sq} rho(tau) d tau in closed form.
  double density_integral(double q_sq) const;

  double momentum(double q) const;
  // Unique q in [0, 1) with rho(q^2) q = m.  Throws supersonic for m >= 1.
  double invert_momentum_subsonic(double m) const;

  double stagnation_density() const;
  double vacuum_speed_sq() const;
  double enthalpy(double rho) const;
  double bernoulli_constant() const;
  double sound_speed(double rho) const;

 private:
  double base(double q_sq) const;

  GasModel gas_;
  double exponent_;  // 1/(gamma-1)
  double a_;         // (gamma+1)/2
  double b_;         // (gamma-1)/2
};

struct EllipticityBounds {
  double lambda = 0.0;  // min of H + 2 H' s^2
  double Lambda = 0.0;  // max of H
};

// Scans s^2 on points + 1 equispaced samples of [0, s_sq_max] plus the extra
// abscissae.  Throws ellipticity_violation if H increases anywhere or
// H + 2 H' s^2 is not positive.
EllipticityBounds certify_ellipticity(const std::function<double(double)>& H,
                                      const std::function<double(double)>& dH, std::span<const double> extra,
                                      int points, double s_sq_max);

// H_eps and F_eps: the density law frozen above q^2 = 1 - eps with a quintic
// Hermite blend on [1 - 2 eps, 1 - eps].  Construction certifies monotonicity
// and the ellipticity constants on a dense grid and refuses to build otherwise.
class TruncatedDensity {
 public:
  static constexpr int kScanPoints = 100000;
  static constexpr double kScanMax = 4.0;

  TruncatedDensity(const DensityLaw& law, double epsilon);

  const DensityLaw& law() const { return law_; }
  double epsilon() const { return epsilon_; }
  double blend_begin() const { return x0_; }
  double blend_end() const { return x1_; }
  double plateau() const { return plateau_; }

  // Ellipticity bounds of a_ij(p) over all p: lambda <= eig <= Lambda.
  double lambda() const { return lambda_; }
  double Lambda() const { return Lambda_; }
  // C(eps) = max(Lambda, 1/lambda).
  double C_eps() const;

  double H(double s_sq) const;
  double dH(double s_sq) const;
  double d2H(double s_sq) const;
  // 1/2 \int_0^{q_sq} H
  double F(double q_sq) const;

  // a_ij(p) = H(|p|^2) delta_ij + 2 H'(|p|^2) p_i p_j, the Hessian of
  // p -> F(|p|^2).
  Mat3 coefficient_matrix(const Vec3& grad) const;

  // Smallest eigenvalue direction value H + 2 H' s^2 (along p).
  double axial_coefficient(double s_sq) const { return H(s_sq) + 2.0 * dH(s_sq) * s_sq; }

 private:
  double blend_value(double t) const;
  double blend_slope(double t) const;
  double blend_curvature(double t) const;
  double blend_integral(double t) const;
  void certify();

  DensityLaw law_;
  double epsilon_;
  double x0_, x1_, width_;
  double plateau_;
  std::array<double, 6> c_{};  // blend polynomial in t = (s^2 - x0)/width
  double F_x0_ = 0.0;          // 1/2 \int_0^{x0} rho
  double F_x1_ = 0.0;
  double lambda_ = 0.0;
  double Lambda_ = 0.0;
};

}  // namespace nozzle
