#include "nozzleflow/gas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nozzleflow/error.hpp"

namespace nozzle {

DensityLaw::DensityLaw(GasModel gas) : gas_(gas) {
  if (!(gas.gamma > 1.0) || !std::isfinite(gas.gamma)) {
    std::ostringstream os;
    os << "adiabatic exponent must satisfy gamma > 1 (got " << gas.gamma << ")";
    throw Error(Errc::invalid_argument, os.str());
  }
  exponent_ = 1.0 / (gas.gamma - 1.0);
  a_ = 0.5 * (gas.gamma + 1.0);
  b_ = 0.5 * (gas.gamma - 1.0);
}

double DensityLaw::base(double q_sq) const {
  if (q_sq < 0.0) throw Error(Errc::negative_input, "speed squared must be non-negative");
  const double v = a_ - b_ * q_sq;
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << "q^2 = " << q_sq << " is at or beyond the vacuum speed " << vacuum_speed_sq();
    throw Error(Errc::out_of_range, os.str());
  }
  return v;
}

double DensityLaw::density(double q_sq) const { return std::pow(base(q_sq), exponent_); }

double DensityLaw::density_derivative(double q_sq) const {
  // exponent * b == 1/2
  return -0.5 * std::pow(base(q_sq), exponent_ - 1.0);
}

double DensityLaw::density_second_derivative(double q_sq) const {
  return 0.5 * b_ * (exponent_ - 1.0) * std::pow(base(q_sq), exponent_ - 2.0);
}

double DensityLaw::density_integral(double q_sq) const {
  const double p = exponent_ + 1.0;  // gamma/(gamma-1)
  base(q_sq);  // domain check
  // a^p - (a - b q^2)^p without cancellation at small q^2
  return -(2.0 / gas_.gamma) * std::pow(a_, p) * std::expm1(p * std::log1p(-b_ * q_sq / a_));
}

double DensityLaw::momentum(double q) const {
  if (q < 0.0) throw Error(Errc::negative_input, "speed must be non-negative");
  return density(q * q) * q;
}

double DensityLaw::invert_momentum_subsonic(double m) const {
  if (m < 0.0) throw Error(Errc::negative_input, "momentum must be non-negative");
  if (m >= 1.0) {
    std::ostringstream os;
    os << "momentum " << m << " >= 1 has no subsonic preimage";
    throw Error(Errc::supersonic, os.str());
  }
  if (m == 0.0) return 0.0;
  // rho(q^2) q is strictly increasing on [0, 1]; bisect to interval collapse.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (momentum(mid) < m)
      lo = mid;
    else
      hi = mid;
  }
  return std::abs(momentum(lo) - m) <= std::abs(momentum(hi) - m) ? lo : hi;
}

double DensityLaw::stagnation_density() const { return std::pow(a_, exponent_); }
double DensityLaw::vacuum_speed_sq() const { return a_ / b_; }
double DensityLaw::enthalpy(double rho) const { return std::pow(rho, gas_.gamma - 1.0) * exponent_; }
double DensityLaw::bernoulli_constant() const { return 0.5 + exponent_; }
double DensityLaw::sound_speed(double rho) const { return std::sqrt(std::pow(rho, gas_.gamma - 1.0)); }

// ---------------------------------------------------------------------------

TruncatedDensity::TruncatedDensity(const DensityLaw& law, double epsilon)
    : law_(law), epsilon_(epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.25)) {
    std::ostringstream os;
    os << "truncation parameter must lie in (0, 1/4) (got " << epsilon << ")";
    throw Error(Errc::invalid_argument, os.str());
  }
  x0_ = 1.0 - 2.0 * epsilon;
  x1_ = 1.0 - epsilon;
  width_ = x1_ - x0_;
  plateau_ = law_.density(1.0 - 1.5 * epsilon);

  // Quintic Hermite in t = (s^2 - x0)/width: value, slope and curvature of rho
  // at t = 0, of the constant plateau at t = 1.
  const double y0 = law_.density(x0_);
  const double d0 = law_.density_derivative(x0_) * width_;
  const double s0 = law_.density_second_derivative(x0_) * width_ * width_;
  c_[0] = y0;
  c_[1] = d0;
  c_[2] = 0.5 * s0;
  const double A = plateau_ - c_[0] - c_[1] - c_[2];
  const double B = 0.0 - c_[1] - 2.0 * c_[2];
  const double C = 0.0 - 2.0 * c_[2];
  c_[3] = 10.0 * A - 4.0 * B + 0.5 * C;
  c_[4] = -15.0 * A + 7.0 * B - C;
  c_[5] = 6.0 * A - 3.0 * B + 0.5 * C;

  F_x0_ = 0.5 * law_.density_integral(x0_);
  F_x1_ = F_x0_ + 0.5 * width_ * blend_integral(1.0);
  certify();
}

double TruncatedDensity::blend_value(double t) const {
  return c_[0] + t * (c_[1] + t * (c_[2] + t * (c_[3] + t * (c_[4] + t * c_[5]))));
}
double TruncatedDensity::blend_slope(double t) const {
  return c_[1] + t * (2.0 * c_[2] + t * (3.0 * c_[3] + t * (4.0 * c_[4] + t * 5.0 * c_[5])));
}
double TruncatedDensity::blend_curvature(double t) const {
  return 2.0 * c_[2] + t * (6.0 * c_[3] + t * (12.0 * c_[4] + t * 20.0 * c_[5]));
}
double TruncatedDensity::blend_integral(double t) const {
  return t * (c_[0] + t * (c_[1] / 2 + t * (c_[2] / 3 + t * (c_[3] / 4 + t * (c_[4] / 5 + t * c_[5] / 6)))));
}

double TruncatedDensity::H(double s_sq) const {
  if (s_sq < x0_) return law_.density(s_sq);
  if (s_sq >= x1_) return plateau_;
  return blend_value((s_sq - x0_) / width_);
}

double TruncatedDensity::dH(double s_sq) const {
  if (s_sq < x0_) return law_.density_derivative(s_sq);
  if (s_sq >= x1_) return 0.0;
  return blend_slope((s_sq - x0_) / width_) / width_;
}

double TruncatedDensity::d2H(double s_sq) const {
  if (s_sq < x0_) return law_.density_second_derivative(s_sq);
  if (s_sq >= x1_) return 0.0;
  return blend_curvature((s_sq - x0_) / width_) / (width_ * width_);
}

double TruncatedDensity::F(double q_sq) const {
  if (q_sq < x0_) return 0.5 * law_.density_integral(q_sq);
  if (q_sq >= x1_) return F_x1_ + 0.5 * plateau_ * (q_sq - x1_);
  return F_x0_ + 0.5 * width_ * blend_integral((q_sq - x0_) / width_);
}

double TruncatedDensity::C_eps() const { return std::max(Lambda_, 1.0 / lambda_); }

Mat3 TruncatedDensity::coefficient_matrix(const Vec3& p) const {
  const double s_sq = norm_sq(p);
  const double h = H(s_sq);
  const double dh2 = 2.0 * dH(s_sq);
  Mat3 a{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a[i][j] = dh2 * p[i] * p[j] + (i == j ? h : 0.0);
  return a;
}

EllipticityBounds certify_ellipticity(const std::function<double(double)>& H,
                                      const std::function<double(double)>& dH, std::span<const double> extra,
                                      int points, double s_sq_max) {
  double min_axial = std::numeric_limits<double>::infinity();
  double max_h = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  auto visit = [&](double x) {
    const double h = H(x);
    const double dh = dH(x);
    min_axial = std::min(min_axial, h + 2.0 * dh * x);
    max_h = std::max(max_h, h);
    if (dh > 0.0) {
      std::ostringstream os;
      os << "truncated density increases at s^2 = " << x << " (H' = " << dh << ")";
      throw Error(Errc::ellipticity_violation, os.str());
    }
    return h;
  };
  for (int i = 0; i <= points; ++i) {
    const double x = s_sq_max * static_cast<double>(i) / points;
    const double h = visit(x);
    if (h > prev * (1.0 + 1e-15)) {
      std::ostringstream os;
      os << "truncated density is not monotone near s^2 = " << x;
      throw Error(Errc::ellipticity_violation, os.str());
    }
    prev = h;
  }
  for (double x : extra) visit(x);
  if (!(min_axial > 0.0)) {
    std::ostringstream os;
    os << "H + 2 H' s^2 reaches " << min_axial << " <= 0";
    throw Error(Errc::ellipticity_violation, os.str());
  }
  return {min_axial, max_h};
}

void TruncatedDensity::certify() {
  const double junctions[] = {x0_, x1_};
  const auto b = certify_ellipticity([this](double x) { return H(x); }, [this](double x) { return dH(x); },
                                     junctions, kScanPoints, kScanMax);
  lambda_ = b.lambda;
  Lambda_ = b.Lambda;
}

}  // namespace nozzle
