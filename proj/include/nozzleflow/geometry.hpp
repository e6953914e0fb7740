#pragma once

// Nozzle wall r = f1(theta, x3) and obstacle r = f2(theta, x3) in cylindrical
// coordinates, with the admissibility checks the flow problem relies on.

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

namespace nozzle {

// Value and partial derivatives of a radius profile at one (theta, x3).
struct ProfileSample {
  double value = 0.0;
  double d_theta = 0.0;
  double d_z = 0.0;
  double d_zz = 0.0;
};

// Monotone piecewise-cubic (PCHIP) interpolant of tabulated radii, held
// constant outside the sampled range.
class ProfileTable {
 public:
  ProfileTable(std::vector<double> x, std::vector<double> y);
  ProfileSample operator()(double x) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  double y_front() const { return y_.front(); }
  double y_back() const { return y_.back(); }

 private:
  std::vector<double> x_, y_;
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

struct ThetaMode {
  int k = 1;
  double amplitude = 0.0;
};

struct NozzleProfile {
  enum class Kind { straight, algebraic, tabulated };

  Kind kind = Kind::straight;
  double f_bar = 1.0;
  double amplitude = 0.0;  // algebraic only
  double decay_l = 1.0;    // algebraic only
  double K = 4.0;          // beyond |x3| > K the asymptotic form holds exactly
  // Near-field modulation sum_k c_k cos(k theta), switched off for |x3| > K.
  std::vector<ThetaMode> theta_modes;
  std::shared_ptr<const ProfileTable> table;  // tabulated only

  static NozzleProfile straight(double f_bar, double K = 4.0);
  static NozzleProfile algebraic(double f_bar, double amplitude, double decay_l, double K);

  ProfileSample sample(double theta, double x3) const;
  double radius(double theta, double x3) const { return sample(theta, x3).value; }
  bool axisymmetric() const { return theta_modes.empty(); }
};

// Axisymmetric obstacle supported on [L1, L2].  The default shape is
// b * sin^(2p)(pi (x3 - L1)/(L2 - L1)); p >= 1 closes the tips with zero slope,
// p >= 1.5 also with zero curvature.
struct ObstacleProfile {
  double L1 = -2.0;
  double L2 = 2.0;
  double b = 0.4;
  double power = 2.0;
  std::shared_ptr<const ProfileTable> table;  // overrides the bump when set

  ProfileSample sample(double theta, double x3) const;
  double radius(double theta, double x3) const { return sample(theta, x3).value; }
};

struct AdmissibilityReport {
  double gap_constant = 1.0;    // smallest C certifying the bounds on f1, f1 - f2, f2
  double decay_constant = 0.0;  // sup of sum_k |x^k d^k (f1 - f_bar)| x^l beyond K (algebraic)
  double wall_min = 0.0, wall_max = 0.0;
  double gap_min = 0.0, gap_max = 0.0;
  double obstacle_max = 0.0;
  double area_min = 0.0, area_max = 0.0;  // inf / sup of |Sigma_t| over the sampled range
  double sample_extent = 0.0;
};

// Samples (theta, x3) over [0, 2pi) x [-X, X] with X well beyond K and the
// obstacle; throws inadmissible naming the first violating sample.
AdmissibilityReport verify_admissibility(const NozzleProfile& wall,
                                         const std::optional<ObstacleProfile>& obstacle);

class NozzleGeometry {
 public:
  explicit NozzleGeometry(NozzleProfile wall, std::optional<ObstacleProfile> obstacle = std::nullopt);

  const NozzleProfile& wall() const { return wall_; }
  const std::optional<ObstacleProfile>& obstacle() const { return obstacle_; }
  bool has_obstacle() const { return obstacle_.has_value(); }
  const AdmissibilityReport& admissibility() const { return report_; }
  double gap_constant() const { return report_.gap_constant; }

  // Limiting radius of the downstream far field.
  double f_bar() const;

  double wall_radius(double theta, double x3) const { return wall_.radius(theta, x3); }
  double obstacle_radius(double theta, double x3) const;
  ProfileSample wall_sample(double theta, double x3) const { return wall_.sample(theta, x3); }
  ProfileSample obstacle_sample(double theta, double x3) const;

  // 1/2 \int_0^{2pi} (f1^2 - f2^2) d theta.
  double cross_section_area(double x3) const;

 private:
  NozzleProfile wall_;
  std::optional<ObstacleProfile> obstacle_;
  AdmissibilityReport report_;
};

struct LoadedProfiles {
  NozzleProfile wall;
  std::optional<ObstacleProfile> obstacle;
};

// Plain-text rows "x3 f1 [f2]", strictly increasing x3, '#' comments.
LoadedProfiles load_profile_table(const std::filesystem::path& path);

}  // namespace nozzle
