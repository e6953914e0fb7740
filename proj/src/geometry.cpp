#include "nozzleflow/geometry.hpp"

#include <algorithm>
// Boost 1.74 pchip calls isnan unqualified; math.h puts it in the global namespace.
#include <math.h>

#include <boost/math/interpolators/pchip.hpp>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "nozzleflow/error.hpp"

namespace nozzle {

namespace {

constexpr double kPi = std::numbers::pi;

// C^2 switch: 0 for |z| <= K/2, 1 for |z| >= K (quintic smootherstep).
struct Switch {
  double value, d1, d2;
};

Switch smooth_switch(double z, double K) {
  const double half = 0.5 * K;
  const double u = (std::abs(z) - half) / half;
  if (u <= 0.0) return {0.0, 0.0, 0.0};
  if (u >= 1.0) return {1.0, 0.0, 0.0};
  const double sgn = z < 0.0 ? -1.0 : 1.0;
  const double S = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
  const double dS = 30.0 * u * u * (1.0 - u) * (1.0 - u);
  const double d2S = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
  return {S, dS * sgn / half, d2S / (half * half)};
}

struct Modulation {
  double value = 0.0, d_theta = 0.0;
};

Modulation modulation(const std::vector<ThetaMode>& modes, double theta) {
  Modulation m;
  for (const auto& mode : modes) {
    m.value += mode.amplitude * std::cos(mode.k * theta);
    m.d_theta -= mode.amplitude * mode.k * std::sin(mode.k * theta);
  }
  return m;
}

std::string point_string(double theta, double x3) {
  std::ostringstream os;
  os << "(theta = " << theta << ", x3 = " << x3 << ")";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

struct ProfileTable::Impl {
  boost::math::interpolators::pchip<std::vector<double>> spline;
};

ProfileTable::ProfileTable(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size() || x_.size() < 4)
    throw Error(Errc::invalid_argument, "profile table needs at least four (x3, radius) rows");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1])) throw Error(Errc::invalid_argument, "profile table x3 must be strictly increasing");
  auto xs = x_;
  auto ys = y_;
  impl_ = std::make_shared<Impl>(Impl{boost::math::interpolators::pchip<std::vector<double>>(std::move(xs), std::move(ys))});
}

ProfileSample ProfileTable::operator()(double x) const {
  if (x <= x_.front()) return {y_.front(), 0.0, 0.0, 0.0};
  if (x >= x_.back()) return {y_.back(), 0.0, 0.0, 0.0};
  ProfileSample s;
  s.value = impl_->spline(x);
  s.d_z = impl_->spline.prime(x);
  // PCHIP is only C^1; a centered difference of the slope stands in for the
  // curvature, which only the decay diagnostics read.
  const double h = 1e-5 * std::max(1.0, std::abs(x));
  if (x - h > x_.front() && x + h < x_.back())
    s.d_zz = (impl_->spline.prime(x + h) - impl_->spline.prime(x - h)) / (2.0 * h);
  return s;
}

// ---------------------------------------------------------------------------

NozzleProfile NozzleProfile::straight(double f_bar, double K) {
  NozzleProfile p;
  p.kind = Kind::straight;
  p.f_bar = f_bar;
  p.K = K;
  return p;
}

NozzleProfile NozzleProfile::algebraic(double f_bar, double amplitude, double decay_l, double K) {
  NozzleProfile p;
  p.kind = Kind::algebraic;
  p.f_bar = f_bar;
  p.amplitude = amplitude;
  p.decay_l = decay_l;
  p.K = K;
  return p;
}

ProfileSample NozzleProfile::sample(double theta, double x3) const {
  ProfileSample s;
  if (kind == Kind::tabulated) {
    s = (*table)(x3);
  } else {
    s.value = f_bar;
  }
  const Switch sw = smooth_switch(x3, K);
  if (kind == Kind::algebraic && amplitude != 0.0) {
    const double az = std::abs(x3);
    const double sgn = x3 < 0.0 ? -1.0 : 1.0;
    const double g = std::pow(1.0 + az, -decay_l);
    const double dg = -decay_l * sgn * g / (1.0 + az);
    const double d2g = decay_l * (decay_l + 1.0) * g / ((1.0 + az) * (1.0 + az));
    s.value += amplitude * sw.value * g;
    s.d_z += amplitude * (sw.d1 * g + sw.value * dg);
    s.d_zz += amplitude * (sw.d2 * g + 2.0 * sw.d1 * dg + sw.value * d2g);
  }
  if (!theta_modes.empty()) {
    const Modulation m = modulation(theta_modes, theta);
    s.value += (1.0 - sw.value) * m.value;
    s.d_theta += (1.0 - sw.value) * m.d_theta;
    s.d_z -= sw.d1 * m.value;
    s.d_zz -= sw.d2 * m.value;
  }
  return s;
}

ProfileSample ObstacleProfile::sample(double /*theta*/, double x3) const {
  if (table) {
    ProfileSample s = (*table)(x3);
    if (s.value <= 0.0) return {};
    return s;
  }
  if (x3 <= L1 || x3 >= L2) return {};
  const double w = kPi / (L2 - L1);
  const double u = w * (x3 - L1);
  const double sn = std::sin(u);
  const double cs = std::cos(u);
  const double p2 = 2.0 * power;
  ProfileSample s;
  s.value = b * std::pow(sn, p2);
  s.d_z = b * p2 * std::pow(sn, p2 - 1.0) * cs * w;
  s.d_zz = b * p2 * ((p2 - 1.0) * std::pow(sn, p2 - 2.0) * cs * cs - std::pow(sn, p2)) * w * w;
  return s;
}

// ---------------------------------------------------------------------------

AdmissibilityReport verify_admissibility(const NozzleProfile& wall, const std::optional<ObstacleProfile>& obstacle) {
  if (!(wall.f_bar > 0.0)) throw Error(Errc::invalid_argument, "limiting radius f_bar must be positive");
  if (!(wall.K > 0.0)) throw Error(Errc::invalid_argument, "onset abscissa K must be positive");
  if (wall.kind == NozzleProfile::Kind::algebraic && !(wall.decay_l > 0.0))
    throw Error(Errc::invalid_argument, "algebraic decay exponent l must be positive");
  if (wall.kind == NozzleProfile::Kind::tabulated && !wall.table)
    throw Error(Errc::invalid_argument, "tabulated wall profile has no table");
  if (obstacle) {
    if (!obstacle->table) {
      if (!(obstacle->L1 < obstacle->L2)) throw Error(Errc::invalid_argument, "obstacle needs L1 < L2");
      if (!(obstacle->b >= 0.0)) throw Error(Errc::invalid_argument, "obstacle radius b must be non-negative");
      if (!(obstacle->power >= 1.0)) throw Error(Errc::invalid_argument, "obstacle shape power must be >= 1");
    }
  }

  double extent = std::max(50.0, 4.0 * wall.K);
  if (obstacle) extent = std::max({extent, 2.0 * std::abs(obstacle->L1), 2.0 * std::abs(obstacle->L2)});
  if (wall.table) extent = std::max({extent, std::abs(wall.table->x_min()), std::abs(wall.table->x_max())});
  if (obstacle && obstacle->table)
    extent = std::max({extent, std::abs(obstacle->table->x_min()), std::abs(obstacle->table->x_max())});

  constexpr int kTheta = 64;
  const double dz = 0.01;
  const int nz = static_cast<int>(std::ceil(2.0 * extent / dz));

  AdmissibilityReport rep;
  rep.sample_extent = extent;
  rep.wall_min = std::numeric_limits<double>::infinity();
  rep.gap_min = std::numeric_limits<double>::infinity();
  rep.area_min = std::numeric_limits<double>::infinity();
  for (int iz = 0; iz <= nz; ++iz) {
    const double z = -extent + 2.0 * extent * iz / nz;
    double area = 0.0;
    for (int it = 0; it < kTheta; ++it) {
      const double th = 2.0 * kPi * it / kTheta;
      const double f1 = wall.radius(th, z);
      const double f2 = obstacle ? obstacle->radius(th, z) : 0.0;
      if (!(f1 > 0.0) || !std::isfinite(f1))
        throw Error(Errc::inadmissible, "wall radius must be positive at " + point_string(th, z));
      if (f2 < 0.0) throw Error(Errc::inadmissible, "obstacle radius negative at " + point_string(th, z));
      if (!(f1 - f2 > 0.0))
        throw Error(Errc::inadmissible, "obstacle touches or crosses the wall at " + point_string(th, z));
      rep.wall_min = std::min(rep.wall_min, f1);
      rep.wall_max = std::max(rep.wall_max, f1);
      rep.obstacle_max = std::max(rep.obstacle_max, f2);
      if (f2 > 0.0) {
        rep.gap_min = std::min(rep.gap_min, f1 - f2);
        rep.gap_max = std::max(rep.gap_max, f1 - f2);
      }
      area += 0.5 * (f1 * f1 - f2 * f2) * (2.0 * kPi / kTheta);
    }
    rep.area_min = std::min(rep.area_min, area);
    rep.area_max = std::max(rep.area_max, area);
  }
  if (!std::isfinite(rep.gap_min)) {
    // no obstacle sampled: the gap is the wall itself
    rep.gap_min = rep.wall_min;
    rep.gap_max = rep.wall_max;
  }
  rep.gap_constant = std::max({rep.wall_max, 1.0 / rep.wall_min, rep.gap_max, 1.0 / rep.gap_min, rep.obstacle_max});

  if (wall.kind == NozzleProfile::Kind::algebraic) {
    double sup = 0.0;
    for (int iz = 1; iz <= nz; ++iz) {
      const double z = wall.K + (extent - wall.K) * iz / nz;
      const ProfileSample s = wall.sample(0.0, z);
      const double sum = std::abs(s.value - wall.f_bar) + std::abs(z * s.d_z) + std::abs(z * z * s.d_zz);
      const double scaled = sum * std::pow(z, wall.decay_l);
      if (!std::isfinite(scaled))
        throw Error(Errc::inadmissible, "wall decay bound is not finite at " + point_string(0.0, z));
      sup = std::max(sup, scaled);
    }
    rep.decay_constant = sup;
  }
  return rep;
}

NozzleGeometry::NozzleGeometry(NozzleProfile wall, std::optional<ObstacleProfile> obstacle)
    : wall_(std::move(wall)), obstacle_(std::move(obstacle)) {
  report_ = verify_admissibility(wall_, obstacle_);
}

double NozzleGeometry::f_bar() const {
  if (wall_.kind == NozzleProfile::Kind::tabulated) return wall_.table->y_back();
  return wall_.f_bar;
}

double NozzleGeometry::obstacle_radius(double theta, double x3) const {
  return obstacle_ ? obstacle_->radius(theta, x3) : 0.0;
}

ProfileSample NozzleGeometry::obstacle_sample(double theta, double x3) const {
  return obstacle_ ? obstacle_->sample(theta, x3) : ProfileSample{};
}

double NozzleGeometry::cross_section_area(double x3) const {
  if (wall_.axisymmetric()) {
    const double f1 = wall_radius(0.0, x3);
    const double f2 = obstacle_radius(0.0, x3);
    return kPi * (f1 * f1 - f2 * f2);
  }
  // periodic trapezoid rule: spectrally accurate for smooth theta profiles
  constexpr int kTheta = 256;
  double area = 0.0;
  for (int it = 0; it < kTheta; ++it) {
    const double th = 2.0 * kPi * it / kTheta;
    const double f1 = wall_radius(th, x3);
    const double f2 = obstacle_radius(th, x3);
    area += 0.5 * (f1 * f1 - f2 * f2);
  }
  return area * 2.0 * kPi / kTheta;
}

// ---------------------------------------------------------------------------

LoadedProfiles load_profile_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open profile table " + path.string());
  std::vector<double> x, f1, f2;
  bool has_f2 = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    std::vector<double> vals;
    double v;
    while (row >> v) vals.push_back(v);
    if (!row.eof() || vals.size() < 2 || vals.size() > 3)
      throw Error(Errc::io_error, path.string() + ":" + std::to_string(line_no) + ": expected 'x3 f1 [f2]'");
    if (!x.empty() && (vals.size() == 3) != has_f2)
      throw Error(Errc::io_error, path.string() + ":" + std::to_string(line_no) + ": inconsistent column count");
    has_f2 = vals.size() == 3;
    x.push_back(vals[0]);
    f1.push_back(vals[1]);
    if (has_f2) f2.push_back(vals[2]);
  }
  LoadedProfiles out;
  out.wall.kind = NozzleProfile::Kind::tabulated;
  out.wall.table = std::make_shared<ProfileTable>(x, f1);
  out.wall.f_bar = f1.back();
  out.wall.K = std::max(std::abs(x.front()), std::abs(x.back()));
  if (has_f2) {
    ObstacleProfile obs;
    auto lo = std::find_if(f2.begin(), f2.end(), [](double v) { return v > 0.0; });
    if (lo != f2.end()) {
      auto hi = std::find_if(f2.rbegin(), f2.rend(), [](double v) { return v > 0.0; });
      const auto i_lo = static_cast<std::size_t>(lo - f2.begin());
      const auto i_hi = f2.size() - 1 - static_cast<std::size_t>(hi - f2.rbegin());
      obs.L1 = x[i_lo > 0 ? i_lo - 1 : 0];
      obs.L2 = x[std::min(i_hi + 1, x.size() - 1)];
      obs.b = *std::max_element(f2.begin(), f2.end());
      obs.table = std::make_shared<ProfileTable>(x, f2);
      out.obstacle = obs;
    }
  }
  return out;
}

}  // namespace nozzle
