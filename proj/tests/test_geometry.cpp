#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "support.hpp"
#include "nozzleflow/geometry.hpp"

using namespace nozzle;
using namespace nozzle::test;
using std::numbers::pi;

TEST_CASE("straight wall is f_bar beyond K") {
  const NozzleGeometry g(NozzleProfile::straight(1.3, 4.0));
  for (double z : {-100.0, -4.0, 4.5, 10.0, 1e4})
    for (double th : {0.0, 1.0, 6.0}) CHECK(g.wall_radius(th, z) == 1.3);
}

TEST_CASE("algebraic wall closed form") {
  const NozzleGeometry zero(NozzleProfile::algebraic(1.0, 0.0, 1.0, 5.0));
  for (double z : {5.5, 20.0, 300.0}) CHECK(zero.wall_radius(0.0, z) == 1.0);

  const NozzleGeometry g(NozzleProfile::algebraic(1.0, 0.2, 1.0, 5.0));
  CHECK(std::abs(g.wall_radius(0.3, 100.0) - (1.0 + 0.2 / 101.0)) <= 1e-14);
  CHECK(std::abs(g.wall_radius(0.3, -100.0) - (1.0 + 0.2 / 101.0)) <= 1e-14);
  // Switched off in the core.
  CHECK(g.wall_radius(0.0, 0.0) == 1.0);
  CHECK(g.wall_radius(0.0, 2.4) == 1.0);

  // Derivatives against central differences across the switch.
  for (double z : {2.6, 3.3, 4.2, 7.0}) {
    const double h = 1e-5;
    const ProfileSample s = g.wall_sample(0.0, z);
    CHECK(s.d_z == doctest::Approx((g.wall_radius(0, z + h) - g.wall_radius(0, z - h)) / (2 * h)).epsilon(1e-7));
    CHECK(s.d_zz == doctest::Approx((g.wall_sample(0, z + h).d_z - g.wall_sample(0, z - h).d_z) / (2 * h))
                        .epsilon(1e-6));
  }
}

TEST_CASE("algebraic decay product stays bounded") {
  for (double l : {1.0, 2.0}) {
    const NozzleProfile p = NozzleProfile::algebraic(1.0, 0.2, l, 5.0);
    double sup = 0.0;
    for (double z = 5.0; z < 2000.0; z *= 1.01) {
      const ProfileSample s = p.sample(0.0, z);
      sup = std::max(sup, (std::abs(s.value - 1.0) + std::abs(z * s.d_z) + std::abs(z * z * s.d_zz)) * std::pow(z, l));
    }
    // Oracle: for z > K the sum is a (1 + z)^-l (1 + l z/(1+z) + l(l+1) z^2/(1+z)^2) z^l < a (1 + l + l(l+1)).
    CHECK(sup < 0.2 * (1.0 + l + l * (l + 1.0)));
    const NozzleGeometry g(p);
    CHECK(std::isfinite(g.admissibility().decay_constant));
    CHECK(g.admissibility().decay_constant <= 0.2 * (1.0 + l + l * (l + 1.0)));
    CHECK(g.admissibility().decay_constant == doctest::Approx(sup).epsilon(0.05));
  }
}

TEST_CASE("obstacle bump") {
  const NozzleGeometry g(NozzleProfile::straight(1.0), bump(0.4, -2.0, 2.0));
  CHECK(g.obstacle_radius(0.0, -2.0) == 0.0);
  CHECK(g.obstacle_radius(0.0, 2.0) == 0.0);
  CHECK(g.obstacle_radius(0.0, 0.0) == doctest::Approx(0.4).epsilon(1e-15));
  for (double z : {-50.0, -2.01, 2.5, 7.0}) CHECK(g.obstacle_radius(1.0, z) == 0.0);
  const double h = 1e-4;
  for (double tip : {-2.0, 2.0}) {
    const double fd = (g.obstacle_radius(0, tip + h) - g.obstacle_radius(0, tip - h)) / (2 * h);
    CHECK(std::abs(fd) <= 1e-6);
    const double fd2 =
        (g.obstacle_radius(0, tip + h) - 2 * g.obstacle_radius(0, tip) + g.obstacle_radius(0, tip - h)) / (h * h);
    CHECK(std::abs(fd2) <= 1e-3);
  }
  for (double z = -1.9; z < 2.0; z += 0.1) {
    const ProfileSample s = g.obstacle_sample(0.0, z);
    CHECK(s.d_z ==
          doctest::Approx((g.obstacle_radius(0, z + 1e-6) - g.obstacle_radius(0, z - 1e-6)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("cross-section areas") {
  const NozzleGeometry plain(NozzleProfile::straight(1.0));
  CHECK(plain.cross_section_area(3.0) == doctest::Approx(pi).epsilon(1e-15));
  const NozzleGeometry ob(NozzleProfile::straight(1.0), bump(0.4, -2.0, 2.0));
  CHECK(ob.cross_section_area(0.0) == doctest::Approx(pi * (1.0 - 0.16)).epsilon(1e-14));

  const NozzleGeometry alg(NozzleProfile::algebraic(1.0, 0.2, 1.0, 4.0));
  for (double z : {10.0, 30.0, 200.0}) {
    const double f = 1.0 + 0.2 / (1.0 + z);
    CHECK(std::abs(alg.cross_section_area(z) - pi * f * f) <= 1e-10 * pi * f * f);
  }

  // Non-axisymmetric wall uses theta quadrature: (1/2) int (1 + c cos 3t)^2 = pi (1 + c^2/2).
  NozzleProfile mod = NozzleProfile::straight(1.0, 4.0);
  mod.theta_modes.push_back({3, 0.1});
  const NozzleGeometry gm(mod);
  CHECK(gm.cross_section_area(0.0) == doctest::Approx(pi * (1.0 + 0.005)).epsilon(1e-12));
  CHECK(gm.cross_section_area(10.0) == doctest::Approx(pi).epsilon(1e-12));
}

TEST_CASE("cross-section area is continuous and within the certified bounds") {
  const NozzleGeometry g(NozzleProfile::algebraic(1.0, 0.2, 1.0, 4.0), bump(0.4, -2.0, 2.0));
  const auto& rep = g.admissibility();
  double prev = g.cross_section_area(-40.0);
  for (double z = -40.0; z <= 40.0; z += 0.01) {
    const double a = g.cross_section_area(z);
    REQUIRE(std::abs(a - prev) < 0.01);
    REQUIRE(a >= rep.area_min * (1 - 1e-3));
    REQUIRE(a <= rep.area_max * (1 + 1e-3));
    prev = a;
  }
}

TEST_CASE("admissibility") {
  const NozzleGeometry unit(NozzleProfile::straight(1.0));
  CHECK(unit.gap_constant() == 1.0);

  CHECK(code_of([] { NozzleGeometry(NozzleProfile::straight(1.0), bump(1.0, -2, 2)); }) == Errc::inadmissible);
  CHECK(code_of([] { NozzleGeometry(NozzleProfile::straight(1.0), bump(1.5, -2, 2)); }) == Errc::inadmissible);
  CHECK(code_of([] { NozzleGeometry(NozzleProfile::straight(-1.0)); }) == Errc::invalid_argument);
  CHECK(code_of([] { NozzleGeometry(NozzleProfile::straight(1.0), bump(0.4, 2, -2)); }) == Errc::invalid_argument);
  CHECK(code_of([] { NozzleGeometry(NozzleProfile::algebraic(1.0, -6.0, 1.0, 4.0)); }) == Errc::inadmissible);

  const NozzleGeometry alg(NozzleProfile::algebraic(1.0, 0.2, 2.0, 5.0));
  CHECK(std::isfinite(alg.gap_constant()));
  CHECK(alg.gap_constant() >= 1.0);
  CHECK(alg.admissibility().decay_constant > 0.0);

  const NozzleGeometry ob(NozzleProfile::straight(1.0), bump(0.4, -2, 2));
  CHECK(ob.gap_constant() == doctest::Approx(1.0 / 0.6).epsilon(1e-6));
}

TEST_CASE("tabulated profiles") {
  const auto dir = std::filesystem::temp_directory_path() / "nozzleflow_geometry_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "profile.txt";
  {
    std::ofstream os(file);
    os.precision(17);
    os << "# x3 f1 f2\n";
    for (int i = -10; i <= 10; ++i) {
      const double z = i;
      const double f2 = std::abs(z) < 2 ? 0.3 * std::pow(std::cos(pi * z / 4), 4) : 0.0;
      os << z << " " << 1.0 + 0.1 / (1.0 + z * z) << " " << f2 << "\n";
    }
  }
  const LoadedProfiles p = load_profile_table(file);
  REQUIRE(p.obstacle.has_value());
  const NozzleGeometry g(p.wall, p.obstacle);
  CHECK(g.wall_radius(0.0, 3.0) == doctest::Approx(1.01).epsilon(1e-14));
  CHECK(g.wall_radius(0.0, 50.0) == doctest::Approx(1.0 + 0.1 / 101.0).epsilon(1e-14));
  CHECK(g.obstacle_radius(0.0, 0.0) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(g.obstacle_radius(0.0, 5.0) == 0.0);
  // Monotone interpolation never overshoots the data on a monotone stretch.
  for (double z = 0.0; z <= 10.0; z += 0.05) CHECK(g.wall_radius(0.0, z) <= 1.1 + 1e-15);

  {
    std::ofstream os(file);
    os << "0 1 0.1\n1 1\n";
  }
  CHECK(code_of([&] { load_profile_table(file); }) == Errc::io_error);
  CHECK(code_of([&] { load_profile_table(dir / "missing.txt"); }) == Errc::io_error);
  std::filesystem::remove_all(dir);
}
