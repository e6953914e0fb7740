#include <doctest.h>

#include <cmath>
#include <random>

#include "nozzleflow/error.hpp"
#include "nozzleflow/gas.hpp"

using namespace nozzle;

namespace {

// Root of q^2/2 + h(rho) = 1/2 + h(1), h(rho) = rho^(gamma-1)/(gamma-1), by
// bisection on rho; independent of the closed form in the library.
double bernoulli_bisection(double gamma, double q_sq) {
  auto g = [&](double rho) {
    return 0.5 * q_sq + std::pow(rho, gamma - 1.0) / (gamma - 1.0) - 0.5 - 1.0 / (gamma - 1.0);
  };
  double lo = 1e-12, hi = 10.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Frozen output of bernoulli_bisection(1.4, 0).
constexpr double kStagnationDensity14 = 1.5774409656148784;

template <class E>
Errc code_of(E&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io_error;
}

}  // namespace

TEST_CASE("sonic normalization and stagnation density") {
  const DensityLaw law;
  CHECK(law.density(1.0) == 1.0);
  CHECK(bernoulli_bisection(1.4, 0.0) == doctest::Approx(kStagnationDensity14).epsilon(1e-14));
  CHECK(law.density(0.0) == doctest::Approx(kStagnationDensity14).epsilon(1e-14));
  CHECK(law.stagnation_density() == doctest::Approx(kStagnationDensity14).epsilon(1e-14));
  const double mid = law.density(0.25);
  CHECK(mid > 1.0);
  CHECK(mid < law.density(0.0));
  CHECK(mid == doctest::Approx(bernoulli_bisection(1.4, 0.25)).epsilon(1e-12));
}

TEST_CASE("density agrees with the Bernoulli relation for several gamma") {
  for (double gamma : {1.1, 1.4, 5.0 / 3.0, 2.0}) {
    const DensityLaw law(GasModel{gamma});
    for (double q2 : {0.0, 0.3, 0.9, 1.0, 1.7}) {
      CHECK(law.density(q2) == doctest::Approx(bernoulli_bisection(gamma, q2)).epsilon(1e-11));
      CHECK(0.5 * q2 + law.enthalpy(law.density(q2)) == doctest::Approx(law.bernoulli_constant()).epsilon(1e-13));
    }
  }
}

TEST_CASE("density errors") {
  const DensityLaw law;
  CHECK(code_of([&] { law.density(-0.1); }) == Errc::negative_input);
  CHECK(code_of([&] { law.density(law.vacuum_speed_sq()); }) == Errc::out_of_range);
  CHECK(code_of([&] { law.density(10.0); }) == Errc::out_of_range);
  CHECK(code_of([] { DensityLaw(GasModel{1.0}); }) == Errc::invalid_argument);
  CHECK(code_of([] { DensityLaw(GasModel{0.5}); }) == Errc::invalid_argument);
}

TEST_CASE("density derivatives match finite differences") {
  const DensityLaw law;
  for (double x : {0.0, 0.2, 0.5, 0.95, 1.5}) {
    const double h = 1e-6;
    const double xm = std::max(0.0, x - h), xp = x + h;
    CHECK(law.density_derivative(x) ==
          doctest::Approx((law.density(xp) - law.density(xm)) / (xp - xm)).epsilon(1e-6));
    CHECK(law.density_second_derivative(x) ==
          doctest::Approx((law.density_derivative(xp) - law.density_derivative(xm)) / (xp - xm)).epsilon(1e-5));
  }
}

TEST_CASE("momentum is maximal at the sonic speed") {
  const DensityLaw law;
  CHECK(law.momentum(0.0) == 0.0);
  CHECK(law.momentum(1.0) == 1.0);
  const int n = 100000;
  double best = -1.0, arg = -1.0, prev = -1.0;
  bool increasing = true;
  for (int i = 0; i <= n; ++i) {
    const double q = static_cast<double>(i) / n;
    const double m = law.momentum(q);
    if (i < n) increasing = increasing && m > prev;
    prev = m;
    if (m > best) {
      best = m;
      arg = q;
    }
    CHECK_LE(m, 1.0);
  }
  CHECK(increasing);
  CHECK(arg == doctest::Approx(1.0).epsilon(2.0 / n));
  // d(rho q)/dq = rho^(2-gamma) (c^2 - q^2) vanishes at q = 1.
  const double h = 1e-5;
  CHECK(std::abs((law.momentum(1.0 + h) - law.momentum(1.0 - h)) / (2 * h)) < 1e-8);
  for (double q : {0.0, 0.3, 0.7, 0.99}) CHECK((law.momentum(q + h) - law.momentum(q)) / h > 0.0);
  for (double q : {1.2, 2.0}) CHECK(law.momentum(q) < 1.0);
}

TEST_CASE("subsonic momentum inversion") {
  const DensityLaw law;
  CHECK(law.invert_momentum_subsonic(0.0) == 0.0);
  CHECK(law.invert_momentum_subsonic(law.momentum(0.5)) == doctest::Approx(0.5).epsilon(1e-12));
  const double q = law.invert_momentum_subsonic(0.99);
  CHECK(q < 1.0);
  CHECK(q > 0.8);
  CHECK(std::abs(law.momentum(q) - 0.99) <= 1e-10);
  CHECK(code_of([&] { law.invert_momentum_subsonic(1.0); }) == Errc::supersonic);
  CHECK(code_of([&] { law.invert_momentum_subsonic(1.5); }) == Errc::supersonic);
  for (int i = 0; i <= 999; ++i) {
    const double qq = 0.999 * i / 999.0;
    CHECK(std::abs(law.invert_momentum_subsonic(law.momentum(qq)) - qq) <= 1e-10);
  }
}

TEST_CASE("far state sits below the local sound speed") {
  const DensityLaw law;
  for (double q : {0.1, 0.5, 0.9}) CHECK(q <= law.sound_speed(law.density(q * q)));
  CHECK(law.sound_speed(1.0) == 1.0);
}

TEST_CASE("truncation keeps rho below the window and freezes it above") {
  const DensityLaw law;
  const TruncatedDensity tr(law, 0.1);
  CHECK(tr.H(0.5) == law.density(0.5));
  CHECK(tr.H(2.0) == law.density(0.85));
  CHECK(tr.H(0.95) == law.density(0.85));
  CHECK(tr.plateau() == law.density(1.0 - 1.5 * 0.1));
  for (int i = 0; i < 1000; ++i) {
    const double x = (1.0 - 2.0 * 0.1) * i / 1000.0;
    REQUIRE(tr.H(x) == law.density(x));
  }
}

TEST_CASE("truncation is C2 across both junctions") {
  const DensityLaw law;
  for (double eps : {0.01, 0.1, 0.24}) {
    const TruncatedDensity tr(law, eps);
    const double x0 = tr.blend_begin(), x1 = tr.blend_end();
    const double below = std::nextafter(x0, 0.0);
    CHECK(tr.H(x0) == doctest::Approx(law.density(below)).epsilon(1e-12));
    CHECK(tr.dH(x0) == doctest::Approx(law.density_derivative(x0)).epsilon(1e-12));
    CHECK(tr.d2H(x0) == doctest::Approx(law.density_second_derivative(x0)).epsilon(1e-10));
    const double left = std::nextafter(x1, 0.0);
    CHECK(tr.H(left) == doctest::Approx(tr.plateau()).epsilon(1e-12));
    CHECK(std::abs(tr.dH(left)) < 1e-9);
    CHECK(std::abs(tr.d2H(left)) < 1e-6);
  }
}

TEST_CASE("ellipticity constants from an independent scan") {
  const DensityLaw law;
  const TruncatedDensity tr(law, 0.1);
  CHECK(tr.lambda() > 0.0);
  CHECK(tr.lambda() < tr.Lambda());
  CHECK(tr.Lambda() == tr.H(0.0));
  CHECK(tr.C_eps() == std::max(tr.Lambda(), 1.0 / tr.lambda()));
  // Oracle: H' by central differences of H on 1e5 + 1 points of [0, 4].
  double lam = 1e300, Lam = 0.0;
  const int n = 100000;
  for (int i = 0; i <= n; ++i) {
    const double x = 4.0 * i / n, h = 1e-7;
    const double dh = (tr.H(x + h) - tr.H(std::max(0.0, x - h))) / (x + h - std::max(0.0, x - h));
    lam = std::min(lam, tr.H(x) + 2.0 * dh * x);
    Lam = std::max(Lam, tr.H(x));
  }
  CHECK(tr.lambda() == doctest::Approx(lam).epsilon(1e-5));
  CHECK(tr.Lambda() == doctest::Approx(Lam).epsilon(1e-14));
}

TEST_CASE("construction fails loudly on a non-elliptic law") {
  const double none[] = {0.0};
  // H = 1 - s^2/2 decreases but H + 2 H' s^2 = 1 - 3 s^2/2 turns negative.
  CHECK(code_of([&] {
          certify_ellipticity([](double x) { return 1.0 - 0.5 * x; }, [](double) { return -0.5; }, none, 1000, 1.0);
        }) == Errc::ellipticity_violation);
  CHECK(code_of([&] {
          certify_ellipticity([](double x) { return 1.0 + x; }, [](double) { return 1.0; }, none, 1000, 1.0);
        }) == Errc::ellipticity_violation);
  CHECK(code_of([&] { TruncatedDensity(DensityLaw{}, 0.0); }) == Errc::invalid_argument);
  CHECK(code_of([&] { TruncatedDensity(DensityLaw{}, 0.25); }) == Errc::invalid_argument);
}

TEST_CASE("F_eps is the half antiderivative of H_eps") {
  const DensityLaw law;
  const TruncatedDensity tr(law, 0.1);
  CHECK(tr.F(0.0) == 0.0);
  for (double q2 : {1e-3, 1e-2}) {
    const double taylor = 0.5 * law.density(0.0) * q2;
    CHECK(std::abs(tr.F(q2) - taylor) <= 0.5 * q2 * q2);
  }
  // Two-term Taylor keeps full relative accuracy at tiny speeds.
  for (double q2 : {1e-14, 1e-10, 1e-7}) {
    const double taylor = 0.5 * law.density(0.0) * q2 + 0.25 * law.density_derivative(0.0) * q2 * q2;
    CHECK(tr.F(q2) == doctest::Approx(taylor).epsilon(1e-14));
  }
  for (double q2 : {0.1, 0.5, 0.79, 0.81, 0.85, 0.89, 0.91, 1.3, 3.0}) {
    const double h = 1e-6 * std::max(1.0, q2);
    const double fd = (tr.F(q2 + h) - tr.F(q2 - h)) / (2.0 * h);
    CHECK(fd == doctest::Approx(0.5 * tr.H(q2)).epsilon(1e-8));
  }
  // Composite Simpson of H against the closed form.
  for (double q2 : {0.6, 0.85, 2.5}) {
    const int n = 20000;
    const double step = q2 / n;
    double s = tr.H(0.0) + tr.H(q2);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * tr.H(i * step);
    CHECK(tr.F(q2) == doctest::Approx(0.5 * s * step / 3.0).epsilon(1e-9));
  }
  // Two-sided quadratic growth with C(eps).
  for (double q2 : {0.01, 0.5, 1.0, 4.0, 100.0}) {
    CHECK(tr.F(q2) >= q2 / tr.C_eps());
    CHECK(tr.F(q2) <= tr.C_eps() * q2);
  }
}

TEST_CASE("coefficient matrix") {
  const DensityLaw law;
  const TruncatedDensity tr(law, 0.1);
  const Mat3 a0 = tr.coefficient_matrix({0, 0, 0});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(a0[i][j] == (i == j ? tr.H(0.0) : 0.0));

  const double q = 0.6;
  const Mat3 a = tr.coefficient_matrix({0, 0, q});
  const double rho = law.density(q * q), drho = law.density_derivative(q * q);
  CHECK(a[2][2] == doctest::Approx(rho + 2.0 * drho * q * q).epsilon(1e-14));
  CHECK(a[0][0] == doctest::Approx(rho).epsilon(1e-14));
  CHECK(a[1][1] == doctest::Approx(rho).epsilon(1e-14));
  CHECK(a[0][2] == 0.0);
  CHECK(a[1][2] == 0.0);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    Vec3 p{n(rng), n(rng), n(rng)};
    const double scale = std::sqrt((0.9 + 3.0 * k / 100.0) / norm_sq(p));
    p = scale * p;
    const Mat3 ap = tr.coefficient_matrix(p);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(ap[i][j] == (i == j ? tr.plateau() : 0.0));
  }
}

TEST_CASE("ellipticity sandwich on random gradients") {
  const DensityLaw law;
  const TruncatedDensity tr(law, 0.1);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 100000; ++k) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    const Mat3 a = tr.coefficient_matrix(p);
    for (int m = 0; m < 100; ++m) {
      const Vec3 xi{n(rng), n(rng), n(rng)};
      const double form = dot(xi, a * xi), xx = norm_sq(xi);
      if (!(form >= tr.lambda() * xx * (1 - 1e-12) && form <= tr.Lambda() * xx * (1 + 1e-12))) {
        FAIL("sandwich violated at |p|^2 = " << norm_sq(p));
      }
    }
  }
}

TEST_CASE("energy integrand is convex in the gradient") {
  const DensityLaw law;
  const TruncatedDensity tr(law, 0.1);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 20000; ++k) {
    const Vec3 p{u(rng), u(rng), u(rng)}, q{u(rng), u(rng), u(rng)};
    const Vec3 mid = 0.5 * (p + q);
    REQUIRE(tr.F(norm_sq(mid)) <= 0.5 * (tr.F(norm_sq(p)) + tr.F(norm_sq(q))) + 1e-12);
  }
}

TEST_CASE("density is strictly decreasing on the subsonic range") {
  const DensityLaw law;
  double prev = law.density(0.0);
  for (int i = 1; i <= 10000; ++i) {
    const double q = i / 10000.0;
    const double r = law.density(q * q);
    REQUIRE(r < prev);
    prev = r;
  }
}
