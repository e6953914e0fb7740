#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "support.hpp"
#include "nozzleflow/mesh.hpp"

using namespace nozzle;
using namespace nozzle::test;
using std::numbers::pi;

namespace {

// Composite Simpson of the section area over [-L, L].
double volume_oracle(const NozzleGeometry& g, double L) {
  const int n = 200000;
  const double h = 2.0 * L / n;
  double s = g.cross_section_area(-L) + g.cross_section_area(L);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g.cross_section_area(-L + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("lattice arithmetic with a collapsed axis") {
  const NozzleGeometry g(NozzleProfile::straight(1.0));
  const Mesh m = build_mesh(g, spec(8.0, 4, 8, 8));
  CHECK(m.num_nodes() == (4 * 8 + 1) * 9);
  CHECK(m.num_elements() == 4 * 8 * 8);
  for (int k = 0; k <= 8; ++k) {
    CHECK(m.collapsed_plane(k));
    for (int j = 1; j < 8; ++j) CHECK(m.node_id(0, j, k) == m.node_id(0, 0, k));
    const Vec3 axis = m.nodes()[m.node_id(0, 0, k)];
    CHECK(axis[0] == 0.0);
    CHECK(axis[1] == 0.0);
  }
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto [i, j, k] = m.lattice_index(e);
    REQUIRE(m.element_id(i, j, k) == e);
  }
}

TEST_CASE("obstacle planes keep an inner ring") {
  const NozzleGeometry g(NozzleProfile::straight(1.0), bump(0.4));
  const Mesh m = build_mesh(g, spec(8.0, 4, 8, 16));
  int open = 0;
  for (int k = 0; k <= 16; ++k) {
    const double z = m.z_planes()[k];
    const bool inside = z > -2.0 && z < 2.0;
    CHECK(m.collapsed_plane(k) == !inside);
    open += inside;
  }
  CHECK(open == 3);
  CHECK(m.num_nodes() == 14 * 33 + 3 * 40);
}

TEST_CASE("theta connectivity is periodic") {
  const NozzleGeometry g(NozzleProfile::straight(1.0), bump(0.4));
  const Mesh m = build_mesh(g, spec(8.0, 4, 8, 16));
  for (int k = 0; k <= 16; ++k)
    for (int i = 1; i <= 4; ++i) CHECK(m.node_id(i, 8, k) == m.node_id(i, 0, k));
  // Last sector shares its closing face with the first.
  for (int k = 0; k < 16; ++k)
    for (int i = 0; i < 4; ++i) {
      const auto& last = m.hexes()[m.element_id(i, 7, k)];
      const auto& first = m.hexes()[m.element_id(i, 0, k)];
      CHECK(last[2] == first[1]);
      CHECK(last[3] == first[0]);
    }
}

TEST_CASE("rotation by one sector maps the mesh onto itself") {
  const NozzleGeometry g(NozzleProfile::straight(1.0), bump(0.4));
  const Mesh m = build_mesh(g, spec(8.0, 4, 8, 16));
  auto key = [](const Vec3& x) {
    return std::tuple{std::llround(x[0] * 1e8), std::llround(x[1] * 1e8), std::llround(x[2] * 1e8)};
  };
  std::set<std::tuple<long long, long long, long long>> nodes;
  for (const auto& x : m.nodes()) nodes.insert(key(x));
  const double a = 2.0 * pi / 8;
  for (const auto& x : m.nodes()) {
    const Vec3 y{std::cos(a) * x[0] - std::sin(a) * x[1], std::sin(a) * x[0] + std::cos(a) * x[1], x[2]};
    REQUIRE(nodes.count(key(y)) == 1);
  }
}

TEST_CASE("boundary faces partition the boundary") {
  const NozzleGeometry g(NozzleProfile::algebraic(1.0, 0.2, 1.0, 4.0), bump(0.4));
  const MeshSpec s = spec(8.0, 4, 8, 16);
  const Mesh m = build_mesh(g, s);
  std::map<BoundaryTag, int> count;
  std::set<std::pair<int, int>> seen;
  for (const auto& f : m.boundary_faces()) {
    ++count[f.tag];
    CHECK(seen.insert({f.element, f.local_face}).second);
    for (int n : f.nodes) {
      const Vec3& x = m.nodes()[n];
      const double r = std::hypot(x[0], x[1]);
      const double th = std::atan2(x[1], x[0]);
      switch (f.tag) {
        case BoundaryTag::wall:
          CHECK(std::abs(r - g.wall_radius(th, x[2])) <= 1e-9);
          break;
        case BoundaryTag::obstacle:
          CHECK(std::abs(r - g.obstacle_radius(th, x[2])) <= 1e-9);
          break;
        case BoundaryTag::inflow:
          CHECK(x[2] == -8.0);
          break;
        case BoundaryTag::outflow:
          CHECK(x[2] == 8.0);
          break;
      }
    }
  }
  CHECK(count[BoundaryTag::inflow] == 32);
  CHECK(count[BoundaryTag::outflow] == 32);
  CHECK(count[BoundaryTag::wall] == 8 * 16);
  // Obstacle faces exist only where the inner ring is open on both ends.
  CHECK(count[BoundaryTag::obstacle] == 8 * 4);

  // Every face of every element is either interior (shared) or tagged once.
  std::map<std::set<int>, int> faces;
  static constexpr int kFaces[6][4] = {{0, 3, 7, 4}, {1, 2, 6, 5}, {0, 1, 5, 4},
                                       {3, 2, 6, 7}, {0, 1, 2, 3}, {4, 5, 6, 7}};
  for (const auto& h : m.hexes())
    for (const auto& f : kFaces) {
      std::set<int> ids{h[f[0]], h[f[1]], h[f[2]], h[f[3]]};
      if (ids.size() >= 3) ++faces[ids];
    }
  int open = 0;
  for (const auto& [ids, c] : faces) {
    CHECK(c <= 2);
    open += c == 1;
  }
  CHECK(open == static_cast<int>(m.boundary_faces().size()));
}

TEST_CASE("inflow nodes are exactly the Dirichlet set") {
  const NozzleGeometry g(NozzleProfile::straight(1.0));
  const Mesh m = build_mesh(g, spec(8.0, 4, 8, 8));
  CHECK(m.inflow_nodes().size() == 33u);
  int marked = 0;
  for (int n = 0; n < m.num_nodes(); ++n) {
    marked += m.dirichlet_mask()[n];
    CHECK((m.dirichlet_mask()[n] != 0) == (m.nodes()[n][2] == -8.0));
  }
  CHECK(marked == 33);
}

TEST_CASE("volume converges to the integral of section areas") {
  const NozzleGeometry plain(NozzleProfile::straight(1.0));
  CHECK(build_mesh(plain, spec(8.0, 4, 8, 8)).volume() == doctest::Approx(16.0 * pi).epsilon(1e-13));

  const NozzleGeometry g(NozzleProfile::algebraic(1.0, 0.2, 1.0, 4.0), bump(0.4));
  const double exact = volume_oracle(g, 8.0);
  double prev_err = 0.0;
  for (int r : {1, 2, 4}) {
    const Mesh m = build_mesh(g, spec(8.0, 4, 8, 16 * r));
    const double err = std::abs(m.volume() - exact);
    if (r > 1 && prev_err > 1e-12) CHECK(std::log2(prev_err / err) >= 1.9);
    CHECK(err <= 1e-2 * exact);
    prev_err = err;
  }
}

TEST_CASE("section quadrature") {
  const NozzleGeometry plain(NozzleProfile::straight(1.0));
  const Mesh m = build_mesh(plain, spec(8.0, 4, 8, 16));
  const SectionLayout s0 = section_layout(m, 0.0);
  double w = 0.0;
  for (const auto& p : s0.points) w += p.weight;
  CHECK(w == doctest::Approx(pi).epsilon(1e-10));
  CHECK(s0.area == doctest::Approx(pi).epsilon(1e-10));

  const NozzleGeometry g(NozzleProfile::straight(1.0), bump(0.4));
  const Mesh mo = build_mesh(g, spec(8.0, 4, 8, 16));
  const SectionLayout mid = section_layout(mo, 0.0);
  CHECK(std::abs(mid.area - pi * (1.0 - 0.16)) <= 1e-8);

  for (double t : {-3.0, 0.0, 1.0, 5.0}) {
    const SectionLayout s = section_layout(mo, t);
    double area = 0.0, moment = 0.0, mx = 0.0, r2 = 0.0;
    for (const auto& p : s.points) {
      area += p.weight;
      moment += p.weight * p.x[2];
      mx += p.weight * p.x[0];
      r2 += p.weight * (p.x[0] * p.x[0] + p.x[1] * p.x[1]);
    }
    const double exact = g.cross_section_area(t);
    CHECK(std::abs(area - exact) <= 1e-10 * exact);
    CHECK(std::abs(moment - t * exact) <= 1e-10 * exact * std::max(1.0, std::abs(t)));
    CHECK(std::abs(mx) <= 1e-12);
    // Polar moment of an annulus: pi (f1^4 - f2^4)/2.
    const double f1 = g.wall_radius(0, t), f2 = g.obstacle_radius(0, t);
    CHECK(r2 == doctest::Approx(0.5 * pi * (std::pow(f1, 4) - std::pow(f2, 4))).epsilon(1e-10));
  }

  CHECK(code_of([&] { section_layout(mo, 0.37); }) == Errc::station_out_of_range);
  CHECK(code_of([&] { section_layout(mo, 9.0); }) == Errc::station_out_of_range);
}

TEST_CASE("graded lattice concentrates planes near the obstacle and hits integer stations") {
  const NozzleGeometry g(NozzleProfile::straight(1.0), bump(0.4));
  const Mesh m = build_mesh(g, spec(24.0, 4, 8, 96, 1.05));
  const auto& z = m.z_planes();
  CHECK(z.front() == -24.0);
  CHECK(z.back() == 24.0);
  for (std::size_t k = 1; k < z.size(); ++k) REQUIRE(z[k] > z[k - 1]);
  CHECK(m.plane_index(-2.0).has_value());
  CHECK(m.plane_index(2.0).has_value());
  const int k0 = *m.plane_index(2.0);
  CHECK(z[k0 + 1] - z[k0] < z[z.size() - 1] - z[z.size() - 2]);
  for (int t = 4; t <= 10; ++t) CHECK(m.plane_index(t).has_value());
}

TEST_CASE("quality of well-formed meshes") {
  const NozzleGeometry g(NozzleProfile::straight(1.0), bump(0.4));
  const QualityReport q = quality_report(build_mesh(g, spec(8.0, 4, 8, 16)));
  CHECK(q.min_jacobian > 0.0);
  CHECK(q.offenders.empty());

  // Collapsed wedges at the axis keep positive Jacobians at every Gauss point.
  const NozzleGeometry plain(NozzleProfile::straight(1.0));
  const Mesh m = build_mesh(plain, spec(8.0, 4, 8, 8));
  for (int e = 0; e < m.num_elements(); ++e)
    if (m.lattice_index(e).i == 0)
      for (const auto& qp : m.quadrature(e)) REQUIRE(qp.weight > 0.0);
}

TEST_CASE("inverted element is reported by id") {
  const NozzleGeometry g(NozzleProfile::straight(1.0));
  std::vector<double> planes;
  for (int k = 0; k <= 8; ++k) planes.push_back(-8.0 + 2.0 * k);
  std::swap(planes[3], planes[4]);  // layer 3 runs backwards
  const Mesh m = build_mesh_on_lattice(g, planes, 4, 8, 8.0);
  const QualityReport rep = inspect_quality(m);
  REQUIRE_FALSE(rep.offenders.empty());
  for (int e : rep.offenders) CHECK(m.lattice_index(e).k == 3);
  CHECK(rep.offenders.size() == 32u);
  try {
    quality_report(m);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_jacobian);
    CHECK(std::string(e.what()).find(' ' + std::to_string(m.element_id(0, 0, 3))) != std::string::npos);
  }
}

TEST_CASE("aspect ratio grows linearly with N_z on a long thin mesh") {
  const NozzleGeometry g(NozzleProfile::straight(1.0));
  std::vector<double> ratio;
  for (int nz : {64, 128, 256}) ratio.push_back(inspect_quality(build_mesh(g, spec(8.0, 4, 8, nz))).max_aspect_ratio);
  CHECK(ratio[1] / ratio[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(ratio[2] / ratio[1] == doctest::Approx(2.0).epsilon(1e-9));
  // Oracle: rim arc chord over the axial spacing.
  CHECK(ratio[2] == doctest::Approx(2.0 * std::sin(pi / 8) / (16.0 / 256)).epsilon(1e-9));
}

TEST_CASE("mesh construction errors") {
  const NozzleGeometry g(NozzleProfile::straight(1.0), bump(0.4));
  CHECK(code_of([&] { build_mesh(g, spec(3.0, 4, 8, 16)); }) == Errc::invalid_argument);
  CHECK(code_of([&] { build_mesh(g, spec(8.0, 3, 8, 16)); }) == Errc::invalid_argument);
  CHECK(code_of([&] { build_mesh(g, spec(8.0, 4, 8, 4)); }) == Errc::invalid_argument);
  CHECK(code_of([&] { build_mesh(g, spec(8.0, 4, 8, 16, 0.9)); }) == Errc::invalid_argument);
}

TEST_CASE("dump and VTK output") {
  const NozzleGeometry g(NozzleProfile::straight(1.0));
  const Mesh m = build_mesh(g, spec(8.0, 4, 8, 8));
  std::ostringstream dump;
  write_mesh_dump(m, dump);
  CHECK(dump.str().find("nodes 297") != std::string::npos);
  CHECK(dump.str().find("hexes 256") != std::string::npos);
  std::ostringstream vtk;
  write_vtk(m, vtk);
  CHECK(vtk.str().rfind("# vtk DataFile Version", 0) == 0);
  CHECK(vtk.str().find("CELLS 256 2304") != std::string::npos);
}
