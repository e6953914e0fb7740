#include "nozzleflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "nozzleflow/error.hpp"

namespace nozzle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// local faces as (local nodes), outward parameter direction
constexpr int kFaceS0[4] = {0, 3, 7, 4};
constexpr int kFaceS1[4] = {1, 2, 6, 5};
constexpr int kFaceZ0[4] = {0, 1, 2, 3};
constexpr int kFaceZ1[4] = {4, 5, 6, 7};

std::array<double, 2> gauss2() {
  const double d = 0.5 / std::sqrt(3.0);
  return {0.5 - d, 0.5 + d};
}

}  // namespace

std::string to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::inflow: return "inflow";
    case BoundaryTag::outflow: return "outflow";
    case BoundaryTag::wall: return "wall";
    case BoundaryTag::obstacle: return "obstacle";
  }
  return "?";
}

namespace ref {

std::array<double, 8> shape_values(const Vec3& xi) {
  std::array<double, 8> n{};
  for (int a = 0; a < 8; ++a) {
    double v = 1.0;
    for (int d = 0; d < 3; ++d) v *= kCorner[a][d] ? xi[d] : 1.0 - xi[d];
    n[a] = v;
  }
  return n;
}

std::array<Vec3, 8> shape_gradients(const Vec3& xi) {
  std::array<Vec3, 8> g{};
  for (int a = 0; a < 8; ++a) {
    double f[3], df[3];
    for (int d = 0; d < 3; ++d) {
      f[d] = kCorner[a][d] ? xi[d] : 1.0 - xi[d];
      df[d] = kCorner[a][d] ? 1.0 : -1.0;
    }
    g[a] = {df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]};
  }
  return g;
}

const std::array<Vec3, 8>& gauss_points() {
  static const std::array<Vec3, 8> pts = [] {
    const auto g = gauss2();
    std::array<Vec3, 8> p{};
    int q = 0;
    for (int c = 0; c < 2; ++c)
      for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a) p[q++] = {g[a], g[b], g[c]};
    return p;
  }();
  return pts;
}

const std::array<std::array<Vec3, 8>, 8>& gauss_shape_gradients() {
  static const std::array<std::array<Vec3, 8>, 8> table = [] {
    std::array<std::array<Vec3, 8>, 8> t{};
    for (int q = 0; q < 8; ++q) t[q] = shape_gradients(gauss_points()[q]);
    return t;
  }();
  return table;
}

}  // namespace ref

// ---------------------------------------------------------------------------

LatticeIndex Mesh::lattice_index(int element) const {
  const int i = element % N_r_;
  const int rest = element / N_r_;
  return {i, rest % N_theta_, rest / N_theta_};
}

int Mesh::node_id(int i, int j, int k) const {
  j = ((j % N_theta_) + N_theta_) % N_theta_;
  return lattice_to_node_[(static_cast<std::size_t>(k) * N_theta_ + j) * (N_r_ + 1) + i];
}

ParamBox Mesh::element_box(int element) const {
  const auto [i, j, k] = lattice_index(element);
  const double dth = kTwoPi / N_theta_;
  return {s_[i], s_[i + 1], j * dth, (j + 1) * dth, z_[k], z_[k + 1]};
}

std::optional<int> Mesh::plane_index(double t) const {
  const auto it = std::lower_bound(z_.begin(), z_.end(), t);
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  std::optional<int> best;
  for (auto cand : {it, it == z_.begin() ? it : it - 1}) {
    if (cand == z_.end()) continue;
    if (std::abs(*cand - t) <= tol) best = static_cast<int>(cand - z_.begin());
  }
  return best;
}

double Mesh::volume() const {
  double v = 0.0;
  for (const auto& q : qp_) v += q.weight;
  return v;
}

Mesh::MapSample Mesh::map(double s, double theta, double z) const {
  const ProfileSample f1 = geom_.wall_sample(theta, z);
  const ProfileSample f2 = geom_.obstacle_sample(theta, z);
  const double R = f2.value + s * (f1.value - f2.value);
  const double R_s = f1.value - f2.value;
  const double R_t = f2.d_theta + s * (f1.d_theta - f2.d_theta);
  const double R_z = f2.d_z + s * (f1.d_z - f2.d_z);
  const double c = std::cos(theta), sn = std::sin(theta);
  MapSample m;
  m.x = {R * c, R * sn, z};
  m.jac = {{{R_s * c, R_t * c - R * sn, R_z * c}, {R_s * sn, R_t * sn + R * c, R_z * sn}, {0.0, 0.0, 1.0}}};
  return m;
}

// ---------------------------------------------------------------------------

std::vector<double> z_lattice(const NozzleGeometry& geom, const MeshSpec& spec) {
  const double L = spec.L;
  const int n = spec.N_z;
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  if (spec.grading <= 1.0) {
    for (int k = 0; k <= n; ++k) z[k] = -L + 2.0 * L * k / n;
  } else {
    // Element size grows linearly with distance d from the core, h = hc + (r-1) d,
    // i.e. geometrically (ratio r) per element.  Solve for hc so that exactly
    // N_z elements fit, then invert the cumulative element count.
    double c0, c1;
    if (geom.has_obstacle()) {
      c0 = geom.obstacle()->L1;
      c1 = geom.obstacle()->L2;
    } else if (geom.wall().kind == NozzleProfile::Kind::algebraic) {
      c0 = -geom.wall().K;
      c1 = geom.wall().K;
    } else {
      c0 = -1.0;
      c1 = 1.0;
    }
    c0 = std::clamp(c0, -0.5 * L, 0.5 * L);
    c1 = std::clamp(c1, c0, 0.5 * L);
    const double g = spec.grading - 1.0;
    const double Dl = c0 + L, Dr = L - c1, core = c1 - c0;
    auto count = [&](double hc) {
      return core / hc + std::log1p(g * Dl / hc) / g + std::log1p(g * Dr / hc) / g;
    };
    double lo = 1e-9, hi = 4.0 * L;
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (count(mid) > n)
        lo = mid;
      else
        hi = mid;
    }
    const double hc = 0.5 * (lo + hi);
    const double na = std::log1p(g * Dl / hc) / g;
    const double nb = na + core / hc;
    for (int k = 0; k <= n; ++k) {
      const double kk = k * count(hc) / n;  // absorb the bisection residue
      if (kk <= na)
        z[k] = c0 - ((hc + g * Dl) * std::exp(-g * kk) - hc) / g;
      else if (kk <= nb)
        z[k] = c0 + (kk - na) * hc;
      else
        z[k] = c1 + hc * std::expm1(g * (kk - nb)) / g;
    }
  }
  z.front() = -L;
  z.back() = L;

  if (spec.align_integer_stations) {
    std::vector<double> targets;
    for (double t = std::ceil(-L); t <= std::floor(L); t += 1.0) targets.push_back(t);
    if (geom.has_obstacle()) {
      targets.push_back(geom.obstacle()->L1);
      targets.push_back(geom.obstacle()->L2);
    }
    for (double t : targets) {
      if (!(t > -L && t < L)) continue;
      const auto it = std::lower_bound(z.begin(), z.end(), t);
      std::size_t k = static_cast<std::size_t>(it - z.begin());
      if (k > 0 && (k == z.size() || std::abs(z[k - 1] - t) < std::abs(z[k] - t))) --k;
      if (k == 0 || k + 1 >= z.size()) continue;
      const double hl = z[k] - z[k - 1], hr = z[k + 1] - z[k];
      if (std::max(hl, hr) < 1.0 && std::abs(z[k] - t) <= 0.5 * std::min(hl, hr)) z[k] = t;
    }
  }
  return z;
}

Mesh build_mesh_on_lattice(const NozzleGeometry& geom, std::vector<double> z_planes, int N_r, int N_theta,
                           double L) {
  if (N_r < 1 || N_theta < 3 || z_planes.size() < 2)
    throw Error(Errc::invalid_argument, "lattice needs N_r >= 1, N_theta >= 3 and two z-planes");
  Mesh mesh(geom);
  mesh.N_r_ = N_r;
  mesh.N_theta_ = N_theta;
  mesh.L_ = L;
  mesh.z_ = std::move(z_planes);
  const int N_z = static_cast<int>(mesh.z_.size()) - 1;
  mesh.s_.resize(static_cast<std::size_t>(N_r) + 1);
  for (int i = 0; i <= N_r; ++i) mesh.s_[i] = static_cast<double>(i) / N_r;
  const double dth = kTwoPi / N_theta;

  // The obstacle is axisymmetric, so a plane is collapsed iff f2 vanishes there.
  mesh.collapsed_.resize(static_cast<std::size_t>(N_z) + 1);
  for (int k = 0; k <= N_z; ++k) {
    const double z = mesh.z_[k];
    mesh.collapsed_[k] = geom.obstacle_radius(0.0, z) <= 0.0;
    for (int j = 0; j < N_theta; ++j) {
      const double gap = geom.wall_radius(j * dth, z) - geom.obstacle_radius(j * dth, z);
      if (!(gap > 0.0)) {
        std::ostringstream os;
        os << "f1 - f2 = " << gap << " at theta = " << j * dth << ", x3 = " << z;
        throw Error(Errc::pinched_domain, os.str());
      }
    }
  }
  for (int k = 0; k < N_z; ++k) {
    if (!(mesh.collapsed_[k] && mesh.collapsed_[k + 1])) continue;
    for (double f : {0.25, 0.5, 0.75}) {
      const double z = mesh.z_[k] + f * (mesh.z_[k + 1] - mesh.z_[k]);
      if (geom.obstacle_radius(0.0, z) > 0.0) {
        std::ostringstream os;
        os << "obstacle lies entirely inside the axial layer [" << mesh.z_[k] << ", " << mesh.z_[k + 1]
           << "]; refine N_z";
        throw Error(Errc::invalid_argument, os.str());
      }
    }
  }

  // nodes, plane by plane
  mesh.lattice_to_node_.assign(static_cast<std::size_t>(N_z + 1) * N_theta * (N_r + 1), -1);
  auto slot = [&](int i, int j, int k) -> int& {
    return mesh.lattice_to_node_[(static_cast<std::size_t>(k) * N_theta + j) * (N_r + 1) + i];
  };
  for (int k = 0; k <= N_z; ++k) {
    const double z = mesh.z_[k];
    int i_first = 0;
    if (mesh.collapsed_[k]) {
      const int axis = static_cast<int>(mesh.nodes_.size());
      mesh.nodes_.push_back({0.0, 0.0, z});
      for (int j = 0; j < N_theta; ++j) slot(0, j, k) = axis;
      i_first = 1;
    }
    for (int i = i_first; i <= N_r; ++i)
      for (int j = 0; j < N_theta; ++j) {
        slot(i, j, k) = static_cast<int>(mesh.nodes_.size());
        mesh.nodes_.push_back(mesh.map(mesh.s_[i], j * dth, z).x);
      }
  }

  // hexes and cached quadrature geometry
  const int n_elem = N_r * N_theta * N_z;
  mesh.hexes_.resize(static_cast<std::size_t>(n_elem));
  mesh.qp_.resize(static_cast<std::size_t>(n_elem) * ref::kNumQp);
  const auto g = gauss2();
  for (int k = 0; k < N_z; ++k)
    for (int j = 0; j < N_theta; ++j)
      for (int i = 0; i < N_r; ++i) {
        const int e = mesh.element_id(i, j, k);
        auto& hex = mesh.hexes_[e];
        for (int a = 0; a < 8; ++a)
          hex[a] = mesh.node_id(i + ref::kCorner[a][0], j + ref::kCorner[a][1], k + ref::kCorner[a][2]);
        const ParamBox box = mesh.element_box(e);
        const double ds = box.s1 - box.s0, dt = box.theta1 - box.theta0, dz = box.z1 - box.z0;
        for (int q = 0; q < ref::kNumQp; ++q) {
          const Vec3& xi = ref::gauss_points()[q];
          const auto m = mesh.map(box.s0 + xi[0] * ds, box.theta0 + xi[1] * dt, box.z0 + xi[2] * dz);
          Mat3 J = m.jac;
          for (int r = 0; r < 3; ++r) {
            J[r][0] *= ds;
            J[r][1] *= dt;
            J[r][2] *= dz;
          }
          const double det = determinant(J);
          auto& qp = mesh.qp_[static_cast<std::size_t>(e) * ref::kNumQp + q];
          qp.weight = 0.125 * det;  // 2-point Gauss weights on [0,1] are 1/2 each
          qp.inv_jac_t = det != 0.0 ? transpose(inverse(J, det)) : Mat3{};
        }
        (void)g;
      }

  // boundary faces
  auto add_face = [&](int e, const int* local, int local_id, BoundaryTag tag) {
    BoundaryFace f;
    for (int a = 0; a < 4; ++a) f.nodes[a] = mesh.hexes_[e][local[a]];
    f.tag = tag;
    f.element = e;
    f.local_face = local_id;
    mesh.faces_.push_back(f);
  };
  for (int k = 0; k < N_z; ++k)
    for (int j = 0; j < N_theta; ++j)
      for (int i = 0; i < N_r; ++i) {
        const int e = mesh.element_id(i, j, k);
        if (k == 0) add_face(e, kFaceZ0, 4, BoundaryTag::inflow);
        if (k == N_z - 1) add_face(e, kFaceZ1, 5, BoundaryTag::outflow);
        if (i == N_r - 1) add_face(e, kFaceS1, 1, BoundaryTag::wall);
        if (i == 0 && !(mesh.collapsed_[k] && mesh.collapsed_[k + 1])) add_face(e, kFaceS0, 0, BoundaryTag::obstacle);
      }

  mesh.dirichlet_.assign(mesh.nodes_.size(), 0);
  for (int i = 0; i <= N_r; ++i)
    for (int j = 0; j < N_theta; ++j) {
      const int nid = mesh.node_id(i, j, 0);
      if (!mesh.dirichlet_[nid]) {
        mesh.dirichlet_[nid] = 1;
        mesh.inflow_nodes_.push_back(nid);
      }
    }
  return mesh;
}

Mesh build_mesh(const NozzleGeometry& geom, const MeshSpec& spec) {
  double reach = 0.0;
  if (geom.has_obstacle()) reach = std::max(std::abs(geom.obstacle()->L1), std::abs(geom.obstacle()->L2));
  if (!(spec.L > reach + 2.0)) {
    std::ostringstream os;
    os << "half-length L = " << spec.L << " must exceed " << reach + 2.0;
    throw Error(Errc::invalid_argument, os.str());
  }
  if (spec.N_r < 4 || spec.N_theta < 4 || spec.N_z < 8)
    throw Error(Errc::invalid_argument, "resolution needs N_r >= 4, N_theta >= 4, N_z >= 8");
  if (!(spec.grading >= 1.0)) throw Error(Errc::invalid_argument, "grading ratio must be >= 1");
  Mesh mesh = build_mesh_on_lattice(geom, z_lattice(geom, spec), spec.N_r, spec.N_theta, spec.L);
  quality_report(mesh);
  return mesh;
}

// ---------------------------------------------------------------------------

SectionLayout section_layout_at_plane(const Mesh& mesh, int k) {
  SectionLayout out;
  out.plane = k;
  out.t = mesh.z_planes()[k];
  const int N_z = mesh.N_z();
  const auto g = gauss2();
  const double dth = kTwoPi / mesh.N_theta();
  for (int j = 0; j < mesh.N_theta(); ++j)
    for (int i = 0; i < mesh.N_r(); ++i) {
      const int above = k < N_z ? mesh.element_id(i, j, k) : -1;
      const int below = k > 0 ? mesh.element_id(i, j, k - 1) : -1;
      const double s0 = mesh.s_nodes()[i], ds = mesh.s_nodes()[i + 1] - s0;
      for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a) {
          const double s = s0 + g[a] * ds, th = j * dth + g[b] * dth;
          const auto m = mesh.map(s, th, out.t);
          // |dx/ds x dx/dtheta| restricted to the plane
          const double jac_area = m.jac[0][0] * m.jac[1][1] - m.jac[0][1] * m.jac[1][0];
          SectionPoint p;
          p.x = m.x;
          p.xi = {g[a], g[b], 0.0};
          p.weight = 0.25 * ds * dth * std::abs(jac_area);
          p.above = above;
          p.below = below;
          for (int side = 0; side < 2; ++side) {
            const int e = side == 0 ? above : below;
            if (e < 0) continue;
            const ParamBox box = mesh.element_box(e);
            Mat3 J = m.jac;
            for (int r = 0; r < 3; ++r) {
              J[r][0] *= ds;
              J[r][1] *= dth;
              J[r][2] *= box.z1 - box.z0;
            }
            const double det = determinant(J);
            (side == 0 ? p.inv_jac_t_above : p.inv_jac_t_below) = transpose(inverse(J, det));
          }
          out.area += p.weight;
          out.points.push_back(p);
        }
    }
  return out;
}

SectionLayout section_layout(const Mesh& mesh, double t) {
  const auto k = mesh.plane_index(t);
  if (!k) {
    std::ostringstream os;
    os << "x3 = " << t << " is not a lattice plane of the mesh (range [" << mesh.z_min() << ", " << mesh.z_max()
       << "])";
    throw Error(Errc::station_out_of_range, os.str());
  }
  return section_layout_at_plane(mesh, *k);
}

// ---------------------------------------------------------------------------

QualityReport inspect_quality(const Mesh& mesh) {
  QualityReport rep;
  rep.min_jacobian = std::numeric_limits<double>::infinity();
  rep.max_jacobian = -std::numeric_limits<double>::infinity();
  static constexpr int kEdges[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                        {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  for (int e = 0; e < mesh.num_elements(); ++e) {
    bool bad = false;
    for (const auto& q : mesh.quadrature(e)) {
      const double det = q.weight * 8.0;
      if (det < rep.min_jacobian) {
        rep.min_jacobian = det;
        rep.worst_element = e;
      }
      rep.max_jacobian = std::max(rep.max_jacobian, det);
      if (!(det > 0.0)) bad = true;
    }
    if (bad) rep.offenders.push_back(e);
    const auto& hex = mesh.hexes()[e];
    double lmin = std::numeric_limits<double>::infinity(), lmax = 0.0;
    for (const auto& edge : kEdges) {
      const double len = norm(mesh.nodes()[hex[edge[0]]] - mesh.nodes()[hex[edge[1]]]);
      if (hex[edge[0]] == hex[edge[1]]) continue;
      lmin = std::min(lmin, len);
      lmax = std::max(lmax, len);
    }
    const double ratio = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    if (ratio > rep.max_aspect_ratio) {
      rep.max_aspect_ratio = ratio;
      rep.worst_aspect_element = e;
    }
  }
  return rep;
}

QualityReport quality_report(const Mesh& mesh) {
  QualityReport rep = inspect_quality(mesh);
  if (!rep.offenders.empty()) {
    std::ostringstream os;
    os << rep.offenders.size() << " element(s) with non-positive Jacobian, min " << rep.min_jacobian
       << "; offending elements:";
    for (std::size_t n = 0; n < std::min<std::size_t>(rep.offenders.size(), 16); ++n) os << ' ' << rep.offenders[n];
    throw Error(Errc::degenerate_jacobian, os.str());
  }
  return rep;
}

}  // namespace nozzle

namespace nozzle {

void write_mesh_dump(const Mesh& mesh, std::ostream& os) {
  os.precision(17);
  os << "nodes " << mesh.num_nodes() << '\n';
  for (const auto& x : mesh.nodes()) os << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
  os << "hexes " << mesh.num_elements() << '\n';
  for (const auto& h : mesh.hexes()) {
    for (int a = 0; a < 8; ++a) os << (a ? " " : "") << h[a];
    os << '\n';
  }
  os << "boundary_faces " << mesh.boundary_faces().size() << '\n';
  for (const auto& f : mesh.boundary_faces())
    os << f.nodes[0] << ' ' << f.nodes[1] << ' ' << f.nodes[2] << ' ' << f.nodes[3] << ' ' << to_string(f.tag)
       << '\n';
}

void write_vtk(const Mesh& mesh, std::ostream& os, std::span<const VtkPointField> fields) {
  os.precision(17);
  os << "# vtk DataFile Version 3.0\nnozzle flow\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_nodes() << " double\n";
  for (const auto& x : mesh.nodes()) os << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
  os << "CELLS " << mesh.num_elements() << ' ' << 9 * mesh.num_elements() << '\n';
  for (const auto& h : mesh.hexes()) {
    os << 8;
    for (int a = 0; a < 8; ++a) os << ' ' << h[a];
    os << '\n';
  }
  os << "CELL_TYPES " << mesh.num_elements() << '\n';
  for (int e = 0; e < mesh.num_elements(); ++e) os << "12\n";
  if (fields.empty()) return;
  os << "POINT_DATA " << mesh.num_nodes() << '\n';
  for (const auto& f : fields) {
    if (f.components == 1)
      os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
    else
      os << "VECTORS " << f.name << " double\n";
    for (int n = 0; n < mesh.num_nodes(); ++n) {
      for (int c = 0; c < f.components; ++c)
        os << (c ? " " : "") << f.values[static_cast<std::size_t>(n) * f.components + c];
      os << '\n';
    }
  }
}

}  // namespace nozzle
