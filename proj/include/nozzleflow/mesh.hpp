#pragma once

// Structured hexahedral mesh of the truncated nozzle |x3| < L.
//
// Elements are boxes of the parameter lattice (s, theta, x3) in
// [0,1] x [0, 2pi) x [-L, L], mapped through r = f2 + s (f1 - f2).  Geometry is
// evaluated from the exact map at every quadrature point, while the basis is
// trilinear in the parameters.  Where the obstacle is absent the s = 0 ring of
// a lattice plane collapses onto a single axis node.

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nozzleflow/geometry.hpp"
#include "nozzleflow/vec.hpp"

namespace nozzle {

enum class BoundaryTag { inflow, outflow, wall, obstacle };
std::string to_string(BoundaryTag tag);

struct BoundaryFace {
  std::array<int, 4> nodes{};
  BoundaryTag tag = BoundaryTag::wall;
  int element = -1;
  int local_face = -1;
};

// Cached geometry at one volume quadrature point.
struct QuadraturePoint {
  Mat3 inv_jac_t{};     // J^{-T}: maps reference gradients to physical ones
  double weight = 0.0;  // Gauss weight times det J
};

struct ParamBox {
  double s0, s1, theta0, theta1, z0, z1;
};

struct LatticeIndex {
  int i, j, k;  // radial layer, angular sector, axial layer
};

struct MeshSpec {
  double L = 8.0;
  int N_r = 8;
  int N_theta = 16;
  int N_z = 32;
  double grading = 1.0;  // geometric growth ratio away from the core; 1 = uniform
  bool align_integer_stations = true;
};

// Reference Q1 element on [0,1]^3.  Local node a sits at
// (kCorner[a][0], kCorner[a][1], kCorner[a][2]) in (s, theta, z).
namespace ref {
inline constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                      {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
inline constexpr int kNumQp = 8;
std::array<double, 8> shape_values(const Vec3& xi);
std::array<Vec3, 8> shape_gradients(const Vec3& xi);
const std::array<Vec3, 8>& gauss_points();
const std::array<std::array<Vec3, 8>, 8>& gauss_shape_gradients();  // [qp][node]
}  // namespace ref

class Mesh {
 public:
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_elements() const { return static_cast<int>(hexes_.size()); }
  int N_r() const { return N_r_; }
  int N_theta() const { return N_theta_; }
  int N_z() const { return static_cast<int>(z_.size()) - 1; }
  double L() const { return L_; }
  double z_min() const { return z_.front(); }
  double z_max() const { return z_.back(); }

  const NozzleGeometry& geometry() const { return geom_; }
  const std::vector<Vec3>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 8>>& hexes() const { return hexes_; }
  const std::vector<BoundaryFace>& boundary_faces() const { return faces_; }
  const std::vector<double>& z_planes() const { return z_; }
  const std::vector<double>& s_nodes() const { return s_; }

  std::span<const QuadraturePoint> quadrature(int element) const {
    return {qp_.data() + static_cast<std::size_t>(element) * ref::kNumQp, ref::kNumQp};
  }

  LatticeIndex lattice_index(int element) const;
  int element_id(int i, int j, int k) const { return (k * N_theta_ + j) * N_r_ + i; }
  int node_id(int i, int j, int k) const;
  ParamBox element_box(int element) const;
  bool collapsed_plane(int k) const { return collapsed_[static_cast<std::size_t>(k)] != 0; }

  // Index of the lattice plane at x3 = t, if any.
  std::optional<int> plane_index(double t) const;

  const std::vector<int>& inflow_nodes() const { return inflow_nodes_; }
  const std::vector<char>& dirichlet_mask() const { return dirichlet_; }

  double volume() const;

  // Physical point and parameter Jacobian d(x,y,z)/d(s,theta,x3).
  struct MapSample {
    Vec3 x;
    Mat3 jac;
  };
  MapSample map(double s, double theta, double z) const;

 private:
  friend Mesh build_mesh_on_lattice(const NozzleGeometry&, std::vector<double>, int, int, double);

  explicit Mesh(NozzleGeometry geom) : geom_(std::move(geom)) {}

  NozzleGeometry geom_;
  int N_r_ = 0, N_theta_ = 0;
  double L_ = 0.0;
  std::vector<double> s_, z_;
  std::vector<char> collapsed_;
  std::vector<int> lattice_to_node_;
  std::vector<Vec3> nodes_;
  std::vector<std::array<int, 8>> hexes_;
  std::vector<BoundaryFace> faces_;
  std::vector<QuadraturePoint> qp_;
  std::vector<int> inflow_nodes_;
  std::vector<char> dirichlet_;
};

// z-lattice for a spec: uniform, or graded geometrically away from the
// obstacle (or the wall transition) with integer stations snapped onto planes.
std::vector<double> z_lattice(const NozzleGeometry& geom, const MeshSpec& spec);

// Validates the spec, builds the lattice, and runs the quality check.
Mesh build_mesh(const NozzleGeometry& geom, const MeshSpec& spec);

// Raw construction on explicit z-planes (no quality check, no spec rules).
// L is the nominal half length; planes need not be sorted.
Mesh build_mesh_on_lattice(const NozzleGeometry& geom, std::vector<double> z_planes, int N_r, int N_theta,
                           double L);

struct SectionPoint {
  Vec3 x{};
  Vec3 xi{};            // (xi_s, xi_theta) on the face; xi_z is 0 above / 1 below
  double weight = 0.0;  // area quadrature weight
  int above = -1;       // element with z0 = t
  int below = -1;       // element with z1 = t
  Mat3 inv_jac_t_above{};
  Mat3 inv_jac_t_below{};
};

struct SectionLayout {
  double t = 0.0;
  int plane = -1;
  std::vector<SectionPoint> points;
  double area = 0.0;
};

// Face quadrature of Sigma_t = Omega ∩ {x3 = t}; t must be a lattice plane.
SectionLayout section_layout(const Mesh& mesh, double t);
SectionLayout section_layout_at_plane(const Mesh& mesh, int plane);

struct QualityReport {
  double min_jacobian = 0.0;
  double max_jacobian = 0.0;
  int worst_element = -1;
  double max_aspect_ratio = 0.0;
  int worst_aspect_element = -1;
  std::vector<int> offenders;  // elements with a non-positive Jacobian
};

// Scans every quadrature point; throws degenerate_jacobian listing offenders.
QualityReport quality_report(const Mesh& mesh);
// Same scan without throwing.
QualityReport inspect_quality(const Mesh& mesh);

// Plain-text dump: "nodes", "hexes", "boundary_faces" blocks.
void write_mesh_dump(const Mesh& mesh, std::ostream& os);

struct VtkPointField {
  std::string name;
  int components = 1;
  std::span<const double> values;  // components * num_nodes
};
void write_vtk(const Mesh& mesh, std::ostream& os, std::span<const VtkPointField> fields = {});

}  // namespace nozzle
