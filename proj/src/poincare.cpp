#include <algorithm>
#include <cmath>
#include <numbers>

#include "nozzleflow/diagnostics.hpp"

namespace nozzle {

namespace {

struct SectionMesh {
  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 4>> cells;
  std::vector<std::array<double, 4>> boxes;  // s0, s1, th0, th1
};

SectionMesh section_mesh(const NozzleGeometry& geom, double t, int N_r, int N_theta) {
  SectionMesh m;
  const double dth = 2.0 * std::numbers::pi / N_theta;
  const bool collapsed = geom.obstacle_radius(0.0, t) <= 0.0;
  std::vector<int> id(static_cast<std::size_t>((N_r + 1) * N_theta));
  auto at = [&](int i, int j) -> int& { return id[static_cast<std::size_t>(i * N_theta + (j % N_theta))]; };
  int i_first = 0;
  if (collapsed) {
    m.nodes.push_back({0.0, 0.0});
    for (int j = 0; j < N_theta; ++j) at(0, j) = 0;
    i_first = 1;
  }
  for (int i = i_first; i <= N_r; ++i)
    for (int j = 0; j < N_theta; ++j) {
      const double s = static_cast<double>(i) / N_r, th = j * dth;
      const double f2 = geom.obstacle_radius(th, t);
      const double r = f2 + s * (geom.wall_radius(th, t) - f2);
      at(i, j) = static_cast<int>(m.nodes.size());
      m.nodes.push_back({r * std::cos(th), r * std::sin(th)});
    }
  for (int i = 0; i < N_r; ++i)
    for (int j = 0; j < N_theta; ++j) {
      m.cells.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)});
      m.boxes.push_back({static_cast<double>(i) / N_r, static_cast<double>(i + 1) / N_r, j * dth, (j + 1) * dth});
    }
  return m;
}

}  // namespace

double section_poincare_constant(const NozzleGeometry& geom, double t, int N_r, int N_theta) {
  if (N_r < 1 || N_theta < 3) throw Error(Errc::invalid_argument, "section mesh needs N_r >= 1, N_theta >= 3");
  const SectionMesh sm = section_mesh(geom, t, N_r, N_theta);
  const int n = static_cast<int>(sm.nodes.size());
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
  for (const auto& c : sm.cells)
    for (int a : c)
      for (int b : c) rows[a].push_back(b);
  for (auto& r : rows) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
  }
  CsrMatrix K = CsrMatrix::from_pattern(rows), M = K;

  // Exact map (s, theta) -> (x, y) at the Gauss points, bilinear basis in the parameters.
  const double g = 0.5 / std::sqrt(3.0);
  const double gp[2] = {0.5 - g, 0.5 + g};
  static constexpr int corner[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (std::size_t c = 0; c < sm.cells.size(); ++c) {
    const auto [s0, s1, th0, th1] = sm.boxes[c];
    for (double u : gp)
      for (double v : gp) {
        const double s = s0 + u * (s1 - s0), th = th0 + v * (th1 - th0);
        const ProfileSample f1 = geom.wall_sample(th, t), f2 = geom.obstacle_sample(th, t);
        const double R = f2.value + s * (f1.value - f2.value);
        const double Rs = f1.value - f2.value;
        const double Rt = f2.d_theta + s * (f1.d_theta - f2.d_theta);
        const double cs = std::cos(th), sn = std::sin(th);
        // d(x,y)/d(u,v)
        const double j00 = Rs * cs * (s1 - s0), j01 = (Rt * cs - R * sn) * (th1 - th0);
        const double j10 = Rs * sn * (s1 - s0), j11 = (Rt * sn + R * cs) * (th1 - th0);
        const double det = j00 * j11 - j01 * j10;
        const double w = 0.25 * std::abs(det);
        double N[4], gx[4], gy[4];
        for (int a = 0; a < 4; ++a) {
          const double fu = corner[a][0] ? u : 1.0 - u, fv = corner[a][1] ? v : 1.0 - v;
          const double du = corner[a][0] ? 1.0 : -1.0, dv = corner[a][1] ? 1.0 : -1.0;
          N[a] = fu * fv;
          const double gu = du * fv, gv = fu * dv;
          gx[a] = (j11 * gu - j10 * gv) / det;
          gy[a] = (-j01 * gu + j00 * gv) / det;
        }
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) {
            const int k = K.find(sm.cells[c][a], sm.cells[c][b]);
            K.val[k] += w * (gx[a] * gx[b] + gy[a] * gy[b]);
            M.val[k] += w * N[a] * N[b];
          }
      }
  }

  const std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  const std::vector<double> M1 = M.multiply(ones);
  const double area = dot(ones, M1);
  const double sigma = std::numbers::pi / area;
  CsrMatrix S = K;
  for (std::size_t k = 0; k < S.val.size(); ++k) S.val[k] += sigma * M.val[k];

  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = sm.nodes[i][0] + 0.37 * sm.nodes[i][1] + 0.05 * std::sin(7.0 * i);
  double mu = 0.0;
  for (int it = 0; it < 500; ++it) {
    const double c = dot(M1, v) / area;
    for (double& x : v) x -= c;
    const std::vector<double> Mv = M.multiply(v);
    const double mnorm = std::sqrt(dot(v, Mv));
    for (double& x : v) x /= mnorm;
    const double mu_new = dot(v, K.multiply(v));
    if (it > 0 && std::abs(mu_new - mu) <= 1e-13 * mu_new) {
      mu = mu_new;
      break;
    }
    mu = mu_new;
    std::vector<double> rhs = M.multiply(v);
    v = cg_solve(S, rhs, 1e-13, 20 * n).x;
  }
  return 1.0 / std::sqrt(mu);
}

double poincare_constant(const Mesh& mesh, double t, int refine) {
  if (!mesh.plane_index(t)) {
    throw Error(Errc::station_out_of_range, "Poincare station must be a lattice plane");
  }
  refine = std::max(1, refine);
  return section_poincare_constant(mesh.geometry(), t, refine * mesh.N_r(), refine * mesh.N_theta());
}

}  // namespace nozzle
