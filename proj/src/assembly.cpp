#include "nozzleflow/assembly.hpp"

#include <algorithm>

#include "nozzleflow/error.hpp"
#include "nozzleflow/parallel.hpp"

namespace nozzle {

namespace {

// Physical shape gradients at qp q from the cached J^{-T}.
std::array<Vec3, 8> physical_gradients(const Mat3& inv_jac_t, int q) {
  const auto& ref_grad = ref::gauss_shape_gradients()[q];
  std::array<Vec3, 8> g{};
  for (int a = 0; a < 8; ++a) g[a] = inv_jac_t * ref_grad[a];
  return g;
}

}  // namespace

PotentialField PotentialField::zero(const Mesh& mesh) {
  return {&mesh, std::vector<double>(static_cast<std::size_t>(mesh.num_nodes()), 0.0)};
}

PotentialField PotentialField::linear(const Mesh& mesh, double c) {
  PotentialField f = zero(mesh);
  for (int n = 0; n < mesh.num_nodes(); ++n) f.phi[n] = c * (mesh.nodes()[n][2] - mesh.z_min());
  for (int n : mesh.inflow_nodes()) f.phi[n] = 0.0;
  return f;
}

Vec3 PotentialField::gradient(int element, int q) const {
  const auto& hex = mesh->hexes()[element];
  const auto& ref_grad = ref::gauss_shape_gradients()[q];
  Vec3 g{};
  for (int a = 0; a < 8; ++a) g = g + phi[hex[a]] * ref_grad[a];
  return mesh->quadrature(element)[q].inv_jac_t * g;
}

Vec3 PotentialField::gradient_at(int element, const Vec3& xi, const Mat3& inv_jac_t) const {
  const auto& hex = mesh->hexes()[element];
  const auto ref_grad = ref::shape_gradients(xi);
  Vec3 g{};
  for (int a = 0; a < 8; ++a) g = g + phi[hex[a]] * ref_grad[a];
  return inv_jac_t * g;
}

std::vector<Vec3> PotentialField::nodal_gradient() const {
  const int n = mesh->num_nodes();
  std::vector<Vec3> sum(static_cast<std::size_t>(n), Vec3{});
  std::vector<double> weight(static_cast<std::size_t>(n), 0.0);
  for (int e = 0; e < mesh->num_elements(); ++e) {
    const auto qp = mesh->quadrature(e);
    Vec3 g{};
    double w = 0.0;
    for (int q = 0; q < ref::kNumQp; ++q) {
      g = g + qp[q].weight * gradient(e, q);
      w += qp[q].weight;
    }
    const auto& hex = mesh->hexes()[e];
    for (int a = 0; a < 8; ++a) {
      if (std::find(hex.begin(), hex.begin() + a, hex[a]) != hex.begin() + a) continue;
      sum[hex[a]] = sum[hex[a]] + g;
      weight[hex[a]] += w;
    }
  }
  for (int i = 0; i < n; ++i)
    if (weight[i] > 0.0) sum[i] = (1.0 / weight[i]) * sum[i];
  return sum;
}

// ---------------------------------------------------------------------------

Assembler::Assembler(const Mesh& mesh, const TruncatedDensity& trunc, int threads)
    : mesh_(&mesh), trunc_(&trunc), threads_(std::max(1, threads)) {
  const int n = mesh.num_nodes();
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
  for (const auto& hex : mesh.hexes())
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) rows[hex[a]].push_back(hex[b]);
  for (auto& r : rows) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
  }
  pattern_ = CsrMatrix::from_pattern(rows);
  slots_.resize(static_cast<std::size_t>(mesh.num_elements()));
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& hex = mesh.hexes()[e];
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) slots_[e][a * 8 + b] = pattern_.find(hex[a], hex[b]);
  }

  load_.assign(static_cast<std::size_t>(n), 0.0);
  const SectionLayout out = section_layout_at_plane(mesh, mesh.N_z());
  outflow_area_ = out.area;
  for (const auto& p : out.points) {
    const auto N = ref::shape_values({p.xi[0], p.xi[1], 1.0});
    const auto& hex = mesh.hexes()[p.below];
    for (int a = 0; a < 8; ++a) load_[hex[a]] += p.weight * N[a] / out.area;
  }
  for (int i : mesh.inflow_nodes()) load_[i] = 0.0;
}

CoefficientCache Assembler::evaluate(const PotentialField& field) const {
  const std::size_t nq = static_cast<std::size_t>(mesh_->num_elements()) * ref::kNumQp;
  CoefficientCache c;
  c.grad.resize(nq);
  c.H.resize(nq);
  c.dH.resize(nq);
  parallel_chunks(mesh_->num_elements(), threads_, [&](int b, int e) {
    for (int el = b; el < e; ++el)
      for (int q = 0; q < ref::kNumQp; ++q) {
        const std::size_t k = static_cast<std::size_t>(el) * ref::kNumQp + q;
        c.grad[k] = field.gradient(el, q);
        const double s2 = norm_sq(c.grad[k]);
        c.H[k] = trunc_->H(s2);
        c.dH[k] = trunc_->dH(s2);
      }
  });
  for (const auto& g : c.grad) c.max_speed_sq = std::max(c.max_speed_sq, norm_sq(g));
  return c;
}

void Assembler::element_energy(const PotentialField& field, std::vector<double>& out) const {
  out.assign(static_cast<std::size_t>(mesh_->num_elements()), 0.0);
  parallel_chunks(mesh_->num_elements(), threads_, [&](int b, int e) {
    for (int el = b; el < e; ++el) {
      const auto qp = mesh_->quadrature(el);
      double s = 0.0;
      for (int q = 0; q < ref::kNumQp; ++q) s += qp[q].weight * trunc_->F(norm_sq(field.gradient(el, q)));
      out[el] = s;
    }
  });
}

double Assembler::energy(const PotentialField& field, double m0) const {
  std::vector<double> per_element;
  element_energy(field, per_element);
  double E = 0.0;
  for (double v : per_element) E += v;
  return E - m0 * dot(load_, field.phi);
}

double Assembler::energy_magnitude(const PotentialField& field, double m0) const {
  std::vector<double> per_element;
  element_energy(field, per_element);
  double E = 0.0;
  for (double v : per_element) E += std::abs(v);
  for (std::size_t i = 0; i < load_.size(); ++i) E += std::abs(m0 * load_[i] * field.phi[i]);
  return E;
}

std::vector<double> Assembler::residual(const CoefficientCache& cache, double m0) const {
  const int ne = mesh_->num_elements();
  std::vector<std::array<double, 8>> local(static_cast<std::size_t>(ne));
  parallel_chunks(ne, threads_, [&](int b, int e) {
    for (int el = b; el < e; ++el) {
      const auto qp = mesh_->quadrature(el);
      std::array<double, 8> r{};
      for (int q = 0; q < ref::kNumQp; ++q) {
        const std::size_t k = static_cast<std::size_t>(el) * ref::kNumQp + q;
        const auto g = physical_gradients(qp[q].inv_jac_t, q);
        const Vec3 flux = (qp[q].weight * cache.H[k]) * cache.grad[k];
        for (int a = 0; a < 8; ++a) r[a] += dot(flux, g[a]);
      }
      local[el] = r;
    }
  });
  std::vector<double> res(static_cast<std::size_t>(mesh_->num_nodes()), 0.0);
  for (int el = 0; el < ne; ++el) {
    const auto& hex = mesh_->hexes()[el];
    for (int a = 0; a < 8; ++a) res[hex[a]] += local[el][a];
  }
  for (std::size_t i = 0; i < res.size(); ++i) res[i] -= m0 * load_[i];
  for (int i : mesh_->inflow_nodes()) res[i] = 0.0;
  return res;
}

std::vector<double> Assembler::residual(const PotentialField& field, double m0) const {
  return residual(evaluate(field), m0);
}

CsrMatrix Assembler::hessian(const CoefficientCache& cache) const {
  const int ne = mesh_->num_elements();
  std::vector<std::array<double, 64>> local(static_cast<std::size_t>(ne));
  parallel_chunks(ne, threads_, [&](int b, int e) {
    for (int el = b; el < e; ++el) {
      const auto qp = mesh_->quadrature(el);
      std::array<double, 64> K{};
      for (int q = 0; q < ref::kNumQp; ++q) {
        const std::size_t k = static_cast<std::size_t>(el) * ref::kNumQp + q;
        const auto g = physical_gradients(qp[q].inv_jac_t, q);
        const Vec3& p = cache.grad[k];
        const double w = qp[q].weight;
        const double h = w * cache.H[k], c = 2.0 * w * cache.dH[k];
        std::array<double, 8> pg{};
        for (int a = 0; a < 8; ++a) pg[a] = dot(p, g[a]);
        for (int a = 0; a < 8; ++a)
          for (int bb = 0; bb < 8; ++bb) K[a * 8 + bb] += h * dot(g[a], g[bb]) + c * pg[a] * pg[bb];
      }
      local[el] = K;
    }
  });
  CsrMatrix A = pattern_;
  for (int el = 0; el < ne; ++el)
    for (int k = 0; k < 64; ++k) A.val[slots_[el][k]] += local[el][k];
  const auto& mask = mesh_->dirichlet_mask();
  for (int i = 0; i < A.n; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      if (mask[i] || mask[A.col[k]]) A.val[k] = i == A.col[k] ? 1.0 : 0.0;
  return A;
}

CsrMatrix Assembler::hessian(const PotentialField& field) const { return hessian(evaluate(field)); }

CsrMatrix Assembler::laplace_stiffness() const {
  CsrMatrix A = pattern_;
  const double h0 = trunc_->H(0.0);
  for (int el = 0; el < mesh_->num_elements(); ++el) {
    const auto qp = mesh_->quadrature(el);
    for (int q = 0; q < ref::kNumQp; ++q) {
      const auto g = physical_gradients(qp[q].inv_jac_t, q);
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) A.val[slots_[el][a * 8 + b]] += qp[q].weight * h0 * dot(g[a], g[b]);
    }
  }
  return A;
}

}  // namespace nozzle
