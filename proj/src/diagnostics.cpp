#include "nozzleflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace nozzle {

namespace {

int require_plane(const Mesh& mesh, double t) {
  const auto k = mesh.plane_index(t);
  if (!k) {
    std::ostringstream os;
    os << "station x3 = " << t << " is not a lattice plane in [" << mesh.z_min() << ", " << mesh.z_max() << "]";
    throw Error(Errc::station_out_of_range, os.str());
  }
  return *k;
}

// Axial layers k with z_k >= a and z_{k+1} <= b.
std::pair<int, int> layers_between(const Mesh& mesh, double a, double b) {
  const auto& z = mesh.z_planes();
  const double tol = 1e-9 * std::max(1.0, mesh.L());
  int k0 = 0;
  while (k0 < mesh.N_z() && z[k0] < a - tol) ++k0;
  int k1 = mesh.N_z();
  while (k1 > 0 && z[k1] > b + tol) --k1;
  return {k0, std::max(k0, k1)};
}

}  // namespace

FarField far_state(double f_bar, const DensityLaw& law, double m0) {
  if (!(m0 >= 0.0)) throw Error(Errc::negative_input, "flux m0 must be >= 0");
  FarField far;
  far.f_bar = f_bar;
  far.area = std::numbers::pi * f_bar * f_bar;
  far.q_bar = law.invert_momentum_subsonic(m0 / far.area);
  far.rho_bar = law.density(far.q_bar * far.q_bar);
  return far;
}

FarField far_state(const NozzleGeometry& geom, const DensityLaw& law, double m0) {
  return far_state(geom.f_bar(), law, m0);
}

double flux_at(const PotentialField& field, const TruncatedDensity& trunc, double t) {
  const Mesh& mesh = *field.mesh;
  const SectionLayout sec = section_layout_at_plane(mesh, require_plane(mesh, t));
  double flux = 0.0;
  for (const auto& p : sec.points) {
    Vec3 g{};
    int sides = 0;
    if (p.above >= 0) {
      g = g + field.gradient_at(p.above, {p.xi[0], p.xi[1], 0.0}, p.inv_jac_t_above);
      ++sides;
    }
    if (p.below >= 0) {
      g = g + field.gradient_at(p.below, {p.xi[0], p.xi[1], 1.0}, p.inv_jac_t_below);
      ++sides;
    }
    g = (1.0 / sides) * g;
    flux += p.weight * trunc.H(norm_sq(g)) * g[2];
  }
  return flux;
}

double max_speed(const PotentialField& field) {
  double q2 = 0.0;
  for (int e = 0; e < field.mesh->num_elements(); ++e)
    for (int q = 0; q < ref::kNumQp; ++q) q2 = std::max(q2, norm_sq(field.gradient(e, q)));
  return std::sqrt(q2);
}

SlabDeviation slab_deviation(const PotentialField& field, const FarField& far, double T) {
  const Mesh& mesh = *field.mesh;
  const int k0 = require_plane(mesh, T);
  const int k1 = require_plane(mesh, T + 1.0);
  SlabDeviation out;
  for (int k = k0; k < k1; ++k)
    for (int j = 0; j < mesh.N_theta(); ++j)
      for (int i = 0; i < mesh.N_r(); ++i) {
        const int e = mesh.element_id(i, j, k);
        const auto qp = mesh.quadrature(e);
        for (int q = 0; q < ref::kNumQp; ++q) {
          Vec3 d = field.gradient(e, q);
          d[2] -= far.q_bar;
          const double d2 = norm_sq(d);
          out.energy += qp[q].weight * d2;
          out.volume += qp[q].weight;
          out.sup = std::max(out.sup, std::sqrt(d2));
        }
      }
  return out;
}

DecayReport decay_report(const PotentialField& field, const FarField& far, const std::vector<double>& stations,
                         double floor) {
  DecayReport rep;
  rep.noise_floor = floor;
  for (double T : stations) {
    if (!rep.stations.empty() && !(T > rep.stations.back()))
      throw Error(Errc::invalid_argument, "decay stations must be strictly increasing");
    const SlabDeviation s = slab_deviation(field, far, T);
    rep.stations.push_back(T);
    rep.slab_energy.push_back(s.energy);
    rep.sup_dev.push_back(s.sup);
  }
  try {
    rep.exponential = fit_exponential_rate(rep.stations, rep.slab_energy, floor);
  } catch (const Error& e) {
    if (e.code() != Errc::noise_floor && e.code() != Errc::invalid_argument) throw;
  }
  try {
    rep.algebraic = fit_algebraic_rate(rep.stations, rep.slab_energy, floor);
  } catch (const Error& e) {
    if (e.code() != Errc::noise_floor && e.code() != Errc::invalid_argument) throw;
  }
  return rep;
}

void write_decay_table(const DecayReport& report, std::ostream& os) {
  os.precision(17);
  os << "# T slab_energy sup_dev\n";
  for (std::size_t i = 0; i < report.stations.size(); ++i)
    os << report.stations[i] << ' ' << report.slab_energy[i] << ' ' << report.sup_dev[i] << '\n';
}

double noise_floor(const Mesh& mesh, const TruncatedDensity& trunc, double m0, const std::vector<double>& stations,
                   const SolverConfig& config) {
  const NozzleGeometry straight(NozzleProfile::straight(mesh.geometry().f_bar()));
  const Mesh ref_mesh = build_mesh_on_lattice(straight, mesh.z_planes(), mesh.N_r(), mesh.N_theta(), mesh.L());
  const PotentialField zero = PotentialField::zero(ref_mesh);
  const SolveResult s = solve(ref_mesh, trunc, m0, config, &zero);
  const FarField far = far_state(straight, trunc.law(), m0);
  // The discrete exact solution is the uniform flow through the discrete area.
  FarField discrete = far;
  discrete.q_bar = trunc.law().invert_momentum_subsonic(m0 / section_layout_at_plane(ref_mesh, 0).area);
  double worst = 0.0;
  for (double T : stations) worst = std::max(worst, slab_deviation(s.field, discrete, T).energy);
  return 10.0 * worst;
}

OptimalityReport optimality_lower_bound(const PotentialField& field, const TruncatedDensity& trunc,
                                        const FarField& far, double m0, const std::vector<double>& stations,
                                        double flux_tol) {
  const Mesh& mesh = *field.mesh;
  OptimalityReport rep;
  std::vector<double> ts, sups;
  for (double t : stations) {
    OptimalityStation st;
    st.t = t;
    const SectionLayout sec = section_layout_at_plane(mesh, require_plane(mesh, t));
    st.area = sec.area;
    double flux = 0.0;
    for (const auto& p : sec.points) {
      Vec3 g{};
      int sides = 0;
      if (p.above >= 0) {
        g = g + field.gradient_at(p.above, {p.xi[0], p.xi[1], 0.0}, p.inv_jac_t_above);
        ++sides;
      }
      if (p.below >= 0) {
        g = g + field.gradient_at(p.below, {p.xi[0], p.xi[1], 1.0}, p.inv_jac_t_below);
        ++sides;
      }
      g = (1.0 / sides) * g;
      flux += p.weight * trunc.H(norm_sq(g)) * g[2];
      Vec3 d = g;
      d[2] -= far.q_bar;
      st.section_sup = std::max(st.section_sup, norm(d));
    }
    st.flux_error = std::abs(flux - m0);
    if (st.flux_error > flux_tol) {
      std::ostringstream os;
      os << "flux through x3 = " << t << " is " << flux << ", off m0 = " << m0 << " by " << st.flux_error
         << " > " << flux_tol;
      throw Error(Errc::inconsistent_flux, os.str());
    }
    // rho(|p|^2) p3 is Lambda-Lipschitz in p, so the flux deficit against the
    // far state bounds the sup deviation on the section from below.
    st.deficit = far.rho_bar * far.q_bar * std::abs(far.area - sec.area);
    st.lower_bound = std::max(0.0, st.deficit - st.flux_error) / (sec.area * trunc.Lambda());
    if (t + 1.0 <= mesh.z_max() + 1e-9) st.slab_sup = slab_deviation(field, far, t).sup;
    rep.stations.push_back(st);
    ts.push_back(t);
    sups.push_back(st.slab_sup);
  }
  try {
    rep.sup_fit = fit_power_exponent(ts, sups);
  } catch (const Error& e) {
    if (e.code() != Errc::noise_floor && e.code() != Errc::invalid_argument) throw;
  }
  return rep;
}

double zeta_weight(double x3, double t1, double t2, double beta, double h) {
  if (x3 <= t1 - h) return 1.0;
  if (x3 <= t1) return std::exp(beta * (x3 - t1 + h));
  if (x3 <= t2) return std::exp(beta * h);
  if (x3 <= t2 + h) return std::exp(beta * h) * std::exp(-beta * (x3 - t2));
  return 1.0;
}

WeightedSlabResult weighted_slab_check(const PotentialField& phi1, const PotentialField& phi2,
                                       const TruncatedDensity& trunc, double t1, double t2, double h,
                                       double Lambda_P, std::optional<double> beta) {
  if (phi1.mesh != phi2.mesh) throw Error(Errc::incompatible_meshes, "weighted slab check needs one mesh");
  if (!(t1 < t2) || !(h >= 0.0)) throw Error(Errc::invalid_argument, "need t1 < t2 and h >= 0");
  const Mesh& mesh = *phi1.mesh;
  if (t1 - h < mesh.z_min() || t2 + h > mesh.z_max()) {
    std::ostringstream os;
    os << "weight support [" << t1 - h << ", " << t2 + h << "] leaves the mesh";
    throw Error(Errc::station_out_of_range, os.str());
  }
  WeightedSlabResult r;
  r.Lambda_eff = std::max(trunc.Lambda(), Lambda_P);
  r.beta = beta ? *beta : trunc.lambda() / (r.Lambda_eff * r.Lambda_eff);
  double in_bulk = 0.0, on_ramps = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ParamBox box = mesh.element_box(e);
    if (box.z1 <= t1 - h || box.z0 >= t2 + h) continue;
    const auto qp = mesh.quadrature(e);
    for (int q = 0; q < ref::kNumQp; ++q) {
      const double z = box.z0 + ref::gauss_points()[q][2] * (box.z1 - box.z0);
      const double zeta = zeta_weight(z, t1, t2, r.beta, h);
      const double g2 = norm_sq(phi1.gradient(e, q) - phi2.gradient(e, q));
      in_bulk += qp[q].weight * (zeta - 1.0) * g2;
      const bool ramp = (z > t1 - h && z <= t1) || (z > t2 && z <= t2 + h);
      if (ramp) on_ramps += qp[q].weight * zeta * g2;
    }
  }
  r.lhs = trunc.lambda() * in_bulk;
  r.rhs = r.Lambda_eff * r.Lambda_eff * r.beta * on_ramps;
  return r;
}

double gradient_discrepancy(const PotentialField& a, const PotentialField& b, double z0, double z1,
                            double* reference) {
  const Mesh& ma = *a.mesh;
  const Mesh& mb = *b.mesh;
  if (ma.N_r() != mb.N_r() || ma.N_theta() != mb.N_theta())
    throw Error(Errc::incompatible_meshes, "meshes differ in (N_r, N_theta)");
  const auto [k0, k1] = layers_between(ma, z0, z1);
  double diff = 0.0, ref_norm = 0.0;
  for (int k = k0; k < k1; ++k) {
    const double zlo = ma.z_planes()[k], zhi = ma.z_planes()[k + 1];
    const auto kb = mb.plane_index(zlo);
    const double tol = 1e-9 * std::max(1.0, std::abs(zhi));
    if (!kb || *kb + 1 > mb.N_z() || std::abs(mb.z_planes()[*kb + 1] - zhi) > tol) {
      std::ostringstream os;
      os << "layer [" << zlo << ", " << zhi << "] has no counterpart in the second mesh";
      throw Error(Errc::incompatible_meshes, os.str());
    }
    for (int j = 0; j < ma.N_theta(); ++j)
      for (int i = 0; i < ma.N_r(); ++i) {
        const int ea = ma.element_id(i, j, k), eb = mb.element_id(i, j, *kb);
        const auto qp = ma.quadrature(ea);
        for (int q = 0; q < ref::kNumQp; ++q) {
          const Vec3 ga = a.gradient(ea, q);
          diff += qp[q].weight * norm_sq(ga - b.gradient(eb, q));
          ref_norm += qp[q].weight * norm_sq(ga);
        }
      }
  }
  if (reference) *reference = std::sqrt(ref_norm);
  return std::sqrt(diff);
}

DomainConvergence domain_convergence(const NozzleGeometry& geom, const TruncatedDensity& trunc, double m0,
                                     const MeshSpec& spec, double factor, const SolverConfig& config) {
  if (!(factor > 1.0)) throw Error(Errc::invalid_argument, "domain factor must be > 1");
  if (spec.grading != 1.0) throw Error(Errc::invalid_argument, "domain convergence needs a uniform lattice");
  const double dz = 2.0 * spec.L / spec.N_z;
  MeshSpec long_spec = spec;
  long_spec.L = factor * spec.L;
  const double n_long = 2.0 * long_spec.L / dz;
  long_spec.N_z = static_cast<int>(std::lround(n_long));
  if (std::abs(n_long - long_spec.N_z) > 1e-9 || std::abs(std::remainder(long_spec.L - spec.L, dz)) > 1e-9) {
    std::ostringstream os;
    os << "factor " << factor << " does not keep the axial spacing " << dz << " aligned";
    throw Error(Errc::incompatible_meshes, os.str());
  }
  const Mesh short_mesh = build_mesh(geom, spec);
  const Mesh long_mesh = build_mesh(geom, long_spec);
  const SolveResult a = solve(short_mesh, trunc, m0, config);
  const SolveResult b = solve(long_mesh, trunc, m0, config);
  DomainConvergence out;
  out.discrepancy = gradient_discrepancy(a.field, b.field, -0.5 * spec.L, 0.5 * spec.L, &out.reference);
  out.short_report = a.report;
  out.long_report = b.report;
  return out;
}

}  // namespace nozzle
