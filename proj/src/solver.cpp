#include "nozzleflow/solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace nozzle {

void SolverConfig::validate() const {
  if (!(newton_tol > 0.0)) throw Error(Errc::invalid_argument, "solver.newton_tol must be > 0");
  if (max_newton < 1) throw Error(Errc::invalid_argument, "solver.max_newton must be >= 1");
  if (!(cg_tol > 0.0)) throw Error(Errc::invalid_argument, "solver.cg_tol must be > 0");
  if (cg_max < 0) throw Error(Errc::invalid_argument, "solver.cg_max must be >= 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw Error(Errc::invalid_argument, "solver.armijo_c must be in (0, 1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw Error(Errc::invalid_argument, "solver.backtrack must be in (0, 1)");
}

PotentialField initial_guess(const Mesh& mesh, const DensityLaw& law, double m0) {
  if (m0 <= 0.0) return PotentialField::zero(mesh);
  const double mean_area = mesh.volume() / (mesh.z_max() - mesh.z_min());
  const double m = m0 / mean_area;
  const double q0 = m < law.momentum(0.999) ? law.invert_momentum_subsonic(m) : 0.999;
  return PotentialField::linear(mesh, q0);
}

SolveResult solve(const Mesh& mesh, const TruncatedDensity& trunc, double m0, const SolverConfig& config,
                  const PotentialField* initial) {
  config.validate();
  if (!(m0 >= 0.0)) throw Error(Errc::invalid_argument, "flux m0 must be >= 0");
  const Assembler asmb(mesh, trunc, config.threads);
  const int cg_max =
      config.cg_max > 0 ? config.cg_max : static_cast<int>(std::ceil(20.0 * std::sqrt(mesh.num_nodes())));

  PotentialField phi = initial ? *initial : initial_guess(mesh, trunc.law(), m0);
  if (phi.mesh != &mesh || phi.phi.size() != static_cast<std::size_t>(mesh.num_nodes()))
    throw Error(Errc::invalid_argument, "initial field does not belong to this mesh");
  for (int i : mesh.inflow_nodes()) phi.phi[i] = 0.0;

  SolveReport rep;
  rep.tolerance = config.newton_tol * m0 * norm2(asmb.unit_flux_load());
  double E = asmb.energy(phi, m0);
  rep.energy_history.push_back(E);

  CoefficientCache cache = asmb.evaluate(phi);
  std::vector<double> r = asmb.residual(cache, m0);
  rep.residual_norm = norm2(r);

  auto finish = [&] {
    rep.max_speed = std::sqrt(cache.max_speed_sq);
    rep.truncation_active = cache.max_speed_sq >= trunc.blend_begin();
  };

  while (rep.residual_norm > rep.tolerance) {
    if (rep.iterations >= config.max_newton) {
      finish();
      std::ostringstream os;
      os << "Newton stopped after " << rep.iterations << " iterations with residual " << rep.residual_norm
         << " > " << rep.tolerance;
      throw NoConvergence(os.str(), rep);
    }
    const CsrMatrix A = asmb.hessian(cache);
    std::vector<double> rhs(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
    const CgResult cg = cg_solve(A, rhs, config.cg_tol, cg_max, config.threads);
    rep.cg_iterations += cg.iterations;
    if (cg.relative_residual > 0.5) {
      std::ostringstream os;
      os << "inner CG reached relative residual " << cg.relative_residual << " after " << cg.iterations
         << " iterations";
      throw Error(Errc::linear_solve_failure, os.str());
    }
    const std::vector<double>& d = cg.x;
    const double slope = dot(r, d);  // < 0: CG iterates are descent directions
    // Energy differences below this are indistinguishable from round-off.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * asmb.energy_magnitude(phi, m0);

    double t = 1.0;
    int backtracks = 0;
    PotentialField trial = phi;
    double E_trial;
    for (;;) {
      for (std::size_t i = 0; i < d.size(); ++i) trial.phi[i] = phi.phi[i] + t * d[i];
      E_trial = asmb.energy(trial, m0);
      if (E_trial <= E + config.armijo_c * t * slope + noise) break;
      t *= config.backtrack;
      ++backtracks;
      if (t < std::ldexp(1.0, -30)) {
        finish();
        std::ostringstream os;
        os << "line search step fell below 2^-30 at Newton iteration " << rep.iterations;
        throw NoConvergence(os.str(), rep);
      }
    }
    phi = std::move(trial);
    E = E_trial;
    rep.energy_history.push_back(E);
    rep.line_search_steps.push_back(backtracks);
    ++rep.iterations;
    cache = asmb.evaluate(phi);
    r = asmb.residual(cache, m0);
    rep.residual_norm = norm2(r);
  }
  rep.converged = true;
  finish();
  return {std::move(phi), std::move(rep)};
}

SweepResult continuation_sweep(const Mesh& mesh, const TruncatedDensity& trunc, const std::vector<double>& m0_list,
                               const SolverConfig& config, double bracket_width, bool keep_fields) {
  for (std::size_t i = 1; i < m0_list.size(); ++i)
    if (!(m0_list[i] > m0_list[i - 1])) throw Error(Errc::invalid_argument, "m0 list must be strictly ascending");

  SweepResult out;
  std::optional<PotentialField> prev;
  double prev_m = 0.0;
  auto warm = [&](double m) -> std::optional<PotentialField> {
    if (!prev || prev_m <= 0.0) return std::nullopt;
    PotentialField f = *prev;
    for (double& v : f.phi) v *= m / prev_m;
    return f;
  };
  auto run = [&](double m) {
    const auto init = warm(m);
    return solve(mesh, trunc, m, config, init ? &*init : nullptr);
  };

  for (double m : m0_list) {
    SolveResult s = run(m);
    SweepEntry entry{m, s.report.max_speed, s.report};
    if (s.report.truncation_active) {
      out.first_truncated = entry;
      double lo = prev ? prev_m : 0.0, hi = m;
      while (hi - lo > bracket_width * hi) {
        const double mid = 0.5 * (lo + hi);
        SolveResult b = run(mid);
        out.bisection.push_back({mid, b.report.max_speed, b.report});
        if (b.report.truncation_active) {
          hi = mid;
        } else {
          lo = mid;
          prev = std::move(b.field);
          prev_m = mid;
        }
      }
      out.bracket = std::make_pair(lo, hi);
      break;
    }
    out.accepted.push_back(entry);
    if (keep_fields) out.fields.push_back(s.field);
    prev = std::move(s.field);
    prev_m = m;
  }
  return out;
}

}  // namespace nozzle
