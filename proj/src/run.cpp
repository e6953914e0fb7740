#include "nozzleflow/run.hpp"

#include <boost/crc.hpp>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "nozzleflow/diagnostics.hpp"
#include "nozzleflow/field_io.hpp"
#include "nozzleflow/format.hpp"
#include "nozzleflow/parallel.hpp"

namespace nozzle {

void Report::section(const std::string& name) { sections_.push_back({name, {}}); }

void Report::add(const std::string& key, const std::string& value) {
  if (sections_.empty()) section("general");
  sections_.back().second.emplace_back(key, value);
}

void Report::add(const std::string& key, double value) { add(key, format_double(value)); }

void Report::add(const std::string& key, long long value) { add(key, std::to_string(value)); }

void Report::add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }

void Report::write(std::ostream& os) const {
  for (std::size_t s = 0; s < sections_.size(); ++s) {
    os << (s ? "\n" : "") << '[' << sections_[s].first << "]\n";
    for (const auto& [k, v] : sections_[s].second) os << k << " = " << v << '\n';
  }
}

std::string Report::get(const std::string& section, const std::string& key) const {
  for (const auto& [name, entries] : sections_)
    if (name == section)
      for (const auto& [k, v] : entries)
        if (k == key) return v;
  return {};
}

std::uint32_t file_crc32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  boost::crc_32_type crc;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    crc.process_bytes(buf, static_cast<std::size_t>(in.gcount()));
  }
  return crc.checksum();
}

namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  explicit Stopwatch(RunManifest& m) : m_(m), t_(Clock::now()) {}
  void lap(const std::string& stage) {
    const auto now = Clock::now();
    m_.timings.emplace_back(stage, std::chrono::duration<double>(now - t_).count());
    t_ = now;
  }

 private:
  RunManifest& m_;
  Clock::time_point t_;
};

struct Context {
  const RunConfig& cfg;
  const DensityLaw& law;
  const TruncatedDensity& trunc;
  const NozzleGeometry& geom;
  const Mesh& mesh;
  SolverConfig solver;
  RunManifest& manifest;
};

template <class Writer>
void emit(Context& ctx, const std::string& name, Writer&& write) {
  const auto path = ctx.cfg.output_dir / name;
  {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    write(out);
    if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
  }
  ctx.manifest.files.push_back({name, std::filesystem::file_size(path), file_crc32(path)});
}

std::vector<double> integer_stations(const Mesh& mesh, double lo, double hi) {
  std::vector<double> out;
  for (double t = std::ceil(lo); t <= hi; t += 1.0)
    if (mesh.plane_index(t)) out.push_back(t);
  return out;
}

void report_setup(Context& ctx) {
  Report& r = ctx.manifest.report;
  r.section("gas");
  r.add("gamma", ctx.law.gamma());
  r.add("stagnation_density", ctx.law.stagnation_density());
  r.add("epsilon", ctx.trunc.epsilon());
  r.add("lambda", ctx.trunc.lambda());
  r.add("Lambda", ctx.trunc.Lambda());
  r.add("plateau", ctx.trunc.plateau());
  r.section("geometry");
  r.add("family", ctx.cfg.family);
  r.add("f_bar", ctx.geom.f_bar());
  r.add("obstacle", ctx.geom.has_obstacle());
  r.add("gap_constant", ctx.geom.gap_constant());
  r.add("decay_constant", ctx.geom.admissibility().decay_constant);
  r.add("area_min", ctx.geom.admissibility().area_min);
  r.add("area_max", ctx.geom.admissibility().area_max);
  r.section("mesh");
  const QualityReport q = inspect_quality(ctx.mesh);
  r.add("nodes", ctx.mesh.num_nodes());
  r.add("elements", ctx.mesh.num_elements());
  r.add("N_r", ctx.mesh.N_r());
  r.add("N_theta", ctx.mesh.N_theta());
  r.add("N_z", ctx.mesh.N_z());
  r.add("L", ctx.mesh.L());
  r.add("volume", ctx.mesh.volume());
  r.add("min_jacobian", q.min_jacobian);
  r.add("max_jacobian", q.max_jacobian);
  r.add("max_aspect_ratio", q.max_aspect_ratio);
  r.add("worst_aspect_element", q.worst_aspect_element);
}

void report_solve(Context& ctx, const std::string& name, double m0, const SolveResult& s) {
  Report& r = ctx.manifest.report;
  r.section(name);
  r.add("m0", m0);
  r.add("converged", s.report.converged);
  r.add("iterations", s.report.iterations);
  r.add("residual_norm", s.report.residual_norm);
  r.add("tolerance", s.report.tolerance);
  r.add("energy", s.report.energy_history.back());
  r.add("cg_iterations", s.report.cg_iterations);
  r.add("Q", s.report.max_speed);
  r.add("truncation_active", s.report.truncation_active);
  r.add("subsonic_margin", ctx.trunc.blend_begin() - s.report.max_speed * s.report.max_speed);
}

double report_flux(Context& ctx, const PotentialField& field, double m0) {
  const auto stations = integer_stations(ctx.mesh, ctx.mesh.z_min(), ctx.mesh.z_max());
  double worst = 0.0, worst_t = 0.0;
  for (double t : stations) {
    const double e = std::abs(flux_at(field, ctx.trunc, t) - m0);
    if (e >= worst) {
      worst = e;
      worst_t = t;
    }
  }
  Report& r = ctx.manifest.report;
  r.section("flux");
  r.add("stations", static_cast<int>(stations.size()));
  r.add("max_error", worst);
  r.add("worst_station", worst_t);
  r.add("relative_error", m0 > 0.0 ? worst / m0 : 0.0);
  return worst;
}

void write_field(Context& ctx, const PotentialField& field) {
  emit(ctx, "field.txt", [&](std::ostream& os) { write_field_dump(field, ctx.trunc, os); });
  if (ctx.cfg.vtk) {
    const auto u = field.nodal_gradient();
    std::vector<double> vel;
    vel.reserve(3 * u.size());
    for (const auto& v : u) vel.insert(vel.end(), v.begin(), v.end());
    const VtkPointField fields[] = {{"phi", 1, field.phi}, {"velocity", 3, vel}};
    emit(ctx, "field.vtk", [&](std::ostream& os) { write_vtk(ctx.mesh, os, fields); });
  }
}

SolveResult solve_checked(Context& ctx, double m0) {
  return solve(ctx.mesh, ctx.trunc, m0, ctx.solver);
}

void run_solve(Context& ctx, Stopwatch& sw) {
  const SolveResult s = solve_checked(ctx, ctx.cfg.m0);
  sw.lap("solve");
  report_solve(ctx, "solve", ctx.cfg.m0, s);
  const FarField far = far_state(ctx.geom, ctx.law, ctx.cfg.m0);
  Report& r = ctx.manifest.report;
  r.section("far_field");
  r.add("q_bar", far.q_bar);
  r.add("rho_bar", far.rho_bar);
  report_flux(ctx, s.field, ctx.cfg.m0);
  write_field(ctx, s.field);
  sw.lap("output");
}

void run_sweep(Context& ctx, Stopwatch& sw) {
  std::vector<double> list = ctx.cfg.m0_list;
  if (list.empty()) {
    const double cap = std::numbers::pi * ctx.geom.f_bar() * ctx.geom.f_bar();
    for (double f : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99}) list.push_back(f * cap);
  }
  const SweepResult sw_res = continuation_sweep(ctx.mesh, ctx.trunc, list, ctx.solver);
  sw.lap("sweep");
  emit(ctx, "sweep.txt", [&](std::ostream& os) {
    os.precision(17);
    os << "# m0 Q iterations residual_norm truncation_active kind\n";
    auto row = [&](const SweepEntry& e, const char* kind) {
      os << e.m0 << ' ' << e.Q << ' ' << e.report.iterations << ' ' << e.report.residual_norm << ' '
         << (e.report.truncation_active ? 1 : 0) << ' ' << kind << '\n';
    };
    for (const auto& e : sw_res.accepted) row(e, "sweep");
    if (sw_res.first_truncated) row(*sw_res.first_truncated, "truncated");
    for (const auto& e : sw_res.bisection) row(e, "bisection");
  });
  Report& r = ctx.manifest.report;
  r.section("sweep");
  r.add("accepted", static_cast<int>(sw_res.accepted.size()));
  if (!sw_res.accepted.empty()) {
    r.add("m0_max_accepted", sw_res.accepted.back().m0);
    r.add("Q_max_accepted", sw_res.accepted.back().Q);
  }
  r.add("truncation_fired", sw_res.first_truncated.has_value());
  if (sw_res.bracket) {
    r.add("critical_flux_lo", sw_res.bracket->first);
    r.add("critical_flux_hi", sw_res.bracket->second);
    r.add("bisection_solves", static_cast<int>(sw_res.bisection.size()));
  }
  sw.lap("output");
}

void run_decay(Context& ctx, Stopwatch& sw) {
  const SolveResult s = solve_checked(ctx, ctx.cfg.m0);
  sw.lap("solve");
  report_solve(ctx, "solve", ctx.cfg.m0, s);
  const FarField far = far_state(ctx.geom, ctx.law, ctx.cfg.m0);
  const auto stations = integer_stations(ctx.mesh, ctx.cfg.decay_T_min, ctx.cfg.decay_T_max);
  const double floor = noise_floor(ctx.mesh, ctx.trunc, ctx.cfg.m0, stations, ctx.solver);
  DecayReport rep = decay_report(s.field, far, stations, floor);
  const double lp = poincare_constant(ctx.mesh, stations.empty() ? 0.0 : stations.back());
  const double lam_eff = std::max(ctx.trunc.Lambda(), lp);
  rep.predicted_beta = ctx.trunc.lambda() / (lam_eff * lam_eff);
  sw.lap("diagnostics");
  emit(ctx, "decay.txt", [&](std::ostream& os) { write_decay_table(rep, os); });
  Report& r = ctx.manifest.report;
  r.section("decay");
  r.add("q_bar", far.q_bar);
  r.add("stations", static_cast<int>(rep.stations.size()));
  r.add("noise_floor", rep.noise_floor);
  r.add("poincare_constant", lp);
  r.add("Lambda_eff", lam_eff);
  r.add("predicted_beta", rep.predicted_beta);
  auto fit = [&](const char* name, const std::optional<FitResult>& f) {
    r.section(name);
    r.add("available", f.has_value());
    if (!f) return;
    r.add("rate", f->rate);
    r.add("ci", f->ci);
    r.add("r_squared", f->r_squared);
    r.add("competing_r_squared", f->other_r_squared);
    r.add("model_mismatch", f->model_mismatch);
    r.add("stations_used", f->used);
  };
  fit("exponential_fit", rep.exponential);
  fit("algebraic_fit", rep.algebraic);
  write_field(ctx, s.field);
  sw.lap("output");
}

void run_optimality(Context& ctx, Stopwatch& sw) {
  const SolveResult s = solve_checked(ctx, ctx.cfg.m0);
  sw.lap("solve");
  report_solve(ctx, "solve", ctx.cfg.m0, s);
  const FarField far = far_state(ctx.geom, ctx.law, ctx.cfg.m0);
  const auto stations = integer_stations(ctx.mesh, ctx.cfg.decay_T_min, ctx.cfg.decay_T_max);
  const OptimalityReport rep =
      optimality_lower_bound(s.field, ctx.trunc, far, ctx.cfg.m0, stations, ctx.cfg.flux_tol * ctx.cfg.m0);
  sw.lap("diagnostics");
  bool bound_holds = true;
  for (const auto& st : rep.stations) bound_holds = bound_holds && st.lower_bound <= st.slab_sup;
  emit(ctx, "optimality.txt", [&](std::ostream& os) {
    os.precision(17);
    os << "# t area deficit flux_error lower_bound section_sup slab_sup\n";
    for (const auto& st : rep.stations)
      os << st.t << ' ' << st.area << ' ' << st.deficit << ' ' << st.flux_error << ' ' << st.lower_bound << ' '
         << st.section_sup << ' ' << st.slab_sup << '\n';
  });
  Report& r = ctx.manifest.report;
  r.section("optimality");
  r.add("q_bar", far.q_bar);
  r.add("stations", static_cast<int>(rep.stations.size()));
  r.add("lower_bound_holds", bound_holds);
  r.add("sup_exponent_available", rep.sup_fit.has_value());
  if (rep.sup_fit) {
    r.add("sup_exponent", rep.sup_fit->rate);
    r.add("sup_exponent_ci", rep.sup_fit->ci);
    r.add("sup_exponent_r_squared", rep.sup_fit->r_squared);
  }
  if (ctx.cfg.family == "algebraic") r.add("wall_exponent", ctx.cfg.decay_l);
  sw.lap("output");
}

// --- verify -----------------------------------------------------------------

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

PotentialField random_subsonic_field(const Context& ctx, double m0, std::mt19937_64& rng) {
  PotentialField f = initial_guess(ctx.mesh, ctx.law, m0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = (ctx.mesh.z_max() - ctx.mesh.z_min()) / ctx.mesh.N_z();
  for (double& v : f.phi) v += 0.1 * h * u(rng);
  for (int i : ctx.mesh.inflow_nodes()) f.phi[i] = 0.0;
  return f;
}

std::vector<double> random_direction(const Mesh& mesh, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> d(static_cast<std::size_t>(mesh.num_nodes()));
  for (double& v : d) v = u(rng);
  for (int i : mesh.inflow_nodes()) d[i] = 0.0;
  return d;
}

void run_verify(Context& ctx, Stopwatch& sw) {
  std::vector<Check> checks;
  std::ostringstream detail;
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
  };

  checks.push_back({"truncation_certified",
                    ctx.trunc.lambda() > 0.0 && ctx.trunc.lambda() <= ctx.trunc.Lambda() &&
                        ctx.trunc.Lambda() == ctx.trunc.H(0.0),
                    "lambda " + fmt(ctx.trunc.lambda()) + ", Lambda " + fmt(ctx.trunc.Lambda())});

  const QualityReport q = inspect_quality(ctx.mesh);
  checks.push_back({"mesh_jacobian_positive", q.offenders.empty() && q.min_jacobian > 0.0,
                    "min det J " + fmt(q.min_jacobian)});
  double wall_err = 0.0;
  for (const auto& f : ctx.mesh.boundary_faces()) {
    if (f.tag != BoundaryTag::wall) continue;
    for (int n : f.nodes) {
      const Vec3& x = ctx.mesh.nodes()[n];
      const double r = std::hypot(x[0], x[1]);
      wall_err = std::max(wall_err, std::abs(r - ctx.geom.wall_radius(std::atan2(x[1], x[0]), x[2])));
    }
  }
  checks.push_back({"wall_faces_on_wall", wall_err <= 1e-9, "max |r - f1| " + fmt(wall_err)});
  sw.lap("mesh_checks");

  const double m0 =
      ctx.cfg.m0 > 0.0 ? ctx.cfg.m0 : std::numbers::pi * ctx.geom.f_bar() * ctx.geom.f_bar() * ctx.law.momentum(0.3);
  std::mt19937_64 rng(ctx.cfg.seed);
  Assembler seq(ctx.mesh, ctx.trunc, 1);
  const PotentialField phi = random_subsonic_field(ctx, m0, rng);
  const CoefficientCache cache = seq.evaluate(phi);
  const std::vector<double> r0 = seq.residual(cache, m0);
  const CsrMatrix A = seq.hessian(cache);
  double grad_err = 0.0, hess_err = 0.0;
  const double h = 1e-5;
  for (int k = 0; k < 20; ++k) {
    const std::vector<double> d = random_direction(ctx.mesh, rng);
    PotentialField p = phi, m = phi;
    for (std::size_t i = 0; i < d.size(); ++i) {
      p.phi[i] += h * d[i];
      m.phi[i] -= h * d[i];
    }
    const double fd = (seq.energy(p, m0) - seq.energy(m, m0)) / (2.0 * h);
    const double an = dot(r0, d);
    grad_err = std::max(grad_err, std::abs(fd - an) / std::max(std::abs(an), 1e-300));
    const auto rp = seq.residual(p, m0), rm = seq.residual(m, m0);
    const auto Ad = A.multiply(d);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double e = (rp[i] - rm[i]) / (2.0 * h) - Ad[i];
      num += e * e;
      den += Ad[i] * Ad[i];
    }
    hess_err = std::max(hess_err, std::sqrt(num / den));
  }
  checks.push_back({"gradient_matches_energy", grad_err <= 1e-6, "max relative error " + fmt(grad_err)});
  checks.push_back({"hessian_matches_gradient", hess_err <= 1e-5, "max relative error " + fmt(hess_err)});

  Assembler par(ctx.mesh, ctx.trunc, std::max(2, default_thread_count()));
  const auto r_par = par.residual(par.evaluate(phi), m0);
  const CsrMatrix A_par = par.hessian(par.evaluate(phi));
  checks.push_back({"parallel_assembly_bit_identical", r_par == r0 && A_par.val == A.val,
                    "threads " + std::to_string(par.threads())});
  sw.lap("derivative_checks");

  const SolveResult s = solve(ctx.mesh, ctx.trunc, m0, ctx.solver);
  bool monotone = true;
  for (std::size_t i = 1; i < s.report.energy_history.size(); ++i)
    monotone = monotone && s.report.energy_history[i] <= s.report.energy_history[i - 1];
  checks.push_back({"solver_converged", s.report.converged,
                    "residual " + fmt(s.report.residual_norm) + " <= " + fmt(s.report.tolerance)});
  checks.push_back({"energy_monotone", monotone, std::to_string(s.report.iterations) + " Newton steps"});
  checks.push_back({"energy_below_zero_field", s.report.energy_history.back() <= 0.0,
                    "I_L " + fmt(s.report.energy_history.back())});
  checks.push_back({"subsonic", !s.report.truncation_active,
                    "Q^2 " + fmt(s.report.max_speed * s.report.max_speed) + " vs " + fmt(ctx.trunc.blend_begin())});
  report_solve(ctx, "solve", m0, s);
  const double flux_err = report_flux(ctx, s.field, m0);
  const bool exact_case = !ctx.geom.has_obstacle() && ctx.cfg.family == "straight";
  const double flux_tol = exact_case ? 1e-10 * std::max(1.0, m0) : ctx.cfg.flux_tol * m0;
  checks.push_back({"flux_conserved", flux_err <= flux_tol, "max |flux - m0| " + fmt(flux_err) + " <= " + fmt(flux_tol)});
  if (exact_case) {
    const FarField far = far_state(ctx.geom, ctx.law, m0);
    double dev = 0.0;
    for (int e = 0; e < ctx.mesh.num_elements(); ++e)
      for (int qp = 0; qp < ref::kNumQp; ++qp) {
        Vec3 g = s.field.gradient(e, qp);
        g[2] -= far.q_bar;
        dev = std::max(dev, norm(g));
      }
    checks.push_back({"uniform_flow_recovered", dev <= 1e-9, "max |grad phi - q_bar e3| " + fmt(dev)});
  }
  sw.lap("solve_checks");

  Report& r = ctx.manifest.report;
  r.section("verify");
  bool all = true;
  for (const auto& c : checks) {
    r.add(c.name, std::string(c.pass ? "PASS" : "FAIL") + " (" + c.detail + ")");
    all = all && c.pass;
  }
  r.add("all_passed", all);
  ctx.manifest.passed = all;
  write_field(ctx, s.field);
  sw.lap("output");
}

}  // namespace

RunManifest run(const RunConfig& cfg) {
  validate(cfg);
  RunManifest manifest;
  {
    std::ostringstream os;
    cfg.write(os);
    manifest.config_echo = os.str();
  }
  Stopwatch sw(manifest);
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create output directory " + cfg.output_dir.string());

  const DensityLaw law(GasModel{cfg.gamma});
  const TruncatedDensity trunc(law, cfg.epsilon);
  const NozzleGeometry geom = make_geometry(cfg);
  const Mesh mesh = build_mesh(geom, cfg.mesh);
  sw.lap("setup");

  SolverConfig solver = cfg.solver;
  solver.threads = cfg.threads > 0 ? cfg.threads : default_thread_count();
  Context ctx{cfg, law, trunc, geom, mesh, solver, manifest};
  report_setup(ctx);
  manifest.report.section("run");
  manifest.report.add("mode", to_string(cfg.mode));
  manifest.report.add("threads", solver.threads);

  switch (cfg.mode) {
    case RunMode::solve: run_solve(ctx, sw); break;
    case RunMode::sweep: run_sweep(ctx, sw); break;
    case RunMode::decay_study: run_decay(ctx, sw); break;
    case RunMode::optimality_study: run_optimality(ctx, sw); break;
    case RunMode::verify: run_verify(ctx, sw); break;
  }

  emit(ctx, "report.txt", [&](std::ostream& os) { manifest.report.write(os); });
  emit(ctx, "config.txt", [&](std::ostream& os) { os << manifest.config_echo; });

  // The manifest lists every other file; it cannot checksum itself.
  const auto path = cfg.output_dir / "manifest.txt";
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.precision(6);
  out << "[artifact]\nname = nozzleflow\nversion = " << manifest.version << "\n\n[config]\n" << manifest.config_echo
      << "\n[timings]\n";
  for (const auto& [stage, secs] : manifest.timings) out << stage << " = " << secs << '\n';
  out << "\n[files]\n";
  char crc[9];
  for (const auto& f : manifest.files) {
    std::snprintf(crc, sizeof crc, "%08x", f.crc32);
    out << f.name << " = " << f.bytes << " crc32:" << crc << '\n';
  }
  return manifest;
}

}  // namespace nozzle
