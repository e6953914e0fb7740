#include "nozzleflow/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "nozzleflow/error.hpp"
#include "nozzleflow/format.hpp"

namespace nozzle {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(Errc::config_error, key + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) fail(key, "expected a number, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) fail(key, "expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(key, "expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.mode",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto m = parse_mode(v);
         if (!m) fail(k, "unknown mode '" + v + "'");
         c.mode = *m;
       }},
      {"run.seed", [](RunConfig& c, auto& k, auto& v) { c.seed = static_cast<unsigned>(to_int(k, v)); }},
      {"run.threads", [](RunConfig& c, auto& k, auto& v) { c.threads = to_int(k, v); }},
      {"gas.gamma", [](RunConfig& c, auto& k, auto& v) { c.gamma = to_double(k, v); }},
      {"geometry.family", [](RunConfig& c, auto&, auto& v) { c.family = v; }},
      {"geometry.f_bar", [](RunConfig& c, auto& k, auto& v) { c.f_bar = to_double(k, v); }},
      {"geometry.amplitude", [](RunConfig& c, auto& k, auto& v) { c.amplitude = to_double(k, v); }},
      {"geometry.decay_l", [](RunConfig& c, auto& k, auto& v) { c.decay_l = to_double(k, v); }},
      {"geometry.K", [](RunConfig& c, auto& k, auto& v) { c.K = to_double(k, v); }},
      {"geometry.profile_file", [](RunConfig& c, auto&, auto& v) { c.profile_file = v; }},
      {"obstacle.enabled", [](RunConfig& c, auto& k, auto& v) { c.obstacle = to_bool(k, v); }},
      {"obstacle.L1", [](RunConfig& c, auto& k, auto& v) { c.obstacle_profile.L1 = to_double(k, v); }},
      {"obstacle.L2", [](RunConfig& c, auto& k, auto& v) { c.obstacle_profile.L2 = to_double(k, v); }},
      {"obstacle.b", [](RunConfig& c, auto& k, auto& v) { c.obstacle_profile.b = to_double(k, v); }},
      {"obstacle.power", [](RunConfig& c, auto& k, auto& v) { c.obstacle_profile.power = to_double(k, v); }},
      {"mesh.L", [](RunConfig& c, auto& k, auto& v) { c.mesh.L = to_double(k, v); }},
      {"mesh.N_r", [](RunConfig& c, auto& k, auto& v) { c.mesh.N_r = to_int(k, v); }},
      {"mesh.N_theta", [](RunConfig& c, auto& k, auto& v) { c.mesh.N_theta = to_int(k, v); }},
      {"mesh.N_z", [](RunConfig& c, auto& k, auto& v) { c.mesh.N_z = to_int(k, v); }},
      {"mesh.grading", [](RunConfig& c, auto& k, auto& v) { c.mesh.grading = to_double(k, v); }},
      {"mesh.align_integer_stations",
       [](RunConfig& c, auto& k, auto& v) { c.mesh.align_integer_stations = to_bool(k, v); }},
      {"truncation.epsilon", [](RunConfig& c, auto& k, auto& v) { c.epsilon = to_double(k, v); }},
      {"flow.m0", [](RunConfig& c, auto& k, auto& v) { c.m0 = to_double(k, v); }},
      {"flow.m0_list", [](RunConfig& c, auto& k, auto& v) { c.m0_list = to_list(k, v); }},
      {"solver.newton_tol", [](RunConfig& c, auto& k, auto& v) { c.solver.newton_tol = to_double(k, v); }},
      {"solver.max_newton", [](RunConfig& c, auto& k, auto& v) { c.solver.max_newton = to_int(k, v); }},
      {"solver.cg_tol", [](RunConfig& c, auto& k, auto& v) { c.solver.cg_tol = to_double(k, v); }},
      {"solver.cg_max", [](RunConfig& c, auto& k, auto& v) { c.solver.cg_max = to_int(k, v); }},
      {"solver.armijo_c", [](RunConfig& c, auto& k, auto& v) { c.solver.armijo_c = to_double(k, v); }},
      {"solver.backtrack", [](RunConfig& c, auto& k, auto& v) { c.solver.backtrack = to_double(k, v); }},
      {"decay.T_min", [](RunConfig& c, auto& k, auto& v) { c.decay_T_min = to_double(k, v); }},
      {"decay.T_max", [](RunConfig& c, auto& k, auto& v) { c.decay_T_max = to_double(k, v); }},
      {"decay.flux_tol", [](RunConfig& c, auto& k, auto& v) { c.flux_tol = to_double(k, v); }},
      {"output.dir", [](RunConfig& c, auto&, auto& v) { c.output_dir = v; }},
      {"output.vtk", [](RunConfig& c, auto& k, auto& v) { c.vtk = to_bool(k, v); }},
  };
  return table;
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::solve: return "solve";
    case RunMode::sweep: return "sweep";
    case RunMode::decay_study: return "decay-study";
    case RunMode::optimality_study: return "optimality-study";
    case RunMode::verify: return "verify";
  }
  return "?";
}

std::optional<RunMode> parse_mode(const std::string& name) {
  for (RunMode m : {RunMode::solve, RunMode::sweep, RunMode::decay_study, RunMode::optimality_study, RunMode::verify})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

void validate(const RunConfig& c) {
  if (!(c.gamma > 1.0)) fail("gas.gamma", "must be > 1");
  if (c.family != "straight" && c.family != "algebraic" && c.family != "table")
    fail("geometry.family", "must be straight, algebraic or table");
  if (c.family == "table" && c.profile_file.empty()) fail("geometry.profile_file", "required for family = table");
  if (!(c.f_bar > 0.0)) fail("geometry.f_bar", "must be > 0");
  if (!(c.decay_l > 0.0)) fail("geometry.decay_l", "must be > 0");
  if (!(c.K > 0.0)) fail("geometry.K", "must be > 0");
  if (c.obstacle) {
    if (!(c.obstacle_profile.L1 < c.obstacle_profile.L2)) fail("obstacle.L2", "must exceed obstacle.L1");
    if (!(c.obstacle_profile.b > 0.0)) fail("obstacle.b", "must be > 0");
    if (!(c.obstacle_profile.power >= 1.0)) fail("obstacle.power", "must be >= 1");
  }
  if (!(c.mesh.L > 0.0)) fail("mesh.L", "must be > 0");
  if (c.mesh.N_r < 4) fail("mesh.N_r", "must be >= 4");
  if (c.mesh.N_theta < 4) fail("mesh.N_theta", "must be >= 4");
  if (c.mesh.N_z < 8) fail("mesh.N_z", "must be >= 8");
  if (!(c.mesh.grading >= 1.0)) fail("mesh.grading", "must be >= 1");
  if (!(c.epsilon > 0.0 && c.epsilon < 0.25)) fail("truncation.epsilon", "must lie in (0, 1/4)");
  if (!(c.m0 >= 0.0)) fail("flow.m0", "must be >= 0");
  for (std::size_t i = 0; i < c.m0_list.size(); ++i) {
    if (!(c.m0_list[i] >= 0.0)) fail("flow.m0_list", "entries must be >= 0");
    if (i > 0 && !(c.m0_list[i] > c.m0_list[i - 1])) fail("flow.m0_list", "must be strictly ascending");
  }
  if (!(c.solver.newton_tol > 0.0)) fail("solver.newton_tol", "must be > 0");
  if (c.solver.max_newton < 1) fail("solver.max_newton", "must be >= 1");
  if (!(c.solver.cg_tol > 0.0)) fail("solver.cg_tol", "must be > 0");
  if (c.solver.cg_max < 0) fail("solver.cg_max", "must be >= 0");
  if (!(c.solver.armijo_c > 0.0 && c.solver.armijo_c < 1.0)) fail("solver.armijo_c", "must lie in (0, 1)");
  if (!(c.solver.backtrack > 0.0 && c.solver.backtrack < 1.0)) fail("solver.backtrack", "must lie in (0, 1)");
  if (c.mode == RunMode::decay_study || c.mode == RunMode::optimality_study) {
    if (!(c.decay_T_min < c.decay_T_max)) fail("decay.T_max", "must exceed decay.T_min");
    if (!(c.decay_T_min > -c.mesh.L)) fail("decay.T_min", "station lies outside [-L, L]");
    if (!(c.decay_T_max + 1.0 <= c.mesh.L)) fail("decay.T_max", "slab [T_max, T_max + 1] leaves [-L, L]");
  }
  if (!(c.flux_tol > 0.0)) fail("decay.flux_tol", "must be > 0");
  if (c.threads < 0) fail("run.threads", "must be >= 0");
}

RunConfig parse_config(std::istream& is, const std::string& source) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::config_error, source + ":" + std::to_string(lineno) + ": expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) fail(key, "unknown key");
    it->second(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config_error, "cannot open config file " + path.string());
  return parse_config(in, path.string());
}

void RunConfig::write(std::ostream& os) const {
  os << "run.mode = " << to_string(mode) << '\n'
     << "run.seed = " << seed << '\n'
     << "run.threads = " << threads << '\n'
     << "gas.gamma = " << format_double(gamma) << '\n'
     << "geometry.family = " << family << '\n'
     << "geometry.f_bar = " << format_double(f_bar) << '\n'
     << "geometry.amplitude = " << format_double(amplitude) << '\n'
     << "geometry.decay_l = " << format_double(decay_l) << '\n'
     << "geometry.K = " << format_double(K) << '\n';
  if (!profile_file.empty()) os << "geometry.profile_file = " << profile_file << '\n';
  os << "obstacle.enabled = " << (obstacle ? "true" : "false") << '\n'
     << "obstacle.L1 = " << format_double(obstacle_profile.L1) << '\n'
     << "obstacle.L2 = " << format_double(obstacle_profile.L2) << '\n'
     << "obstacle.b = " << format_double(obstacle_profile.b) << '\n'
     << "obstacle.power = " << format_double(obstacle_profile.power) << '\n'
     << "mesh.L = " << format_double(mesh.L) << '\n'
     << "mesh.N_r = " << mesh.N_r << '\n'
     << "mesh.N_theta = " << mesh.N_theta << '\n'
     << "mesh.N_z = " << mesh.N_z << '\n'
     << "mesh.grading = " << format_double(mesh.grading) << '\n'
     << "mesh.align_integer_stations = " << (mesh.align_integer_stations ? "true" : "false") << '\n'
     << "truncation.epsilon = " << format_double(epsilon) << '\n'
     << "flow.m0 = " << format_double(m0) << '\n';
  if (!m0_list.empty()) {
    os << "flow.m0_list = ";
    for (std::size_t i = 0; i < m0_list.size(); ++i) os << (i ? ", " : "") << format_double(m0_list[i]);
    os << '\n';
  }
  os << "solver.newton_tol = " << format_double(solver.newton_tol) << '\n'
     << "solver.max_newton = " << solver.max_newton << '\n'
     << "solver.cg_tol = " << format_double(solver.cg_tol) << '\n'
     << "solver.cg_max = " << solver.cg_max << '\n'
     << "solver.armijo_c = " << format_double(solver.armijo_c) << '\n'
     << "solver.backtrack = " << format_double(solver.backtrack) << '\n'
     << "decay.T_min = " << format_double(decay_T_min) << '\n'
     << "decay.T_max = " << format_double(decay_T_max) << '\n'
     << "decay.flux_tol = " << format_double(flux_tol) << '\n'
     << "output.dir = " << output_dir.string() << '\n'
     << "output.vtk = " << (vtk ? "true" : "false") << '\n';
}

NozzleGeometry make_geometry(const RunConfig& c) {
  try {
    if (c.family == "table") {
      LoadedProfiles p = load_profile_table(c.profile_file);
      std::optional<ObstacleProfile> ob = p.obstacle;
      if (c.obstacle && !ob) ob = c.obstacle_profile;
      return NozzleGeometry(std::move(p.wall), ob);
    }
    NozzleProfile wall = c.family == "algebraic" ? NozzleProfile::algebraic(c.f_bar, c.amplitude, c.decay_l, c.K)
                                                 : NozzleProfile::straight(c.f_bar, c.K);
    std::optional<ObstacleProfile> ob;
    if (c.obstacle) ob = c.obstacle_profile;
    return NozzleGeometry(std::move(wall), ob);
  } catch (const Error& e) {
    if (e.code() == Errc::io_error || e.code() == Errc::invalid_argument)
      throw Error(Errc::config_error, std::string(c.family == "table" ? "geometry.profile_file" : "geometry") +
                                          ": " + e.what());
    throw;
  }
}

}  // namespace nozzle
