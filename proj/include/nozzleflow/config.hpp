#pragma once

// Run configuration: plain text, one `section.key = value` per line, '#'
// starts a comment.  Every key has a default; unknown keys are rejected.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nozzleflow/mesh.hpp"
#include "nozzleflow/solver.hpp"

namespace nozzle {

enum class RunMode { solve, sweep, decay_study, optimality_study, verify };
std::string to_string(RunMode mode);
std::optional<RunMode> parse_mode(const std::string& name);

struct RunConfig {
  RunMode mode = RunMode::solve;

  double gamma = 1.4;

  std::string family = "straight";  // straight | algebraic | table
  double f_bar = 1.0;
  double amplitude = 0.2;
  double decay_l = 1.0;
  double K = 4.0;
  std::string profile_file;  // family = table

  bool obstacle = false;
  ObstacleProfile obstacle_profile;

  MeshSpec mesh;
  double epsilon = 0.1;

  double m0 = 0.0;
  std::vector<double> m0_list;  // sweep; defaults to a ladder up to 0.99 pi f_bar^2

  SolverConfig solver;

  double decay_T_min = 4.0;
  double decay_T_max = 10.0;
  double flux_tol = 1e-2;  // relative to m0, for the flux-identity check

  std::filesystem::path output_dir = "out";
  bool vtk = false;

  unsigned seed = 12345;
  int threads = 0;  // 0: hardware concurrency

  // Echo as `section.key = value` lines, parseable by parse_config.
  void write(std::ostream& os) const;
};

// Throws config_error naming the offending key (or line) on any problem.
RunConfig parse_config(std::istream& is, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
// Cross-field checks; parse_config already calls this.
void validate(const RunConfig& cfg);

NozzleGeometry make_geometry(const RunConfig& cfg);

}  // namespace nozzle
