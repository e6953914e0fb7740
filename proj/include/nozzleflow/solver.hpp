#pragma once

#include <optional>
#include <vector>

#include "nozzleflow/assembly.hpp"
#include "nozzleflow/error.hpp"

namespace nozzle {

struct SolverConfig {
  double newton_tol = 1e-10;  // relative to ||m0 b||
  int max_newton = 50;
  double cg_tol = 1e-8;
  int cg_max = 0;  // 0 means 20 sqrt(dof)
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int threads = 1;

  void validate() const;
};

struct SolveReport {
  int iterations = 0;
  double residual_norm = 0.0;
  double tolerance = 0.0;  // absolute residual target
  std::vector<double> energy_history;
  std::vector<int> line_search_steps;  // backtracks per Newton step
  int cg_iterations = 0;
  double max_speed = 0.0;
  bool truncation_active = false;
  bool converged = false;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, SolveReport report)
      : Error(Errc::no_convergence, what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

struct SolveResult {
  PotentialField field;
  SolveReport report;
};

// Default initial guess q0 (x3 + L) with q0 the subsonic speed carrying m0
// through the mean cross-section.
PotentialField initial_guess(const Mesh& mesh, const DensityLaw& law, double m0);

SolveResult solve(const Mesh& mesh, const TruncatedDensity& trunc, double m0, const SolverConfig& config = {},
                  const PotentialField* initial = nullptr);

struct SweepEntry {
  double m0 = 0.0;
  double Q = 0.0;
  SolveReport report;
};

struct SweepResult {
  std::vector<SweepEntry> accepted;  // subsonic solves in ascending m0
  std::vector<SweepEntry> bisection;  // refinement solves of the critical bracket
  std::optional<SweepEntry> first_truncated;
  // [m_lo, m_hi]: m_lo subsonic, m_hi with the truncation active.
  std::optional<std::pair<double, double>> bracket;
  std::vector<PotentialField> fields;  // one per accepted entry
};

// Solves each flux in turn, warm-starting from the previous solution scaled
// by the flux ratio.  Stops at the first flux where the truncation becomes
// active and bisects the bracket down to relative width bracket_width.
SweepResult continuation_sweep(const Mesh& mesh, const TruncatedDensity& trunc, const std::vector<double>& m0_list,
                               const SolverConfig& config = {}, double bracket_width = 0.02,
                               bool keep_fields = false);

}  // namespace nozzle
