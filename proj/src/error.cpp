#include "nozzleflow/error.hpp"

namespace nozzle {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::negative_input: return "NegativeInput";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::supersonic: return "Supersonic";
    case Errc::ellipticity_violation: return "EllipticityViolation";
    case Errc::inadmissible: return "Inadmissible";
    case Errc::pinched_domain: return "PinchedDomain";
    case Errc::degenerate_jacobian: return "DegenerateJacobian";
    case Errc::station_out_of_range: return "StationOutOfRange";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::linear_solve_failure: return "LinearSolveFailure";
    case Errc::breakdown: return "Breakdown";
    case Errc::noise_floor: return "NoiseFloor";
    case Errc::inconsistent_flux: return "InconsistentFlux";
    case Errc::incompatible_meshes: return "IncompatibleMeshes";
    case Errc::config_error: return "ConfigError";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace nozzle
