#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nozzle {

enum class Errc {
  invalid_argument,
  negative_input,
  out_of_range,
  supersonic,
  ellipticity_violation,
  inadmissible,
  pinched_domain,
  degenerate_jacobian,
  station_out_of_range,
  no_convergence,
  linear_solve_failure,
  breakdown,
  noise_floor,
  inconsistent_flux,
  incompatible_meshes,
  config_error,
  io_error,
};

std::string_view to_string(Errc code);

// Every failure raised by the library carries one of the codes above so that
// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace nozzle
