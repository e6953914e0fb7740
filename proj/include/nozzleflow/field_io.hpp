#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "nozzleflow/assembly.hpp"

namespace nozzle {

struct FieldRow {
  Vec3 x{};
  double phi = 0.0;
  Vec3 u{};
  double rho = 0.0;
};

// "# x y z phi u1 u2 u3 rho", one node per line, full double precision.  The
// velocity is the nodal average of element gradients and rho = H_eps(|u|^2).
void write_field_dump(const PotentialField& field, const TruncatedDensity& trunc, std::ostream& os);
std::vector<FieldRow> read_field_dump(std::istream& is);
std::vector<FieldRow> read_field_dump(const std::filesystem::path& path);

struct FieldDiff {
  int shared = 0;  // lattice points present in both files
  double phi_max = 0.0, phi_rms = 0.0;
  double grad_max = 0.0, grad_rms = 0.0;
};

// Compares two dumps on the points they share (coordinates equal to 1e-9),
// without interpolation, optionally only where z0 <= x3 <= z1.  Throws
// incompatible_meshes if none are shared.
FieldDiff diff_fields(const std::vector<FieldRow>& a, const std::vector<FieldRow>& b,
                      std::optional<std::pair<double, double>> window = std::nullopt);

}  // namespace nozzle
