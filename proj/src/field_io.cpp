#include "nozzleflow/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "nozzleflow/error.hpp"

namespace nozzle {

void write_field_dump(const PotentialField& field, const TruncatedDensity& trunc, std::ostream& os) {
  os.precision(17);
  os << "# x y z phi u1 u2 u3 rho\n";
  const auto u = field.nodal_gradient();
  const auto& nodes = field.mesh->nodes();
  for (std::size_t n = 0; n < nodes.size(); ++n)
    os << nodes[n][0] << ' ' << nodes[n][1] << ' ' << nodes[n][2] << ' ' << field.phi[n] << ' ' << u[n][0] << ' '
       << u[n][1] << ' ' << u[n][2] << ' ' << trunc.H(norm_sq(u[n])) << '\n';
}

std::vector<FieldRow> read_field_dump(std::istream& is) {
  std::vector<FieldRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    FieldRow r;
    if (!(ls >> r.x[0] >> r.x[1] >> r.x[2] >> r.phi >> r.u[0] >> r.u[1] >> r.u[2] >> r.rho))
      throw Error(Errc::io_error, "field dump line " + std::to_string(lineno) + ": expected 8 columns");
    rows.push_back(r);
  }
  return rows;
}

std::vector<FieldRow> read_field_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open field dump " + path.string());
  return read_field_dump(in);
}

FieldDiff diff_fields(const std::vector<FieldRow>& a, const std::vector<FieldRow>& b,
                      std::optional<std::pair<double, double>> window) {
  using Key = std::tuple<long long, long long, long long>;
  auto key = [](const Vec3& x) {
    return Key{std::llround(x[0] * 1e9), std::llround(x[1] * 1e9), std::llround(x[2] * 1e9)};
  };
  std::map<Key, std::size_t> index;
  for (std::size_t i = 0; i < b.size(); ++i) index.emplace(key(b[i].x), i);
  FieldDiff d;
  double phi2 = 0.0, grad2 = 0.0;
  for (const auto& ra : a) {
    if (window && (ra.x[2] < window->first - 1e-9 || ra.x[2] > window->second + 1e-9)) continue;
    const auto it = index.find(key(ra.x));
    if (it == index.end()) continue;
    const FieldRow& rb = b[it->second];
    const double dp = std::abs(ra.phi - rb.phi);
    const double dg = norm(ra.u - rb.u);
    d.phi_max = std::max(d.phi_max, dp);
    d.grad_max = std::max(d.grad_max, dg);
    phi2 += dp * dp;
    grad2 += dg * dg;
    ++d.shared;
  }
  if (d.shared == 0) throw Error(Errc::incompatible_meshes, "the two field dumps share no lattice points");
  d.phi_rms = std::sqrt(phi2 / d.shared);
  d.grad_rms = std::sqrt(grad2 / d.shared);
  return d;
}

}  // namespace nozzle
