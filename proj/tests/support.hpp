#pragma once

// Small fixtures shared by the unit tests.

#include <doctest.h>

#include <random>
#include <vector>

#include "nozzleflow/error.hpp"
#include "nozzleflow/geometry.hpp"
#include "nozzleflow/mesh.hpp"

namespace nozzle::test {

template <class F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io_error;
}

inline ObstacleProfile bump(double b, double L1 = -2.0, double L2 = 2.0) {
  ObstacleProfile o;
  o.L1 = L1;
  o.L2 = L2;
  o.b = b;
  return o;
}

inline MeshSpec spec(double L, int nr, int nt, int nz, double grading = 1.0) {
  MeshSpec s;
  s.L = L;
  s.N_r = nr;
  s.N_theta = nt;
  s.N_z = nz;
  s.grading = grading;
  return s;
}

// Uniform random vector in [-a, a], zero on the Dirichlet nodes.
inline std::vector<double> random_direction(const Mesh& mesh, std::mt19937_64& rng, double a = 1.0) {
  std::uniform_real_distribution<double> u(-a, a);
  std::vector<double> v(static_cast<std::size_t>(mesh.num_nodes()));
  for (int n = 0; n < mesh.num_nodes(); ++n) v[n] = mesh.dirichlet_mask()[n] ? 0.0 : u(rng);
  return v;
}

}  // namespace nozzle::test
