#pragma once

#include <span>
#include <vector>

namespace nozzle {

// Square sparse matrix in compressed-row layout with sorted column indices.
struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  // Pattern from per-row sorted, unique column lists; values zeroed.
  static CsrMatrix from_pattern(const std::vector<std::vector<int>>& rows);

  int nnz() const { return static_cast<int>(col.size()); }
  // Position of (i, j) in val, or -1 when outside the pattern.
  int find(int i, int j) const;
  double at(int i, int j) const;
  std::vector<double> diagonal() const;

  void multiply(std::span<const double> x, std::span<double> y, int threads = 1) const;
  std::vector<double> multiply(std::span<const double> x, int threads = 1) const;
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

// Jacobi-preconditioned conjugate gradients from x = 0.  Stops when
// ||b - Ax|| <= tol ||b|| or after max_iter iterations.  Throws breakdown on a
// direction with non-positive curvature.
CgResult cg_solve(const CsrMatrix& A, std::span<const double> b, double tol, int max_iter, int threads = 1);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace nozzle
