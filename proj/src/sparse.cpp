#include "nozzleflow/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nozzleflow/error.hpp"
#include "nozzleflow/parallel.hpp"

namespace nozzle {

CsrMatrix CsrMatrix::from_pattern(const std::vector<std::vector<int>>& rows) {
  CsrMatrix A;
  A.n = static_cast<int>(rows.size());
  A.row_ptr.assign(rows.size() + 1, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) A.row_ptr[i + 1] = A.row_ptr[i] + static_cast<int>(rows[i].size());
  A.col.reserve(static_cast<std::size_t>(A.row_ptr.back()));
  for (const auto& r : rows) A.col.insert(A.col.end(), r.begin(), r.end());
  A.val.assign(A.col.size(), 0.0);
  return A;
}

int CsrMatrix::find(int i, int j) const {
  const auto b = col.begin() + row_ptr[i], e = col.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(b, e, j);
  return it != e && *it == j ? static_cast<int>(it - col.begin()) : -1;
}

double CsrMatrix::at(int i, int j) const {
  const int k = find(i, j);
  return k < 0 ? 0.0 : val[k];
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) d[i] = at(i, i);
  return d;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y, int threads) const {
  parallel_chunks(n, threads, [&](int b, int e) {
    for (int i = b; i < e; ++i) {
      double s = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
      y[i] = s;
    }
  });
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x, int threads) const {
  std::vector<double> y(static_cast<std::size_t>(n));
  multiply(x, y, threads);
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

CgResult cg_solve(const CsrMatrix& A, std::span<const double> b, double tol, int max_iter, int threads) {
  const std::size_t n = static_cast<std::size_t>(A.n);
  CgResult res;
  res.x.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  std::vector<double> inv_diag = A.diagonal();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(inv_diag[i] > 0.0)) {
      std::ostringstream os;
      os << "non-positive diagonal entry " << inv_diag[i] << " in row " << i;
      throw Error(Errc::breakdown, os.str());
    }
    inv_diag[i] = 1.0 / inv_diag[i];
  }
  std::vector<double> r(b.begin(), b.end()), z(n), p(n), Ap(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  double rnorm = bnorm;
  int it = 0;
  while (rnorm > tol * bnorm && it < max_iter) {
    A.multiply(p, Ap, threads);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) {
      std::ostringstream os;
      os << "non-positive curvature p'Ap = " << pAp << " at iteration " << it;
      throw Error(Errc::breakdown, os.str());
    }
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    ++it;
    rnorm = norm2(r);
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  res.iterations = it;
  res.relative_residual = rnorm / bnorm;
  res.converged = rnorm <= tol * bnorm;
  return res;
}

}  // namespace nozzle
