#ifndef KFBI_GMRES_HPP
#define KFBI_GMRES_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kfbi/types.hpp"

namespace kfbi {

struct GmresResult {
  int iterations = 0;
  Real residual = 0; // relative to ||rhs||
  bool converged = false;
  std::vector<Real> history; // relative residual after each iteration
};

// Unrestarted GMRES with modified Gram-Schmidt and one reorthogonalization
// pass, zero initial guess. apply must be a Vector -> Vector map.
template <typename MatVec>
GmresResult gmres(const MatVec& apply, const Vector& rhs, Vector& x,
                  Real tol = 1e-10, int max_iter = 200) {
  const Index n = rhs.size();
  x = Vector::Zero(n);
  GmresResult out;
  const Real beta = rhs.norm();
  if (beta == 0) {
    out.converged = true;
    return out;
  }
  if (max_iter > n) max_iter = static_cast<int>(n);

  Matrix V(n, max_iter + 1);
  Matrix H = Matrix::Zero(max_iter + 1, max_iter);
  Vector g = Vector::Zero(max_iter + 1);
  std::vector<Real> cs(max_iter), sn(max_iter);
  V.col(0) = rhs / beta;
  g[0] = beta;

  int j = 0;
  for (; j < max_iter; ++j) {
    Vector w = apply(Vector(V.col(j)));
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        Real hij = V.col(i).dot(w);
        w -= hij * V.col(i);
        H(i, j) += hij;
      }
    H(j + 1, j) = w.norm();
    bool breakdown = H(j + 1, j) < 1e-14 * beta;
    if (!breakdown) V.col(j + 1) = w / H(j + 1, j);

    for (int i = 0; i < j; ++i) {
      Real t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
      H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
      H(i, j) = t;
    }
    Real r = std::hypot(H(j, j), H(j + 1, j));
    cs[j] = H(j, j) / r;
    sn[j] = H(j + 1, j) / r;
    H(j, j) = r;
    H(j + 1, j) = 0;
    g[j + 1] = -sn[j] * g[j];
    g[j] *= cs[j];

    out.history.push_back(std::abs(g[j + 1]) / beta);
    if (out.history.back() <= tol || breakdown) {
      ++j;
      out.converged = true;
      break;
    }
  }

  out.iterations = j;
  if (j > 0) {
    Vector y = H.topLeftCorner(j, j)
                   .template triangularView<Eigen::Upper>()
                   .solve(g.head(j));
    x = V.leftCols(j) * y;
  }
  out.residual = j > 0 ? std::abs(g[j]) / beta : 1;
  out.converged = out.converged || out.residual <= tol;
  return out;
}

} // namespace kfbi

#endif
