#ifndef KFBI_FAST_SOLVER_HPP
#define KFBI_FAST_SOLVER_HPP

#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "kfbi/grid.hpp"
#include "kfbi/types.hpp"

namespace kfbi {

// Compact 9-point discretization of (Laplace - kappa) u = F. With
//   F = f + (h^2/12)(lap f + kappa f)
//     + (h^4/360)(lap^2 f + kappa lap f + kappa^2 f + 2 f_xxyy)
// the truncation error at regular nodes is O(h^6): the edge/corner kappa
// terms reproduce the compact cross-derivative (h^4/180) u_xxyy that the
// expansion of lap^3 u demands, and the h^2/h^4 center terms cancel the
// kappa powers the substitution lap u = f + kappa u introduces. Weights
// carry their 1/h^2 factors.
struct CompactStencil {
  Real kappa = 0;
  Real h = 0;
  Real center = 0, edge = 0, corner = 0;

  static CompactStencil make(Real kappa, Real h) {
    const Real h2 = h * h;
    CompactStencil s;
    s.kappa = kappa;
    s.h = h;
    s.center = -10.0 / (3 * h2) -
               kappa * (1 + kappa * h2 / 12 + kappa * kappa * h2 * h2 / 360) -
               kappa / 45;
    s.edge = 2.0 / (3 * h2) + kappa / 90;
    s.corner = 1.0 / (6 * h2) - kappa / 180;
    return s;
  }
  Real weight(int di, int dj) const {
    int m = std::abs(di) + std::abs(dj);
    return m == 0 ? center : (m == 1 ? edge : corner);
  }
};

// Applies the stencil on interior nodes; the result's boundary ring is zero.
// Nodes adjacent to the boundary pick up whatever the field stores there, so
// inhomogeneous box data must be lifted into the right-hand side instead.
inline GridField apply_stencil(const GridField& u, const CompactStencil& s) {
  const int n = u.grid.n;
  const int m = n - 1;
  GridField out(u.grid);
  const auto& v = u.v;
  out.v.block(1, 1, m, m) =
      s.center * v.block(1, 1, m, m) +
      s.edge * (v.block(0, 1, m, m) + v.block(2, 1, m, m) +
                v.block(1, 0, m, m) + v.block(1, 2, m, m)) +
      s.corner * (v.block(0, 0, m, m) + v.block(2, 0, m, m) +
                  v.block(0, 2, m, m) + v.block(2, 2, m, m));
  return out;
}

// Diagonalizes the compact scheme in the 2D discrete sine basis and solves by
// forward transform, symbol division, inverse transform. The DST-I is packed
// into a length-2N complex FFT, O(N^2 log N) and bit-stable.
class SineSolver {
 public:
  SineSolver(const Grid2D& grid, Real kappa)
      : grid_(grid), kappa_(kappa), symbol_(grid.n - 1, grid.n - 1) {
    const int n = grid.n;
    const Real h = grid.h();
    const CompactStencil s = CompactStencil::make(kappa, h);
    for (int p = 1; p < n; ++p)
      for (int q = 1; q < n; ++q) {
        Real cp = std::cos(p * kPi / n), cq = std::cos(q * kPi / n);
        Real lam = s.center + 2 * s.edge * (cp + cq) + 4 * s.corner * cp * cq;
        if (!(lam < 0))
          throw std::runtime_error("SineSolver: non-negative symbol entry");
        symbol_(p - 1, q - 1) = lam;
      }
  }

  const Grid2D& grid() const { return grid_; }
  Real kappa() const { return kappa_; }
  long calls() const { return calls_; }

  // F holds the assembled right-hand side at interior nodes; the returned
  // field satisfies the scheme with zero box boundary values.
  GridField solve(const GridField& F) const {
    const int n = grid_.n;
    if (F.grid.n != n)
      throw std::invalid_argument("SineSolver: grid mismatch");
    ++calls_;
    const int m = n - 1;
    Matrix w = F.v.block(1, 1, m, m).matrix();
    dst2d(w);
    w.array() /= symbol_;
    dst2d(w);
    w *= Real(4) / (Real(n) * Real(n));
    GridField out(grid_);
    out.v.block(1, 1, m, m) = w.array();
    return out;
  }

 private:
  // In-place unnormalized DST-I along both dimensions:
  // X[p,q] = sum_{i,q'} sin(p pi i / N) X[i,j] sin(q pi j / N).
  void dst2d(Matrix& w) const {
    const int m = w.rows();
    Vector col(m);
    for (int c = 0; c < m; ++c) {
      dst1d(w.col(c), col);
      w.col(c) = col;
    }
    for (int r = 0; r < m; ++r) {
      dst1d(w.row(r).transpose(), col);
      w.row(r) = col.transpose();
    }
  }

  template <typename Expr>
  void dst1d(const Expr& x, Vector& out) const {
    const int m = static_cast<int>(x.size()); // = N - 1
    const int two_n = 2 * (m + 1);
    buf_in_.assign(two_n, {0, 0});
    for (int i = 0; i < m; ++i) {
      buf_in_[i + 1] = {x[i], 0};
      buf_in_[two_n - 1 - i] = {-x[i], 0};
    }
    fft_.fwd(buf_out_, buf_in_);
    for (int p = 0; p < m; ++p) out[p] = -0.5 * buf_out_[p + 1].imag();
  }

  Grid2D grid_;
  Real kappa_;
  GridArray symbol_;
  mutable Eigen::FFT<Real> fft_;
  mutable std::vector<std::complex<Real>> buf_in_, buf_out_;
  mutable long calls_ = 0;
};

// Moves known inhomogeneous box boundary values g into the right-hand side,
// so the sine solver's zero-boundary convention still applies.
inline void apply_boundary_lifting(GridField& F, const CompactStencil& s,
                                   const std::function<Real(const Vec2&)>& g) {
  const int n = F.grid.n;
  auto lift = [&](int i, int j) {
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        int ii = i + di, jj = j + dj;
        if (F.grid.on_boundary(ii, jj))
          F(i, j) -= s.weight(di, dj) * g(F.grid.node(ii, jj));
      }
  };
  for (int i = 1; i < n; ++i) {
    lift(i, 1);
    if (n > 2) lift(i, n - 1);
  }
  for (int j = 2; j < n - 1; ++j) {
    lift(1, j);
    lift(n - 1, j);
  }
}

inline void set_boundary(GridField& u, const std::function<Real(const Vec2&)>& g) {
  const int n = u.grid.n;
  for (int i = 0; i <= n; ++i) {
    u(i, 0) = g(u.grid.node(i, 0));
    u(i, n) = g(u.grid.node(i, n));
    u(0, i) = g(u.grid.node(0, i));
    u(n, i) = g(u.grid.node(n, i));
  }
}

} // namespace kfbi

#endif
