#ifndef KFBI_GRID_HPP
#define KFBI_GRID_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kfbi/types.hpp"

namespace kfbi {

// Uniform node-centered grid on the square [lo, hi]^2, N cells per side.
// Node (i, j) sits at lo + i*h in x and lo + j*h in y, i, j = 0..N.
struct Grid2D {
  Real lo = 0;
  Real hi = 1;
  int n = 0; // cells per side

  Real h() const { return (hi - lo) / n; }
  int nodes_per_side() const { return n + 1; }
  Vec2 node(int i, int j) const { return {lo + i * h(), lo + j * h()}; }
  bool on_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == n || j == n;
  }
  bool contains(const Vec2& x) const {
    return x[0] >= lo && x[0] <= hi && x[1] >= lo && x[1] <= hi;
  }
  // Node index nearest to x, clamped to the grid.
  void nearest_node(const Vec2& x, int& i, int& j) const {
    auto clamp = [this](Real t) {
      int k = static_cast<int>(std::lround((t - lo) / h()));
      return std::min(std::max(k, 0), n);
    };
    i = clamp(x[0]);
    j = clamp(x[1]);
  }
};

inline Grid2D build_grid(Real lo, Real hi, int n) {
  if (!(hi > lo)) throw std::invalid_argument("grid: requires hi > lo");
  if (n < 8) throw std::invalid_argument("grid: requires N >= 8");
  return Grid2D{lo, hi, n};
}

// Nodal scalar field over a grid, including the box boundary nodes.
struct GridField {
  Grid2D grid;
  GridArray v; // (N+1) x (N+1), indexed (i, j)

  GridField() = default;
  explicit GridField(const Grid2D& g)
      : grid(g), v(GridArray::Zero(g.n + 1, g.n + 1)) {}
  Real& operator()(int i, int j) { return v(i, j); }
  Real operator()(int i, int j) const { return v(i, j); }
};

} // namespace kfbi

#endif
