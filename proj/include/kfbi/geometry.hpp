#ifndef KFBI_GEOMETRY_HPP
#define KFBI_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kfbi/grid.hpp"
#include "kfbi/level_set.hpp"
#include "kfbi/types.hpp"

namespace kfbi {

// Nodes with H below this are counted as interior ("on-interface" ties go to
// the interior side). Built-in level sets are O(1)-normalized near Gamma.
inline constexpr Real kNodeInsideTol = 1e-14;

// Default overlap half-angle for surface-point neighbor candidacy.
inline constexpr Real kDefaultAlpha = kPi / 3;

// Root of H along the segment, returned as t with x(t) = t*x1 + (1-t)*x2.
// Bisection narrows the bracket to width 1e-3, then Newton polishes; on a
// Newton stall the bracket is bisected to machine width.
inline Real find_intersection(const LevelSet& ls, const Vec2& x1,
                              const Vec2& x2) {
  auto x_of = [&](Real t) -> Vec2 { return t * x1 + (1 - t) * x2; };
  Real f1 = ls.value(x1), f2 = ls.value(x2);
  const Real scale = std::max({std::abs(f1), std::abs(f2), Real(1)});
  const Real tol = 1e-12 * scale;
  if (std::abs(f1) <= tol) return 1;
  if (std::abs(f2) <= tol) return 0;
  if (f1 * f2 > 0)
    throw std::invalid_argument("find_intersection: endpoints do not bracket");
  Real a = 0, b = 1; // g(a) = f2 at t=0, g(b) = f1 at t=1
  Real ga = f2;
  auto bisect_to = [&](Real width) {
    while (b - a > width) {
      Real m = 0.5 * (a + b);
      Real gm = ls.value(x_of(m));
      if (std::abs(gm) <= tol) {
        a = b = m;
        return;
      }
      if (ga * gm < 0) {
        b = m;
      } else {
        a = m;
        ga = gm;
      }
    }
  };
  bisect_to(1e-3);
  Real t = 0.5 * (a + b);
  Vec2 dir = x1 - x2;
  for (int it = 0; it < 20; ++it) {
    Real g = ls.value(x_of(t));
    if (std::abs(g) <= tol) return t;
    Real dg = ls.gradient(x_of(t)).dot(dir);
    if (dg == 0) break;
    Real tn = t - g / dg;
    if (!(tn > a && tn < b)) break; // left the bracket: stall
    t = tn;
  }
  if (std::abs(ls.value(x_of(t))) <= tol) return t;
  bisect_to(4 * std::numeric_limits<Real>::epsilon());
  t = 0.5 * (a + b);
  if (std::abs(ls.value(x_of(t))) > tol)
    throw std::runtime_error("find_intersection: degenerate (tangential) crossing");
  return t;
}

// All crossings of H = 0 on the segment, each as t in x(t) = t*x1 + (1-t)*x2,
// sorted ascending. Detected by sign testing on four subintervals, so at most
// two crossings per segment are supported; more signals unresolved geometry.
inline std::vector<Real> find_crossings(const LevelSet& ls, const Vec2& x1,
                                        const Vec2& x2) {
  auto x_of = [&](Real t) -> Vec2 { return t * x1 + (1 - t) * x2; };
  auto sgn = [](Real v) { return v < kNodeInsideTol ? -1 : 1; };
  Real ts[5] = {0, 0.25, 0.5, 0.75, 1.0};
  int s[5];
  for (int k = 0; k < 5; ++k) s[k] = sgn(ls.value(x_of(ts[k])));
  std::vector<Real> out;
  for (int k = 0; k < 4; ++k) {
    if (s[k] != s[k + 1])
      out.push_back(ts[k] + (ts[k + 1] - ts[k]) *
                                find_intersection(ls, x_of(ts[k + 1]), x_of(ts[k])));
  }
  if (out.size() > 2)
    throw std::runtime_error("find_crossings: more than two crossings on one segment");
  return out;
}

// One discrete point of Gamma^h: a grid-line crossing that its normal's
// dominant axis claims. axis = 0 for points found on x-aligned lines.
struct SurfacePoint {
  Vec2 p;
  Vec2 n;   // unit outward normal (interior has H < 0)
  int comp; // component id, 1-based to match node region ids
  int axis;
  int line; // host grid line index (j for axis 0, i for axis 1)
};

class SurfaceMesh {
 public:
  Grid2D grid;
  Real alpha = 0; // overlap half-angle for neighbor candidacy
  std::vector<SurfacePoint> pts;
  std::vector<std::vector<int>> by_comp; // indices per component, 1-based slot

  int size() const { return static_cast<int>(pts.size()); }

  int nearest_point(const Vec2& x) const {
    int best = -1;
    Real bd = std::numeric_limits<Real>::max();
    for (int k = 0; k < size(); ++k) {
      Real d = (pts[k].p - x).squaredNorm();
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    return best;
  }

  int nearest_point_of_component(const Vec2& x, int comp) const {
    int best = -1;
    Real bd = std::numeric_limits<Real>::max();
    for (int k : by_comp.at(comp)) {
      Real d = (pts[k].p - x).squaredNorm();
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    return best;
  }

  // Sorted neighbor candidates per (component, axis): every mesh point whose
  // normal keeps |n_r| > cos(alpha), ordered by the reference coordinate
  // (the axis orthogonal to r). The overlap margin past the dominance
  // boundary is what keeps windows one-component and local.
  const std::vector<int>& candidates(int comp, int axis) const {
    return cand_.at(comp)[axis];
  }

  void build_candidates(int ncomp) {
    cand_.assign(ncomp + 1, {});
    const Real c = std::cos(alpha);
    for (int comp = 1; comp <= ncomp; ++comp) {
      for (int r = 0; r < 2; ++r) {
        auto& list = cand_[comp][r];
        for (int k : by_comp[comp])
          if (std::abs(pts[k].n[r]) > c) list.push_back(k);
        int ortho = 1 - r;
        std::sort(list.begin(), list.end(), [&](int a, int b) {
          if (pts[a].p[ortho] != pts[b].p[ortho])
            return pts[a].p[ortho] < pts[b].p[ortho];
          return a < b;
        });
      }
    }
  }

 private:
  std::vector<std::array<std::vector<int>, 2>> cand_;
};

// Collects Gamma^h: per component, crossings with x-aligned and y-aligned
// grid lines; a crossing on an e_r-aligned line becomes a DOF iff r is the
// dominant axis of its unit normal. alpha (default pi/3) widens neighbor
// candidacy only; it does not change the DOF set.
inline SurfaceMesh build_surface_mesh(const Grid2D& grid,
                                      const std::vector<LevelSet>& components,
                                      Real alpha = kDefaultAlpha) {
  if (!(alpha > kPi / 4 && alpha < kPi / 2))
    throw std::invalid_argument("build_surface_mesh: alpha outside (pi/4, pi/2)");
  SurfaceMesh mesh;
  mesh.grid = grid;
  mesh.alpha = alpha;
  mesh.by_comp.assign(components.size() + 1, {});
  const int n = grid.n;
  for (int ci = 0; ci < static_cast<int>(components.size()); ++ci) {
    const LevelSet& ls = components[ci];
    std::size_t before = mesh.pts.size();
    for (int axis = 0; axis < 2; ++axis) {
      int ortho = 1 - axis;
      for (int line = 0; line <= n; ++line) {
        for (int seg = 0; seg < n; ++seg) {
          int i0 = axis == 0 ? seg : line;
          int j0 = axis == 0 ? line : seg;
          Vec2 a = grid.node(i0, j0);
          Vec2 b = axis == 0 ? grid.node(i0 + 1, j0) : grid.node(i0, j0 + 1);
          // t parameterizes from b toward a; collect ascending along +axis.
          auto ts = find_crossings(ls, b, a);
          for (Real t : ts) {
            Vec2 q = t * b + (1 - t) * a;
            Vec2 nq = ls.unit_normal(q);
            if (std::abs(nq[axis]) < std::abs(nq[ortho])) continue;
            mesh.pts.push_back({q, nq, ci + 1, axis, line});
            mesh.by_comp[ci + 1].push_back(static_cast<int>(mesh.pts.size()) - 1);
          }
        }
      }
    }
    if (mesh.pts.size() == before)
      throw std::runtime_error("build_surface_mesh: component '" + ls.name() +
                               "' yields no grid-line crossings (unresolved geometry)");
  }
  mesh.build_candidates(static_cast<int>(components.size()));
  return mesh;
}

// The k candidates of p's component nearest to p along p's dominant axis,
// ordered by the reference coordinate, p included. Candidates outside a
// physical radius (3h, widened stepwise to 6h) are excluded so that windows
// never jump to a different arc of the same component.
inline std::vector<int> local_parameterization(const SurfaceMesh& mesh, int i,
                                               int k) {
  const SurfacePoint& sp = mesh.pts[i];
  const int r = std::abs(sp.n[0]) >= std::abs(sp.n[1]) ? 0 : 1;
  const int ortho = 1 - r;
  const Real h = mesh.grid.h();
  const auto& cand = mesh.candidates(sp.comp, r);
  std::vector<int> sel;
  for (Real radius = 3 * h; radius <= 6 * h + 1e-15; radius += h) {
    sel.clear();
    for (int q : cand)
      if ((mesh.pts[q].p - sp.p).norm() <= radius) sel.push_back(q);
    if (static_cast<int>(sel.size()) >= k) break;
  }
  if (static_cast<int>(sel.size()) < k) {
    // Re-entrant valleys: the host family runs out on one side of p inside
    // the cap while the curve turns across the other grid-line family. Fill
    // the window from that family, skipping spatial near-duplicates.
    for (int q : mesh.candidates(sp.comp, 1 - r)) {
      if ((mesh.pts[q].p - sp.p).norm() > 6 * h) continue;
      bool dup = false;
      for (int s : sel)
        if (q == s || (mesh.pts[q].p - mesh.pts[s].p).norm() < 0.3 * h)
          dup = true;
      if (!dup) sel.push_back(q);
    }
    std::sort(sel.begin(), sel.end(), [&](int a, int b) {
      if (mesh.pts[a].p[ortho] != mesh.pts[b].p[ortho])
        return mesh.pts[a].p[ortho] < mesh.pts[b].p[ortho];
      return a < b;
    });
  }
  if (static_cast<int>(sel.size()) < k)
    throw std::runtime_error("local_parameterization: insufficient surface neighbors");
  auto it = std::find(sel.begin(), sel.end(), i);
  if (it == sel.end())
    throw std::logic_error("local_parameterization: query point not a candidate");
  int ipos = static_cast<int>(it - sel.begin());
  int nsel = static_cast<int>(sel.size());
  const Real up = sp.p[ortho];
  int best = -1;
  Real best_cost = std::numeric_limits<Real>::max();
  for (int s0 = std::max(0, ipos - k + 1); s0 <= std::min(ipos, nsel - k); ++s0) {
    Real cost = 0;
    for (int j = s0; j < s0 + k; ++j)
      cost = std::max(cost, std::abs(mesh.pts[sel[j]].p[ortho] - up));
    if (cost < best_cost - 1e-15) {
      best_cost = cost;
      best = s0;
    }
  }
  return std::vector<int>(sel.begin() + best, sel.begin() + best + k);
}

} // namespace kfbi

#endif
