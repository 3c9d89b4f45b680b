#ifndef KFBI_INTERFACE_SOLVER_HPP
#define KFBI_INTERFACE_SOLVER_HPP

#include <array>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kfbi/classification.hpp"
#include "kfbi/correction.hpp"
#include "kfbi/fast_solver.hpp"
#include "kfbi/geometry.hpp"
#include "kfbi/types.hpp"

namespace kfbi {

enum class Side { interior, exterior };

// One-sided boundary traces by corrected least squares: around each surface
// point the grid values in a small disc are fit with a quintic basis after
// moving every node value onto the requested side's smooth branch,
//   d_q = u_q + C_s(x_q) - C_{r(q)}(x_q).
//
// A node across the interface joins the fit only when every branch read it
// needs stays within kTrustRadius grid spacings of its surface point.
// Farther out the quartic extrapolation of C amplifies rough densities by
// |x/h|^4; with those reads present the discrete integral operators lose the
// spectral clustering of their continuous counterparts and GMRES stalls.
// Same-side nodes carry no such reads, so the search disc simply grows until
// the remaining rows determine the basis. Where two interfaces nearly touch,
// one side of the fit can be a flat sliver that no disc size fixes; only
// then is the trust limit stepped up until the basis is determined, which
// buys rank at those few points for a modest iteration cost.
//
// The fit degree exceeds the correction degree on purpose: the quintic costs
// nothing extra at solve time and removes the fit bias from the traces, so
// the trace error is set by the corrections near the curve, not by the
// extrapolation reach of the disc.
//
// The value and normal-derivative functionals at the surface point are
// precomputed, so extraction is a dot product per point plus the interned
// correction terms. Geometry-only: one extractor serves every operator.
inline constexpr Real kTrustRadius = 1.0;

namespace fitbasis {

inline constexpr int kSize = 21;
inline constexpr std::array<std::pair<int, int>, kSize> kExps = {{
    {0, 0},
    {1, 0}, {0, 1},
    {2, 0}, {1, 1}, {0, 2},
    {3, 0}, {2, 1}, {1, 2}, {0, 3},
    {4, 0}, {3, 1}, {2, 2}, {1, 3}, {0, 4},
    {5, 0}, {4, 1}, {3, 2}, {2, 3}, {1, 4}, {0, 5},
}};

using Row = Eigen::Matrix<Real, 1, kSize>;
using Coef = Eigen::Matrix<Real, kSize, 1>;

inline Row value_row(const Vec2& z) {
  std::array<Real, 6> px, py;
  px[0] = py[0] = 1;
  for (int d = 1; d < 6; ++d) {
    px[d] = px[d - 1] * z[0];
    py[d] = py[d - 1] * z[1];
  }
  Row r;
  for (int k = 0; k < kSize; ++k)
    r[k] = px[kExps[k].first] * py[kExps[k].second];
  return r;
}

} // namespace fitbasis

class TraceExtractor {
 public:
  TraceExtractor(const NodeClassification& cls, const SurfaceMesh& mesh)
      : mesh_(&mesh), evals_(mesh) {
    const Grid2D& g = mesh.grid;
    const Real h = g.h();
    const int nb = mesh.size();
    pts_.resize(nb);
    for (int i = 0; i < nb; ++i) {
      const SurfacePoint& sp = mesh.pts[i];
      int gi, gj;
      g.nearest_node(sp.p, gi, gj);
      for (int sideidx = 0; sideidx < 2; ++sideidx) {
        const int want = sideidx == 0 ? sp.comp : 0;
        SidePlan& pl = pts_[i].side[sideidx];
        bool ok = false;
        for (Real trust : {kTrustRadius, 1.6, 2.4, 3.4}) {
          for (Real rad = 4.0; rad < 8.0 && !ok; rad += 1.0)
            ok = build_side_plan(cls, g, h, sp, gi, gj, want, trust, rad, pl);
          if (ok) break;
        }
        if (!ok)
          throw std::runtime_error(
              "TraceExtractor: degenerate extraction stencil");
      }
    }
  }

  const SurfaceMesh& mesh() const { return *mesh_; }

  // Batch evaluation: correction records once, then a dot per point.
  void traces(const GridField& u, const Matrix& coefs, Side s, Vector* value,
              Vector* normal) const {
    Vector cvals;
    evals_.evaluate(coefs, cvals);
    const int nb = mesh_->size();
    if (value) value->resize(nb);
    if (normal) normal->resize(nb);
    Vector d;
    for (int i = 0; i < nb; ++i) {
      const SidePlan& pl = pts_[i].side[s == Side::interior ? 0 : 1];
      d.resize(pl.nodes.size());
      for (std::size_t r = 0; r < pl.nodes.size(); ++r)
        d[r] = u(pl.nodes[r].first, pl.nodes[r].second);
      for (const SideTerm& t : pl.terms) d[t.pos] += t.sign * cvals[t.rec];
      if (value) (*value)[i] = pl.w_val.dot(d);
      if (normal) (*normal)[i] = pl.w_nd.dot(d);
    }
  }

  Vector value(const GridField& u, const Matrix& coefs, Side s) const {
    Vector v;
    traces(u, coefs, s, &v, nullptr);
    return v;
  }
  Vector normal_derivative(const GridField& u, const Matrix& coefs,
                           Side s) const {
    Vector v;
    traces(u, coefs, s, nullptr, &v);
    return v;
  }
  // (interior + exterior) / 2, shared corrections evaluated once
  void averages(const GridField& u, const Matrix& coefs, Vector* value,
                Vector* normal) const {
    Vector vi, ni, ve, ne;
    traces(u, coefs, Side::interior, value ? &vi : nullptr,
           normal ? &ni : nullptr);
    traces(u, coefs, Side::exterior, value ? &ve : nullptr,
           normal ? &ne : nullptr);
    if (value) *value = 0.5 * (vi + ve);
    if (normal) *normal = 0.5 * (ni + ne);
  }

 private:
  struct SideTerm {
    int pos;
    Real sign;
    int rec;
  };
  struct SidePlan {
    std::vector<std::pair<int, int>> nodes;
    Vector w_val, w_nd;
    std::vector<SideTerm> terms;
  };
  struct PointPlan {
    SidePlan side[2]; // 0 interior, 1 exterior
  };

  // Collect the fit rows for one side within the given disc radius (in grid
  // spacings) and build the two functionals. Fails (false) when the kept
  // nodes do not determine the quintic basis, e.g. all on five grid lines.
  bool build_side_plan(const NodeClassification& cls, const Grid2D& g, Real h,
                       const SurfacePoint& sp, int gi, int gj, int want,
                       Real trust, Real rad, SidePlan& pl) {
    pl.nodes.clear();
    pl.terms.clear();
    const int span = static_cast<int>(rad) + 1;
    std::vector<std::pair<Real, std::pair<int, int>>> cand;
    for (int a = -span; a <= span; ++a)
      for (int b = -span; b <= span; ++b) {
        int qi = gi + a, qj = gj + b;
        if (qi < 0 || qi > g.n || qj < 0 || qj > g.n) continue;
        Real d = (g.node(qi, qj) - sp.p).norm() / h;
        if (d <= rad) cand.push_back({d, {qi, qj}});
      }
    std::sort(cand.begin(), cand.end());
    for (const auto& [d, node] : cand) {
      const auto [qi, qj] = node;
      const int rq = cls.region(qi, qj);
      if (rq == want) {
        pl.nodes.push_back(node);
        continue;
      }
      const Vec2 x = g.node(qi, qj);
      auto trusted = [&](int comp) {
        int s = mesh_->nearest_point_of_component(x, comp);
        return (x - mesh_->pts[s].p).norm() <= trust * h;
      };
      if (want != 0 && !trusted(want)) continue;
      if (rq != 0 && !trusted(rq)) continue;
      const int pos = static_cast<int>(pl.nodes.size());
      pl.nodes.push_back(node);
      if (want != 0) pl.terms.push_back({pos, +1, evals_.intern(qi, qj, want)});
      if (rq != 0) pl.terms.push_back({pos, -1, evals_.intern(qi, qj, rq)});
    }
    const int nrow = static_cast<int>(pl.nodes.size());
    if (nrow < fitbasis::kSize + 3) return false;
    Matrix A(nrow, fitbasis::kSize);
    for (int r = 0; r < nrow; ++r)
      A.row(r) = fitbasis::value_row(
          (g.node(pl.nodes[r].first, pl.nodes[r].second) - sp.p) / h);
    Eigen::ColPivHouseholderQR<Matrix> qr(A);
    const auto& R = qr.matrixR();
    if (std::abs(R(fitbasis::kSize - 1, fitbasis::kSize - 1)) <
        1e-7 * std::abs(R(0, 0)))
      return false;
    Matrix pinv_t =
        qr.solve(Matrix::Identity(nrow, nrow)).transpose(); // nrow x kSize
    fitbasis::Coef e = fitbasis::Coef::Zero();
    e[0] = 1;
    pl.w_val = pinv_t * e;
    e[0] = 0;
    e[1] = sp.n[0];
    e[2] = sp.n[1];
    pl.w_nd = pinv_t * e / h;
    return true;
  }

  const SurfaceMesh* mesh_;
  BandEvaluations evals_;
  std::vector<PointPlan> pts_;
};

// Globally evaluable source of one region, with optional analytic Laplacian;
// a 5-point difference stands in when lap is absent.
struct RegionSource {
  std::function<Real(const Vec2&)> f;
  std::function<Real(const Vec2&)> lap;
};

// Right side of the compact scheme for (lap - kappa) u = f,
//   F = f + (h^2/12)(lap f + kappa f)
//     + (h^4/360)(lap^2 f + kappa lap f + kappa^2 f + 2 f_xxyy),
// each node evaluated with its own region's branch (region label 0 =
// exterior). The h^4 pieces only need O(h^2) accuracy, so lap^2 f and
// f_xxyy come from difference quotients of the branch closures; an absent
// analytic Laplacian drops the scheme to fourth order but stays consistent.
inline GridField build_volume_source(const NodeClassification& cls,
                                     const std::vector<RegionSource>& by_region,
                                     Real kappa) {
  GridField F(cls.grid);
  const Real h = cls.grid.h();
  const Real h2 = h * h;
  auto five_point = [h2](const std::function<Real(const Vec2&)>& g,
                         const Vec2& x, Real h1) {
    return (g({x[0] + h1, x[1]}) + g({x[0] - h1, x[1]}) +
            g({x[0], x[1] + h1}) + g({x[0], x[1] - h1}) - 4 * g(x)) /
           (h1 * h1);
  };
  auto cross = [](const std::function<Real(const Vec2&)>& g, const Vec2& x,
                  Real h1) {
    return (g({x[0] + h1, x[1] + h1}) + g({x[0] + h1, x[1] - h1}) +
            g({x[0] - h1, x[1] + h1}) + g({x[0] - h1, x[1] - h1}) -
            2 * (g({x[0] + h1, x[1]}) + g({x[0] - h1, x[1]}) +
                 g({x[0], x[1] + h1}) + g({x[0], x[1] - h1})) +
            4 * g(x)) /
           (h1 * h1 * h1 * h1);
  };
  for (int i = 0; i <= cls.grid.n; ++i)
    for (int j = 0; j <= cls.grid.n; ++j) {
      int r = cls.region(i, j);
      if (r >= static_cast<int>(by_region.size())) continue;
      const RegionSource& src = by_region[r];
      if (!src.f) continue;
      Vec2 x = cls.grid.node(i, j);
      Real f = src.f(x);
      Real lap = src.lap ? src.lap(x) : five_point(src.f, x, h);
      Real val = f + h2 / 12 * (lap + kappa * f);
      if (src.lap) {
        Real lap2 = five_point(src.lap, x, h);
        Real fxxyy = cross(src.f, x, h);
        val += h2 * h2 / 360 *
               (lap2 + kappa * lap + kappa * kappa * f + 2 * fxxyy);
      }
      F.v(i, j) = val;
    }
  return F;
}

// Evaluator of the interface problem
//   (lap - kappa_hat) u = F off Gamma,  [u] = a,  [du/dn] = b,  u = g on dB,
// by the corrected compact scheme and one sine-transform solve. Local Cauchy
// factorizations, correction terms and the FFT plan are built once per
// (geometry, kappa_hat).
class PotentialSolver {
 public:
  PotentialSolver(const NodeClassification& cls, const SurfaceMesh& mesh,
                  Real kappa_hat)
      : stencil_(CompactStencil::make(kappa_hat, mesh.grid.h())),
        cauchy_(mesh, kappa_hat),
        plan_(cls, mesh),
        fft_(mesh.grid, kappa_hat),
        zero_(Vector::Zero(mesh.size())) {}

  const CompactStencil& stencil() const { return stencil_; }
  const CauchySolver& cauchy() const { return cauchy_; }
  const CorrectionPlan& plan() const { return plan_; }
  const SurfaceMesh& mesh() const { return cauchy_.mesh(); }
  Real kappa_hat() const { return cauchy_.kappa_hat(); }
  const Vector& zeros() const { return zero_; }

  // volume: precomputed f + h^2/12 lap f (may be null for zero); box_g: box
  // boundary values (null for zero). coefs_out receives the local Cauchy
  // polynomials for subsequent trace extraction.
  GridField solve(const CauchyData& jumps, const GridField* volume,
                  const std::function<Real(const Vec2&)>& box_g,
                  Matrix* coefs_out = nullptr) const {
    GridField F = volume ? *volume : GridField(mesh().grid);
    if (box_g) apply_boundary_lifting(F, stencil_, box_g);
    Matrix coefs = cauchy_.solve_all(jumps);
    plan_.add_corrections(stencil_, coefs, F);
    GridField u = fft_.solve(F);
    if (box_g) set_boundary(u, box_g);
    if (coefs_out) *coefs_out = std::move(coefs);
    return u;
  }

 private:
  CompactStencil stencil_;
  CauchySolver cauchy_;
  CorrectionPlan plan_;
  SineSolver fft_;
  Vector zero_;
};

// Convenience wrapper for pointwise data: a, b are evaluated at the surface
// points (b receives the outward normal), sources are per-region. The source
// jump at every component uses by_region[1] against by_region[0], so
// multi-component domains must share one interior source here.
inline GridField solve_simple_interface(
    const PotentialSolver& ps, const NodeClassification& cls,
    const std::function<Real(const Vec2&)>& a,
    const std::function<Real(const Vec2&, const Vec2&)>& b,
    const std::vector<RegionSource>& by_region,
    const std::function<Real(const Vec2&)>& box_g,
    Matrix* coefs_out = nullptr) {
  const SurfaceMesh& mesh = ps.mesh();
  const int nb = mesh.size();
  Vector av = Vector::Zero(nb), bv = Vector::Zero(nb);
  for (int i = 0; i < nb; ++i) {
    if (a) av[i] = a(mesh.pts[i].p);
    if (b) bv[i] = b(mesh.pts[i].p, mesh.pts[i].n);
  }
  std::function<Real(const Vec2&)> f_int, f_ext;
  if (by_region.size() > 1) f_int = by_region[1].f;
  if (!by_region.empty()) f_ext = by_region[0].f;
  CauchyData jumps{av, bv, build_f_tilde(f_int, f_ext)};
  GridField volume = build_volume_source(cls, by_region, ps.kappa_hat());
  return ps.solve(jumps, &volume, box_g, coefs_out);
}

} // namespace kfbi

#endif
