#ifndef KFBI_BIE_HPP
#define KFBI_BIE_HPP

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kfbi/classification.hpp"
#include "kfbi/geometry.hpp"
#include "kfbi/gmres.hpp"
#include "kfbi/interface_solver.hpp"
#include "kfbi/level_set.hpp"
#include "kfbi/types.hpp"

namespace kfbi {

using ValueFn = std::function<Real(const Vec2&)>;
using FluxFn = std::function<Real(const Vec2&, const Vec2&)>; // (x, outward n)

// Elliptic boundary value problem on the union of component interiors:
//   sigma lap(u) - kappa u = f,  with u = g (Dirichlet) or
//   sigma du/dn = flux (Neumann) on Gamma.
struct BvpData {
  ValueFn g;
  FluxFn flux;
  RegionSource f;
  Real sigma = 1;
  Real kappa = 0;
};

// Transmission problem: sigma_i lap(u_i) - kappa_i u_i = f_i per region,
//   u_int - u_ext = g1,  sigma_int du_int/dn - sigma_ext du_ext/dn = g2
// across Gamma, u = box on the outer boundary (null for zero).
struct InterfaceData {
  ValueFn g1;
  FluxFn g2;
  ValueFn box;
  RegionSource f_int, f_ext;
  Real sigma_int = 1, sigma_ext = 1;
  Real kappa_int = 0, kappa_ext = 0;
};

struct BieStats {
  int iterations = 0;
  Real residual = 0;
  bool converged = false;
  std::vector<Real> history;
  // Neumann only: relative residual of the unregularized system; large
  // values flag incompatible data.
  Real incompatibility = 0;
};

struct BieSolution {
  GridField u;       // composite field, valid per node region
  Vector phi, psi;   // solved densities (empty when the formulation has none)
  Matrix coefs_int;  // final-field Cauchy polynomials, interior-field solve
  Matrix coefs_ext;  // exterior-field solve (two-density only)
  BieStats stats;
};

inline RegionSource scale_source(const RegionSource& s, Real factor) {
  RegionSource out;
  if (s.f) out.f = [f = s.f, factor](const Vec2& x) { return factor * f(x); };
  if (s.lap)
    out.lap = [l = s.lap, factor](const Vec2& x) { return factor * l(x); };
  return out;
}

inline GridField compose_by_region(const NodeClassification& cls,
                                   const GridField& u_int,
                                   const GridField& u_ext) {
  GridField u(cls.grid);
  for (int i = 0; i <= cls.grid.n; ++i)
    for (int j = 0; j <= cls.grid.n; ++j)
      u.v(i, j) = cls.region(i, j) > 0 ? u_int(i, j) : u_ext(i, j);
  return u;
}

// Boundary integral solver for one grid/geometry pair. Each formulation is a
// second-kind Fredholm system in boundary densities; the matrix-vector
// product is one (or two) corrected interface solves plus averaged trace
// extraction, and GMRES iterates on it.
class BieSolver {
 public:
  BieSolver(const Grid2D& grid, std::vector<LevelSet> components,
            Real alpha = kDefaultAlpha)
      : components_(std::move(components)),
        cls_(classify_nodes(grid, components_)),
        mesh_(build_surface_mesh(grid, components_, alpha)),
        extractor_(cls_, mesh_) {}

  const NodeClassification& classification() const { return cls_; }
  const SurfaceMesh& mesh() const { return mesh_; }
  const TraceExtractor& extractor() const { return extractor_; }
  int regions() const { return static_cast<int>(components_.size()) + 1; }

  // Potential evaluators are cached per operator coefficient.
  const PotentialSolver& op(Real kappa_hat) {
    auto it = ops_.find(kappa_hat);
    if (it == ops_.end())
      it = ops_.emplace(kappa_hat, std::make_unique<PotentialSolver>(
                                       cls_, mesh_, kappa_hat))
               .first;
    return *it->second;
  }

  Vector on_mesh(const ValueFn& f) const {
    Vector v = Vector::Zero(mesh_.size());
    if (f)
      for (int i = 0; i < mesh_.size(); ++i) v[i] = f(mesh_.pts[i].p);
    return v;
  }
  Vector on_mesh(const FluxFn& f) const {
    Vector v = Vector::Zero(mesh_.size());
    if (f)
      for (int i = 0; i < mesh_.size(); ++i)
        v[i] = f(mesh_.pts[i].p, mesh_.pts[i].n);
    return v;
  }

  // Interior Dirichlet problem, double-layer density phi:
  //   phi/2 + avgT(P(phi, 0, 0)) = g - avgT(P(0, 0, f/sigma)).
  BieSolution solve_dirichlet(const BvpData& d, Real tol = 1e-10,
                              int max_iter = 200) {
    if (!d.g) throw std::invalid_argument("dirichlet: missing g");
    const Real kh = d.kappa / d.sigma;
    const PotentialSolver& P = op(kh);
    auto [vol, f_tilde] = interior_volume(d);

    Matrix cw;
    GridField w = P.solve({P.zeros(), P.zeros(), f_tilde}, &vol, nullptr, &cw);
    Vector tw;
    extractor_.averages(w, cw, &tw, nullptr);
    Vector rhs = on_mesh(d.g) - tw;

    auto apply = [&](const Vector& x) {
      Matrix c;
      GridField v = P.solve({x, P.zeros(), nullptr}, nullptr, nullptr, &c);
      Vector t;
      extractor_.averages(v, c, &t, nullptr);
      return Vector(0.5 * x + t);
    };

    BieSolution out;
    GmresResult gr = gmres(apply, rhs, out.phi, tol, max_iter);
    out.u = P.solve({out.phi, P.zeros(), f_tilde}, &vol, nullptr,
                    &out.coefs_int);
    out.stats = {gr.iterations, gr.residual, gr.converged,
                 std::move(gr.history), 0};
    return out;
  }

  // Interior Neumann problem, single-layer density psi (flux scale):
  //   psi/2 + sigma avgTn(P(0, psi/sigma, 0)) = flux - sigma avgTn(P(0,0,f/sigma)).
  // For kappa = 0 the operator has a one-dimensional null space; a rank-one
  // mean regularization makes GMRES pick the mean-zero density, and the
  // unregularized residual is reported as the incompatibility measure.
  BieSolution solve_neumann(const BvpData& d, Real tol = 1e-10,
                            int max_iter = 200) {
    if (!d.flux) throw std::invalid_argument("neumann: missing flux");
    const Real kh = d.kappa / d.sigma;
    const bool singular = kh == 0;
    const PotentialSolver& P = op(kh);
    auto [vol, f_tilde] = interior_volume(d);

    Matrix cw;
    GridField w = P.solve({P.zeros(), P.zeros(), f_tilde}, &vol, nullptr, &cw);
    Vector tnw;
    extractor_.averages(w, cw, nullptr, &tnw);
    Vector rhs = on_mesh(d.flux) - d.sigma * tnw;

    auto apply_plain = [&](const Vector& x) {
      Vector b = x / d.sigma;
      Matrix c;
      GridField v = P.solve({P.zeros(), b, nullptr}, nullptr, nullptr, &c);
      Vector tn;
      extractor_.averages(v, c, nullptr, &tn);
      return Vector(0.5 * x + d.sigma * tn);
    };
    auto apply = [&](const Vector& x) {
      Vector y = apply_plain(x);
      if (singular) y.array() += x.mean();
      return y;
    };

    BieSolution out;
    GmresResult gr = gmres(apply, rhs, out.psi, tol, max_iter);
    out.stats = {gr.iterations, gr.residual, gr.converged,
                 std::move(gr.history), 0};
    if (singular && rhs.norm() > 0)
      out.stats.incompatibility =
          (rhs - apply_plain(out.psi)).lpNorm<Eigen::Infinity>() /
          rhs.lpNorm<Eigen::Infinity>();

    Vector b = out.psi / d.sigma;
    out.u = P.solve({P.zeros(), b, f_tilde}, &vol, nullptr, &out.coefs_int);
    return out;
  }

  // Transmission problem with one operator coefficient kappa_int/sigma_int ==
  // kappa_ext/sigma_ext, single unknown normal-jump density psi:
  //   psi/2 - mu avgTn(P(0, psi, 0)) = g2/(s1+s2) + mu avgTn(P(g1, 0, F, box)),
  // mu = (s2 - s1)/(s1 + s2); the final field is P(g1, psi, F; box).
  BieSolution solve_interface_single(const InterfaceData& d, Real tol = 1e-10,
                                     int max_iter = 200) {
    check_interface(d);
    const Real scale = std::max({std::abs(d.kappa_int), std::abs(d.kappa_ext),
                                 d.sigma_int, d.sigma_ext});
    if (std::abs(d.kappa_int * d.sigma_ext - d.kappa_ext * d.sigma_int) >
        1e-12 * scale * scale)
      throw std::invalid_argument(
          "interface_single: kappa/sigma must match across regions");
    const Real kh = d.kappa_int / d.sigma_int;
    const Real mu = (d.sigma_ext - d.sigma_int) / (d.sigma_int + d.sigma_ext);
    const PotentialSolver& P = op(kh);
    auto [vol, f_tilde] = interface_volume(d);
    Vector g1 = on_mesh(d.g1), g2 = on_mesh(d.g2);

    Matrix cr;
    GridField r = P.solve({g1, P.zeros(), f_tilde}, &vol, d.box, &cr);
    Vector tnr;
    extractor_.averages(r, cr, nullptr, &tnr);
    Vector rhs = g2 / (d.sigma_int + d.sigma_ext) + mu * tnr;

    auto apply = [&](const Vector& x) {
      Matrix c;
      GridField v = P.solve({P.zeros(), x, nullptr}, nullptr, nullptr, &c);
      Vector tn;
      extractor_.averages(v, c, nullptr, &tn);
      return Vector(0.5 * x - mu * tn);
    };

    BieSolution out;
    GmresResult gr = gmres(apply, rhs, out.psi, tol, max_iter);
    out.u = P.solve({g1, out.psi, f_tilde}, &vol, d.box, &out.coefs_int);
    out.stats = {gr.iterations, gr.residual, gr.converged,
                 std::move(gr.history), 0};
    return out;
  }

  // General transmission problem, densities (phi, psi) = (u_int|Gamma,
  // sigma_ext du_ext/dn|Gamma). With v_i = P_i(phi, psi/sigma_i, 0):
  //   phi - avgT(v1) + avgT(v2)            = g1/2 + avgT(r1) + avgT(r2)
  //   psi - s1 avgTn(v1) + s2 avgTn(v2)    = -g2/2 + s1 avgTn(r1) + s2 avgTn(r2)
  // with r1 = P1(0, g2/s1, f1/s1 interior), r2 = P2(g1, 0, f2/s2 exterior; box).
  BieSolution solve_interface_two(const InterfaceData& d, Real tol = 1e-10,
                                  int max_iter = 200) {
    check_interface(d);
    const Real s1 = d.sigma_int, s2 = d.sigma_ext;
    const PotentialSolver& P1 = op(d.kappa_int / s1);
    const PotentialSolver& P2 = op(d.kappa_ext / s2);
    const int nb = mesh_.size();

    std::vector<RegionSource> src1(regions()), src2(regions());
    for (int r = 1; r < regions(); ++r) src1[r] = scale_source(d.f_int, 1 / s1);
    src2[0] = scale_source(d.f_ext, 1 / s2);
    GridField vol1 = build_volume_source(cls_, src1, d.kappa_int / s1);
    GridField vol2 = build_volume_source(cls_, src2, d.kappa_ext / s2);
    auto ft1 = build_f_tilde(src1.back().f, nullptr);
    auto ft2 = build_f_tilde(nullptr, src2[0].f);
    Vector g1 = on_mesh(d.g1), g2 = on_mesh(d.g2);

    Matrix c;
    Vector b1 = g2 / s1;
    GridField r1 = P1.solve({P1.zeros(), b1, ft1}, &vol1, nullptr, &c);
    Vector t1v, t1n;
    extractor_.averages(r1, c, &t1v, &t1n);
    GridField r2 = P2.solve({g1, P2.zeros(), ft2}, &vol2, d.box, &c);
    Vector t2v, t2n;
    extractor_.averages(r2, c, &t2v, &t2n);

    Vector rhs(2 * nb);
    rhs.head(nb) = 0.5 * g1 + t1v + t2v;
    rhs.tail(nb) = -0.5 * g2 + s1 * t1n + s2 * t2n;

    auto apply = [&](const Vector& x) {
      Vector phi = x.head(nb), psi = x.tail(nb);
      Vector bi = psi / s1, be = psi / s2;
      Matrix c1, c2;
      GridField v1 = P1.solve({phi, bi, nullptr}, nullptr, nullptr, &c1);
      GridField v2 = P2.solve({phi, be, nullptr}, nullptr, nullptr, &c2);
      Vector v1v, v1n, v2v, v2n;
      extractor_.averages(v1, c1, &v1v, &v1n);
      extractor_.averages(v2, c2, &v2v, &v2n);
      Vector y(2 * nb);
      y.head(nb) = phi - v1v + v2v;
      y.tail(nb) = psi - s1 * v1n + s2 * v2n;
      return y;
    };

    Vector x;
    GmresResult gr = gmres(apply, rhs, x, tol, max_iter);

    BieSolution out;
    out.phi = x.head(nb);
    out.psi = x.tail(nb);
    Vector bfi = (out.psi + g2) / s1;
    GridField u1 =
        P1.solve({out.phi, bfi, ft1}, &vol1, nullptr, &out.coefs_int);
    Vector afe = g1 - out.phi, bfe = -out.psi / s2;
    GridField u2 = P2.solve({afe, bfe, ft2}, &vol2, d.box, &out.coefs_ext);
    out.u = compose_by_region(cls_, u1, u2);
    out.stats = {gr.iterations, gr.residual, gr.converged,
                 std::move(gr.history), 0};
    return out;
  }

 private:
  static void check_interface(const InterfaceData& d) {
    if (d.sigma_int <= 0 || d.sigma_ext <= 0)
      throw std::invalid_argument("interface: sigma must be positive");
    if (d.kappa_int < 0 || d.kappa_ext < 0)
      throw std::invalid_argument("interface: kappa must be nonnegative");
  }

  std::pair<GridField, std::function<Real(const Vec2&)>> interior_volume(
      const BvpData& d) {
    std::vector<RegionSource> srcs(regions());
    for (int r = 1; r < regions(); ++r) srcs[r] = scale_source(d.f, 1 / d.sigma);
    return {build_volume_source(cls_, srcs, d.kappa / d.sigma),
            build_f_tilde(srcs.back().f, nullptr)};
  }

  std::pair<GridField, std::function<Real(const Vec2&)>> interface_volume(
      const InterfaceData& d) {
    std::vector<RegionSource> srcs(regions());
    srcs[0] = scale_source(d.f_ext, 1 / d.sigma_ext);
    for (int r = 1; r < regions(); ++r)
      srcs[r] = scale_source(d.f_int, 1 / d.sigma_int);
    return {build_volume_source(cls_, srcs, d.kappa_int / d.sigma_int),
            build_f_tilde(srcs.back().f, srcs[0].f)};
  }

  std::vector<LevelSet> components_;
  NodeClassification cls_;
  SurfaceMesh mesh_;
  TraceExtractor extractor_;
  std::map<Real, std::unique_ptr<PotentialSolver>> ops_;
};

} // namespace kfbi

#endif
