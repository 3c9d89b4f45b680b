#ifndef KFBI_CORRECTION_HPP
#define KFBI_CORRECTION_HPP

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kfbi/classification.hpp"
#include "kfbi/fast_solver.hpp"
#include "kfbi/geometry.hpp"
#include "kfbi/types.hpp"

namespace kfbi {

// Quartic monomial basis xi^l eta^m, l + m <= 4, in grid-scaled local
// coordinates xi = (x - p)/h. Scaling the PDE rows by h^2 and the Neumann
// rows by h keeps the collocation matrix O(1) and its condition number
// independent of h.
namespace basis {

inline constexpr int kSize = 15;
inline constexpr std::array<std::pair<int, int>, kSize> kExps = {{
    {0, 0},
    {1, 0}, {0, 1},
    {2, 0}, {1, 1}, {0, 2},
    {3, 0}, {2, 1}, {1, 2}, {0, 3},
    {4, 0}, {3, 1}, {2, 2}, {1, 3}, {0, 4},
}};

using Row = Eigen::Matrix<Real, 1, kSize>;
using Coef = Eigen::Matrix<Real, kSize, 1>;

inline std::array<Real, 5> powers(Real t) {
  return {1, t, t * t, t * t * t, t * t * t * t};
}

inline Row value_row(const Vec2& z) {
  auto px = powers(z[0]), py = powers(z[1]);
  Row r;
  for (int k = 0; k < kSize; ++k) r[k] = px[kExps[k].first] * py[kExps[k].second];
  return r;
}

inline Row gx_row(const Vec2& z) {
  auto px = powers(z[0]), py = powers(z[1]);
  Row r;
  for (int k = 0; k < kSize; ++k) {
    auto [l, m] = kExps[k];
    r[k] = l == 0 ? 0 : l * px[l - 1] * py[m];
  }
  return r;
}

inline Row gy_row(const Vec2& z) {
  auto px = powers(z[0]), py = powers(z[1]);
  Row r;
  for (int k = 0; k < kSize; ++k) {
    auto [l, m] = kExps[k];
    r[k] = m == 0 ? 0 : m * px[l] * py[m - 1];
  }
  return r;
}

inline Row lap_row(const Vec2& z) {
  auto px = powers(z[0]), py = powers(z[1]);
  Row r;
  for (int k = 0; k < kSize; ++k) {
    auto [l, m] = kExps[k];
    Real v = 0;
    if (l >= 2) v += l * (l - 1) * px[l - 2] * py[m];
    if (m >= 2) v += m * (m - 1) * px[l] * py[m - 2];
    r[k] = v;
  }
  return r;
}

} // namespace basis

// One solved local Cauchy problem: C(x) = coef . basis((x - center)/h).
struct LocalPolynomial {
  Vec2 center;
  Real h = 1;
  basis::Coef coef = basis::Coef::Zero();

  Real operator()(const Vec2& x) const {
    return basis::value_row((x - center) / h) * coef;
  }
  Vec2 gradient(const Vec2& x) const {
    Vec2 z = (x - center) / h;
    return {(basis::gx_row(z) * coef)(0) / h, (basis::gy_row(z) * coef)(0) / h};
  }
};

struct CollocationPoints {
  std::array<int, 5> dirichlet;         // mesh indices, ordered along Gamma
  std::array<int, 4> neumann;           // subset of dirichlet
  std::array<std::pair<int, int>, 6> pde; // grid nodes
};

// 5 consecutive surface points centered at p_i; the 4 innermost of them as
// Neumann points; 6 band grid nodes nearest p_i in the degree-2 unisolvent
// pattern {center, +-e1, +-e2, one diagonal}.
inline CollocationPoints select_collocation_points(const SurfaceMesh& mesh,
                                                   int i) {
  CollocationPoints out;
  auto window = local_parameterization(mesh, i, 5);
  std::copy(window.begin(), window.end(), out.dirichlet.begin());

  const SurfacePoint& sp = mesh.pts[i];
  const int r = std::abs(sp.n[0]) >= std::abs(sp.n[1]) ? 0 : 1;
  const int ortho = 1 - r;
  auto inner = window;
  std::sort(inner.begin(), inner.end(), [&](int a, int b) {
    Real da = std::abs(mesh.pts[a].p[ortho] - sp.p[ortho]);
    Real db = std::abs(mesh.pts[b].p[ortho] - sp.p[ortho]);
    if (da != db) return da < db;
    return a < b;
  });
  std::copy(inner.begin(), inner.begin() + 4, out.neumann.begin());

  int gi, gj;
  mesh.grid.nearest_node(sp.p, gi, gj);
  out.pde[0] = {gi, gj};
  out.pde[1] = {gi + 1, gj};
  out.pde[2] = {gi - 1, gj};
  out.pde[3] = {gi, gj + 1};
  out.pde[4] = {gi, gj - 1};
  std::array<std::pair<int, int>, 4> diags = {
      {{gi + 1, gj + 1}, {gi + 1, gj - 1}, {gi - 1, gj + 1}, {gi - 1, gj - 1}}};
  Real best = std::numeric_limits<Real>::max();
  for (auto [di, dj] : diags) {
    Real d = (mesh.grid.node(di, dj) - sp.p).squaredNorm();
    if (d < best - 1e-30) {
      best = d;
      out.pde[5] = {di, dj};
    }
  }
  return out;
}

// Rows: 6 PDE (lap_xi - kappa h^2), 5 Dirichlet values, 4 Neumann normal
// derivatives (times h), all about p_i in grid-scaled coordinates.
inline Eigen::Matrix<Real, basis::kSize, basis::kSize> collocation_matrix(
    const SurfaceMesh& mesh, int i, const CollocationPoints& pts,
    Real kappa_hat) {
  const SurfacePoint& sp = mesh.pts[i];
  const Real h = mesh.grid.h();
  Eigen::Matrix<Real, basis::kSize, basis::kSize> M;
  int row = 0;
  for (auto [gi, gj] : pts.pde) {
    Vec2 z = (mesh.grid.node(gi, gj) - sp.p) / h;
    M.row(row++) = basis::lap_row(z) - kappa_hat * h * h * basis::value_row(z);
  }
  for (int q : pts.dirichlet) {
    Vec2 z = (mesh.pts[q].p - sp.p) / h;
    M.row(row++) = basis::value_row(z);
  }
  for (int q : pts.neumann) {
    Vec2 z = (mesh.pts[q].p - sp.p) / h;
    const Vec2& nq = mesh.pts[q].n;
    M.row(row++) = nq[0] * basis::gx_row(z) + nq[1] * basis::gy_row(z);
  }
  return M;
}

// f_int and f_ext must be globally evaluable in the band; either may be null
// for zero. The difference convention is interior minus exterior.
inline std::function<Real(const Vec2&)> build_f_tilde(
    std::function<Real(const Vec2&)> f_int,
    std::function<Real(const Vec2&)> f_ext) {
  if (!f_int && !f_ext) return nullptr;
  return [fi = std::move(f_int), fe = std::move(f_ext)](const Vec2& x) {
    Real v = 0;
    if (fi) v += fi(x);
    if (fe) v -= fe(x);
    return v;
  };
}

// Pointwise jump data along Gamma^h. a and b are indexed by mesh point;
// f_tilde is the source jump (interior minus exterior), null for zero.
// The Refs may bind temporaries, so a CauchyData must not outlive the full
// expression that builds it.
struct CauchyData {
  Eigen::Ref<const Vector> a;
  Eigen::Ref<const Vector> b;
  std::function<Real(const Vec2&)> f_tilde;
};

// Per-operator collocation plan: point selection and QR factorizations are
// computed once per (geometry, kappa_hat) and reused by every GMRES iteration.
class CauchySolver {
 public:
  static constexpr Real kPivotRatioLimit = 1e8;

  CauchySolver(const SurfaceMesh& mesh, Real kappa_hat)
      : mesh_(&mesh), kappa_hat_(kappa_hat) {
    const int nb = mesh.size();
    pts_.resize(nb);
    qr_.resize(nb);
    fallback_.assign(nb, false);
    for (int i = 0; i < nb; ++i) {
      pts_[i] = select_collocation_points(mesh, i);
      qr_[i].compute(collocation_matrix(mesh, i, pts_[i], kappa_hat));
      if (pivot_ratio(i) > kPivotRatioLimit) {
        // Hermite-style Neumann set is near-degenerate here; widen to the
        // four non-center window points before giving up.
        fallback_[i] = true;
        auto& np = pts_[i].neumann;
        int k = 0;
        for (int q : pts_[i].dirichlet)
          if (q != i && k < 4) np[k++] = q;
        qr_[i].compute(collocation_matrix(mesh, i, pts_[i], kappa_hat));
        if (pivot_ratio(i) > kPivotRatioLimit)
          throw std::runtime_error(
              "CauchySolver: collocation matrix rank-deficient (geometry degeneracy)");
      }
    }
  }

  const SurfaceMesh& mesh() const { return *mesh_; }
  Real kappa_hat() const { return kappa_hat_; }
  const CollocationPoints& points(int i) const { return pts_[i]; }
  bool used_fallback(int i) const { return fallback_[i]; }
  Real pivot_ratio(int i) const {
    const auto& R = qr_[i].matrixR();
    Real lo = std::abs(R(basis::kSize - 1, basis::kSize - 1));
    return lo == 0 ? std::numeric_limits<Real>::infinity()
                   : std::abs(R(0, 0)) / lo;
  }
  Eigen::Matrix<Real, basis::kSize, basis::kSize> matrix(int i) const {
    return collocation_matrix(*mesh_, i, pts_[i], kappa_hat_);
  }

  basis::Coef solve_one(int i, const CauchyData& data) const {
    const Real h = mesh_->grid.h();
    Eigen::Matrix<Real, basis::kSize, 1> rhs;
    int row = 0;
    for (auto [gi, gj] : pts_[i].pde)
      rhs[row++] =
          data.f_tilde ? h * h * data.f_tilde(mesh_->grid.node(gi, gj)) : 0;
    for (int q : pts_[i].dirichlet) rhs[row++] = data.a[q];
    for (int q : pts_[i].neumann) rhs[row++] = h * data.b[q];
    return qr_[i].solve(rhs);
  }

  // Coefficients of every local polynomial, one column per surface point.
  Matrix solve_all(const CauchyData& data) const {
    Matrix coefs(basis::kSize, mesh_->size());
    for (int i = 0; i < mesh_->size(); ++i) coefs.col(i) = solve_one(i, data);
    return coefs;
  }

  LocalPolynomial polynomial(int i, const CauchyData& data) const {
    return {mesh_->pts[i].p, mesh_->grid.h(), solve_one(i, data)};
  }

 private:
  const SurfaceMesh* mesh_;
  Real kappa_hat_;
  std::vector<CollocationPoints> pts_;
  std::vector<Eigen::ColPivHouseholderQR<
      Eigen::Matrix<Real, basis::kSize, basis::kSize>>>
      qr_;
  std::vector<bool> fallback_;
};

// Correction value C_comp(x) through the nearest-surface-point partition of
// unity. The nearest point must lie within band_radius_h grid spacings.
inline Real correction_at(const SurfaceMesh& mesh, const Matrix& coefs,
                          int comp, const Vec2& x, Real band_radius_h = 3.0) {
  int k = mesh.nearest_point_of_component(x, comp);
  const Real h = mesh.grid.h();
  if ((mesh.pts[k].p - x).norm() > band_radius_h * h)
    throw std::domain_error("correction_at: point outside the interface band");
  return basis::value_row((x - mesh.pts[k].p) / h) * coefs.col(k);
}

// Interned evaluation of C_comp at band grid nodes: each unique (node,
// component) pair stores its nearest surface point and frozen basis row, so
// per-iteration work is one 15-dot per record.
class BandEvaluations {
 public:
  explicit BandEvaluations(const SurfaceMesh& mesh) : mesh_(&mesh) {}

  int intern(int i, int j, int comp) {
    long key = (static_cast<long>(i * (mesh_->grid.n + 1) + j)
                << 4) |
               comp;
    auto [it, fresh] = index_.try_emplace(key, static_cast<int>(recs_.size()));
    if (fresh) {
      Vec2 x = mesh_->grid.node(i, j);
      int sp = mesh_->nearest_point_of_component(x, comp);
      recs_.push_back({sp, basis::value_row((x - mesh_->pts[sp].p) /
                                            mesh_->grid.h())});
    }
    return it->second;
  }

  int size() const { return static_cast<int>(recs_.size()); }

  void evaluate(const Matrix& coefs, Vector& out) const {
    out.resize(recs_.size());
    for (std::size_t r = 0; r < recs_.size(); ++r)
      out[r] = recs_[r].row * coefs.col(recs_[r].sp);
  }

 private:
  struct Record {
    int sp;
    basis::Row row;
  };
  const SurfaceMesh* mesh_;
  std::map<long, int> index_;
  std::vector<Record> recs_;
};

// Irregular-node right-hand-side corrections for the compact scheme. For an
// irregular node P and cut neighbor Q in a different region,
//   F(P) -= c(Q) * (C_{r(P)}(x_Q) - C_{r(Q)}(x_Q)),
// with C_0 identically zero. Geometry is frozen at construction; the stencil
// weights enter at apply time so one plan serves every operator.
class CorrectionPlan {
 public:
  CorrectionPlan(const NodeClassification& cls, const SurfaceMesh& mesh)
      : evals_(mesh) {
    for (const IrregularNode& node : cls.irregulars) {
      int rp = cls.region(node.i, node.j);
      for (const CutNeighbor& cut : node.cuts) {
        int rq = cut.nbr_region;
        if (rq == rp) continue; // grazing double crossing, branches agree
        Term t;
        t.i = node.i;
        t.j = node.j;
        t.di = cut.di;
        t.dj = cut.dj;
        int qi = node.i + cut.di, qj = node.j + cut.dj;
        t.rec_p = rp == 0 ? -1 : evals_.intern(qi, qj, rp);
        t.rec_q = rq == 0 ? -1 : evals_.intern(qi, qj, rq);
        terms_.push_back(t);
      }
    }
  }

  void add_corrections(const CompactStencil& s, const Matrix& coefs,
                       GridField& F) const {
    Vector vals;
    evals_.evaluate(coefs, vals);
    for (const Term& t : terms_) {
      Real cp = t.rec_p >= 0 ? vals[t.rec_p] : 0;
      Real cq = t.rec_q >= 0 ? vals[t.rec_q] : 0;
      F.v(t.i, t.j) -= s.weight(t.di, t.dj) * (cp - cq);
    }
  }

  std::size_t term_count() const { return terms_.size(); }

 private:
  struct Term {
    int i, j, di, dj;
    int rec_p, rec_q;
  };
  BandEvaluations evals_;
  std::vector<Term> terms_;
};

} // namespace kfbi

#endif
