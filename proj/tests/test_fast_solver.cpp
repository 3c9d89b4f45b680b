#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kfbi/classification.hpp"
#include "kfbi/fast_solver.hpp"
#include "kfbi/solutions.hpp"

#include "test_support.hpp"

using namespace kfbi;

namespace {

// Dense assembly of the 9-point operator with zero box boundary, independent
// of the transform path.
Matrix assemble_dense(const Grid2D& g, const CompactStencil& s) {
  const int m = g.n - 1;
  Matrix A = Matrix::Zero(m * m, m * m);
  auto idx = [m](int i, int j) { return (i - 1) * m + (j - 1); };
  for (int i = 1; i < g.n; ++i)
    for (int j = 1; j < g.n; ++j)
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          int ii = i + di, jj = j + dj;
          if (ii < 1 || ii > m || jj < 1 || jj > m) continue;
          A(idx(i, j), idx(ii, jj)) = s.weight(di, dj);
        }
  return A;
}

Real interior_residual(const GridField& a, const GridField& b) {
  Real r = 0;
  for (int i = 1; i < a.grid.n; ++i)
    for (int j = 1; j < a.grid.n; ++j)
      r = std::max(r, std::abs(a(i, j) - b(i, j)));
  return r;
}

} // namespace

TEST_CASE("sine-transform solve matches a dense direct solve") {
  Grid2D g = build_grid(0, 1, 16);
  const int m = g.n - 1;
  for (Real kappa : {0.0, 10.0}) {
    CAPTURE(kappa);
    CompactStencil s = CompactStencil::make(kappa, g.h());
    Matrix A = assemble_dense(g, s);
    Eigen::PartialPivLU<Matrix> lu(A);
    SineSolver fft(g, kappa);

    std::mt19937 rng(2024 + static_cast<int>(kappa));
    std::uniform_real_distribution<Real> uni(-1, 1);
    for (int trial = 0; trial < 5; ++trial) {
      GridField F(g);
      for (int i = 1; i < g.n; ++i)
        for (int j = 1; j < g.n; ++j) F(i, j) = uni(rng);
      Vector rhs(m * m);
      for (int i = 1; i < g.n; ++i)
        for (int j = 1; j < g.n; ++j) rhs[(i - 1) * m + (j - 1)] = F(i, j);

      Vector x_dense = lu.solve(rhs);
      GridField u = fft.solve(F);
      Real num = 0, den = 0;
      for (int i = 1; i < g.n; ++i)
        for (int j = 1; j < g.n; ++j) {
          num = std::max(num,
                         std::abs(u(i, j) - x_dense[(i - 1) * m + (j - 1)]));
          den = std::max(den, std::abs(x_dense[(i - 1) * m + (j - 1)]));
        }
      CHECK(num <= 1e-11 * den);
    }
  }
}

TEST_CASE("solve then apply reproduces the right-hand side") {
  Grid2D g = build_grid(-0.3, 1.1, 24);
  CompactStencil s = CompactStencil::make(4.2, g.h());
  SineSolver fft(g, 4.2);
  GridField F(g);
  for (int i = 1; i < g.n; ++i)
    for (int j = 1; j < g.n; ++j)
      F(i, j) = std::sin(2.1 * i) * std::cos(0.7 * j);
  GridField back = apply_stencil(fft.solve(F), s);
  CHECK(interior_residual(back, F) <= 1e-11 * F.v.abs().maxCoeff());
  CHECK(fft.calls() == 1);

  GridField wrong(build_grid(-0.3, 1.1, 16));
  CHECK_THROWS_AS(fft.solve(wrong), std::invalid_argument);
}

TEST_CASE("scheme truncation on smooth data is sixth order") {
  ExactSolution u = make_exp_sine(0.7, 1.1, 0.6);
  const Real kappa = 3.7;
  std::vector<Real> res;
  for (int n : {16, 32, 64}) {
    Grid2D g = build_grid(-1, 1, n);
    NodeClassification cls = classify_nodes(g, {});
    GridField F =
        build_volume_source(cls, {kfbi_test::source_of(u, 1, kappa)}, kappa);
    GridField un(g);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) un(i, j) = u.value(g.node(i, j));
    res.push_back(
        interior_residual(apply_stencil(un, CompactStencil::make(kappa, g.h())), F));
  }
  CHECK(std::log2(res[0] / res[1]) >= 5.3);
  CHECK(std::log2(res[1] / res[2]) >= 5.3);
}

TEST_CASE("without an analytic source laplacian the scheme stays consistent") {
  ExactSolution u = make_exp_sine(0.7, 1.1, 0.6);
  const Real kappa = 2.0;
  std::vector<Real> res;
  for (int n : {16, 32}) {
    Grid2D g = build_grid(-1, 1, n);
    NodeClassification cls = classify_nodes(g, {});
    RegionSource src = kfbi_test::source_of(u, 1, kappa);
    src.lap = nullptr; // falls back to the 5-point difference of f
    GridField F = build_volume_source(cls, {src}, kappa);
    GridField un(g);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) un(i, j) = u.value(g.node(i, j));
    res.push_back(
        interior_residual(apply_stencil(un, CompactStencil::make(kappa, g.h())), F));
  }
  CHECK(std::log2(res[0] / res[1]) >= 3.5);
}

TEST_CASE("boundary lifting gives a high-order Dirichlet box solve") {
  ExactSolution u = make_exp_sine(1.0, 0.0, 1.0);
  const Real kappa = 2.5;
  std::vector<Real> err;
  for (int n : {16, 32}) {
    Grid2D g = build_grid(0, 1, n);
    NodeClassification cls = classify_nodes(g, {});
    GridField F =
        build_volume_source(cls, {kfbi_test::source_of(u, 1, kappa)}, kappa);
    CompactStencil s = CompactStencil::make(kappa, g.h());
    apply_boundary_lifting(F, s, u.value);
    GridField uh = SineSolver(g, kappa).solve(F);
    set_boundary(uh, u.value);
    Real e = 0;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        e = std::max(e, std::abs(uh(i, j) - u.value(g.node(i, j))));
    err.push_back(e);
  }
  CHECK(err[1] <= 1e-8);
  CHECK(std::log2(err[0] / err[1]) >= 5.0);
}
