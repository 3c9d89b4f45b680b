// Release gate: one line per criterion, exit code = number of failures.
// argv[1] names the bundled config directory (default "configs").

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kfbi/experiment.hpp"

#include "test_support.hpp"

using namespace kfbi;

namespace {

int failures = 0;

void report(int k, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", k,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <class Fn>
void criterion(int k, Fn&& fn) {
  try {
    std::pair<bool, std::string> r = fn();
    report(k, r.first, r.second);
  } catch (const std::exception& e) {
    report(k, false, std::string("exception: ") + e.what());
  }
}

std::string sci(Real v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

} // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "configs";

  // Interior Dirichlet run on the rotated ellipse: error bands, fourth-order
  // decay between grids, iteration cap.
  criterion(1, [&] {
    RunConfig cfg = load_config(dir + "/table1.cfg");
    ExperimentResult ex = run_experiment(cfg);
    const Real ref[3] = {1.31e-4, 3.69e-6, 1.03e-7};
    bool pass = ex.rows.size() == 3;
    std::ostringstream os;
    for (std::size_t k = 0; k < ex.rows.size(); ++k) {
      const GridRunResult& r = ex.rows[k];
      pass = pass && r.converged && r.iterations <= 15 &&
             r.linf_int <= 5 * ref[k];
      os << "N=" << r.n << " e=" << sci(r.linf_int) << " it=" << r.iterations
         << "  ";
    }
    for (std::size_t k = 0; k + 1 < ex.rows.size(); ++k) {
      Real p = convergence_order(ex.rows[k].linf_int, ex.rows[k + 1].linf_int);
      pass = pass && p >= 4.0;
      os << "p=" << sci(p) << " ";
    }
    return std::pair{pass, "dirichlet ellipse  " + os.str()};
  });

  // Transmission run with eight circles and a star at conductivity ratio 3:
  // two-region error bands, iteration caps, boundary point count.
  criterion(2, [&] {
    RunConfig cfg = load_config(dir + "/table2.cfg");
    ExperimentResult ex = run_experiment(cfg);
    const Real ref_int[3] = {5.21e-5, 4.65e-7, 3.14e-9};
    const Real ref_ext[3] = {3.94e-5, 5.73e-7, 3.19e-9};
    const int it_cap[3] = {35, 25, 25};
    bool pass = ex.rows.size() == 3;
    std::ostringstream os;
    for (std::size_t k = 0; k < ex.rows.size(); ++k) {
      const GridRunResult& r = ex.rows[k];
      pass = pass && r.converged && r.iterations <= it_cap[k] &&
             r.linf_int <= 10 * ref_int[k] && r.linf_ext <= 10 * ref_ext[k];
      os << "N=" << r.n << " ei=" << sci(r.linf_int)
         << " ee=" << sci(r.linf_ext) << " it=" << r.iterations << "  ";
    }
    if (pass) {
      pass = std::abs(ex.rows[0].nb - 392.0) <= 0.05 * 392;
      os << "Nb=" << ex.rows[0].nb;
    }
    return std::pair{pass, "interface circles+star  " + os.str()};
  });

  // Transform-based solve against a dense direct solve of the same assembled
  // stencil system, multiple right-hand sides, zero and positive reaction.
  criterion(3, [&] {
    Grid2D g = build_grid(0, 1, 16);
    const int m = g.n - 1;
    Real worst = 0;
    for (Real kappa : {0.0, 10.0}) {
      CompactStencil s = CompactStencil::make(kappa, g.h());
      Matrix A = Matrix::Zero(m * m, m * m);
      for (int i = 1; i < g.n; ++i)
        for (int j = 1; j < g.n; ++j)
          for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              int ii = i + di, jj = j + dj;
              if (ii < 1 || ii > m || jj < 1 || jj > m) continue;
              A((i - 1) * m + (j - 1), (ii - 1) * m + (jj - 1)) =
                  s.weight(di, dj);
            }
      Eigen::PartialPivLU<Matrix> lu(A);
      SineSolver fft(g, kappa);
      std::mt19937 rng(2024 + static_cast<int>(kappa));
      std::uniform_real_distribution<Real> uni(-1, 1);
      for (int trial = 0; trial < 5; ++trial) {
        GridField F(g);
        Vector rhs(m * m);
        for (int i = 1; i < g.n; ++i)
          for (int j = 1; j < g.n; ++j)
            rhs[(i - 1) * m + (j - 1)] = F(i, j) = uni(rng);
        Vector xd = lu.solve(rhs);
        GridField u = fft.solve(F);
        Real num = 0, den = 0;
        for (int i = 1; i < g.n; ++i)
          for (int j = 1; j < g.n; ++j) {
            num = std::max(num,
                           std::abs(u(i, j) - xd[(i - 1) * m + (j - 1)]));
            den = std::max(den, std::abs(xd[(i - 1) * m + (j - 1)]));
          }
        worst = std::max(worst, num / den);
      }
    }
    return std::pair{worst <= 1e-11,
                     "fast solver vs dense, rel err " + sci(worst)};
  });

  // Truncation of the corrected scheme on an exact piecewise pair with exact
  // jump data: third order at irregular nodes, fourth at regular ones.
  criterion(4, [&] {
    ExactSolution ui = find_solution("exp_linear");
    ExactSolution ue = find_solution("sin_product");
    std::vector<LevelSet> comps = {make_circle(0.55, 0.01, 0.02)};
    std::vector<Real> irr, reg;
    for (int n : {32, 64, 128}) {
      auto r = kfbi_test::corrected_residual(build_grid(-1, 1, n), comps, ui,
                                             ue, 0.0);
      irr.push_back(r.first);
      reg.push_back(r.second);
    }
    // Fine-grid regular residuals can bottom out on the O(eps/h^2) noise of
    // the applied stencil; a pair at that floor still certifies the order.
    const Real kFloor = 2e-11;
    bool pass = true;
    std::ostringstream os;
    for (int k = 0; k + 1 < 3; ++k) {
      Real pi = std::log2(irr[k] / irr[k + 1]);
      Real pr = std::log2(reg[k] / reg[k + 1]);
      pass = pass && pi >= 3.0 && (pr >= 4.0 || reg[k + 1] <= kFloor);
      os << "irr=" << sci(pi) << " reg=" << sci(pr) << "  ";
    }
    return std::pair{pass, "corrected residual orders " + os.str()};
  });

  // Local Cauchy systems on the ellipse: shape, healthy factorization,
  // bounded conditioning that stays put under refinement.
  criterion(5, [&] {
    RunConfig cfg = load_config(dir + "/table1.cfg");
    std::vector<LevelSet> comps = make_components(cfg);
    Real med[2] = {0, 0}, worst = 0;
    bool pass = true;
    int gi = 0;
    for (int n : {64, 256}) {
      SurfaceMesh mesh =
          build_surface_mesh(build_grid(cfg.box_lo, cfg.box_hi, n), comps);
      CauchySolver cs(mesh, 0.0);
      std::vector<Real> conds;
      for (int i = 0; i < mesh.size(); ++i) {
        auto M = cs.matrix(i);
        pass = pass && M.rows() == 15 && M.cols() == 15 && !cs.used_fallback(i);
        Eigen::JacobiSVD<Matrix> svd(M);
        Real c = svd.singularValues()(0) /
                 svd.singularValues()(svd.singularValues().size() - 1);
        conds.push_back(c);
        worst = std::max(worst, c);
      }
      pass = pass && worst <= 1e5;
      std::nth_element(conds.begin(), conds.begin() + conds.size() / 2,
                       conds.end());
      med[gi++] = conds[conds.size() / 2];
    }
    Real drift = std::max(med[0] / med[1], med[1] / med[0]);
    pass = pass && drift < 2.0;
    return std::pair{pass, "collocation cond max=" + sci(worst) +
                               " median drift=" + sci(drift)};
  });

  // Jump recovery of the double operator: prescribed value and flux jumps are
  // reproduced by the two-sided traces at fifth and fourth order.
  criterion(6, [&] {
    std::vector<LevelSet> comps = {make_circle(0.59, 0.0131, -0.0272)};
    Real ev[2], en[2];
    int gi = 0;
    for (int n : {64, 128}) {
      Grid2D g = build_grid(-1, 1, n);
      NodeClassification cls = classify_nodes(g, comps);
      SurfaceMesh mesh = build_surface_mesh(g, comps);
      const int nb = mesh.size();
      Vector av(nb), bv(nb), zero = Vector::Zero(nb);
      for (int k = 0; k < nb; ++k) {
        const Vec2& x = mesh.pts[k].p;
        av[k] = std::sin(2.1 * x[0]) * std::cosh(0.7 * x[1]);
        bv[k] = std::cos(1.3 * x[0] + 0.4 * x[1]);
      }
      PotentialSolver ps(cls, mesh, 1.0);
      TraceExtractor ex(cls, mesh);
      Matrix ca, cb;
      GridField va = ps.solve({av, zero, nullptr}, nullptr, nullptr, &ca);
      GridField vb = ps.solve({zero, bv, nullptr}, nullptr, nullptr, &cb);
      Vector vi, ve, ni, ne;
      ex.traces(va, ca, Side::interior, &vi, nullptr);
      ex.traces(va, ca, Side::exterior, &ve, nullptr);
      ev[gi] = ((vi - ve) - av).cwiseAbs().maxCoeff();
      ex.traces(vb, cb, Side::interior, nullptr, &ni);
      ex.traces(vb, cb, Side::exterior, nullptr, &ne);
      en[gi] = ((ni - ne) - bv).cwiseAbs().maxCoeff();
      ++gi;
    }
    Real pv = std::log2(ev[0] / ev[1]);
    Real pn = std::log2(en[0] / en[1]);
    bool pass = pv >= 4.5 && pn >= 3.5 && ev[1] <= 2e-6;
    return std::pair{pass, "jump recovery orders value=" + sci(pv) +
                               " flux=" + sci(pn) + " e128=" + sci(ev[1])};
  });

  // Zero jumps with one global smooth solution: the interface path reproduces
  // the plain box solve bitwise, and trace extraction of sampled polynomial
  // data is exact to rounding.
  criterion(7, [&] {
    Grid2D g = build_grid(-1, 1, 48);
    std::vector<LevelSet> comps = {make_circle(0.55, 0.02, -0.01)};
    NodeClassification cls = classify_nodes(g, comps);
    SurfaceMesh mesh = build_surface_mesh(g, comps);
    const Real kh = 1.3;
    ExactSolution u = make_exp_sine(0.8, 0.9, 0.5);
    RegionSource src = kfbi_test::source_of(u, 1, kh);
    PotentialSolver ps(cls, mesh, kh);
    GridField via =
        solve_simple_interface(ps, cls, nullptr, nullptr, {src, src}, u.value);
    GridField F = build_volume_source(cls, {src, src}, kh);
    CompactStencil s = CompactStencil::make(kh, g.h());
    apply_boundary_lifting(F, s, u.value);
    GridField plain = SineSolver(g, kh).solve(F);
    set_boundary(plain, u.value);
    bool bitwise = (via.v == plain.v).all();

    Grid2D g2 = build_grid(-1, 1, 32);
    std::vector<LevelSet> comps2 = {make_circle(0.55, 0.015, -0.025)};
    NodeClassification cls2 = classify_nodes(g2, comps2);
    SurfaceMesh mesh2 = build_surface_mesh(g2, comps2);
    TraceExtractor ex(cls2, mesh2);
    auto poly = [](const Vec2& x) {
      return std::pow(x[0], 5) - 3 * x[0] * x[0] * std::pow(x[1], 3) +
             2 * x[0] * x[1] - 7 + 0.3 * std::pow(x[1], 4);
    };
    GridField up(g2);
    for (int i = 0; i <= g2.n; ++i)
      for (int j = 0; j <= g2.n; ++j) up(i, j) = poly(g2.node(i, j));
    Matrix zero = Matrix::Zero(basis::kSize, mesh2.size());
    Vector vi, ve;
    ex.traces(up, zero, Side::interior, &vi, nullptr);
    ex.traces(up, zero, Side::exterior, &ve, nullptr);
    Real einterp = 0;
    for (int k = 0; k < mesh2.size(); ++k) {
      Real pk = poly(mesh2.pts[k].p);
      einterp = std::max(einterp,
                         std::max(std::abs(vi[k] - pk), std::abs(ve[k] - pk)));
    }
    bool pass = bitwise && einterp <= 1e-11;
    return std::pair{pass, std::string("zero-jump reduction bitwise=") +
                               (bitwise ? "yes" : "no") +
                               " extraction err=" + sci(einterp)};
  });

  // Pure Neumann at zero reaction: the deflated system converges and the
  // mean-shifted field keeps high order.
  // The shifted error tracks the discrete compatibility defect, which decays
  // erratically pair to pair, so the order is measured across the full range.
  criterion(8, [&] {
    RunConfig cfg = load_config(dir + "/table1.cfg");
    cfg.problem = "neumann";
    cfg.solution_interior = "exp_x_sin_y";
    cfg.grids = {64, 128, 256};
    std::vector<GridRunResult> rows;
    bool pass = true;
    for (int n : cfg.grids) {
      rows.push_back(run_grid(cfg, n));
      pass = pass && rows.back().converged && rows.back().incompatibility < 0.05;
    }
    Real p = std::log2(rows.front().linf_int / rows.back().linf_int) / 2;
    pass = pass && p >= 3.5;
    return std::pair{pass, "neumann kappa=0 mean order=" + sci(p) +
                               " e256=" + sci(rows.back().linf_int) +
                               " it=" + std::to_string(rows.back().iterations)};
  });

  // Two circles separated by 0.3h on every grid, so cut segments that cross
  // both interfaces are present at every resolution. The transmission solve
  // must record those double crossings, converge, and keep refining at third
  // order or better. (A Dirichlet BVP on the same geometry is a different
  // animal: its exact density develops an O(sqrt(r*gap)) boundary layer at
  // the pinch that no fixed-degree local basis resolves while gap ~ h.)
  criterion(9, [&] {
    int min_doubles = 1 << 30;
    std::vector<GridRunResult> rows;
    bool conv = true;
    for (int n : {64, 128, 256}) {
      const Real h = 2.0 / n;
      const Real gap = 0.3 * h;
      const Real off = 0.3 + gap / 2;
      const Real shift = h / 2; // centers the gap between two node columns
      RunConfig cfg;
      cfg.problem = "interface_single";
      cfg.box_lo = -1;
      cfg.box_hi = 1;
      cfg.components = {{"circle", {0.3, shift - off, 0.0}},
                        {"circle", {0.3, shift + off, 0.0}}};
      cfg.solution_interior = "exp_linear";
      cfg.solution_exterior = "sin_product";
      cfg.sigma_ext = 3.0;

      NodeClassification cls =
          classify_nodes(build_grid(-1, 1, n), make_components(cfg));
      int doubles = 0;
      for (const IrregularNode& rec : cls.irregulars)
        for (const CutNeighbor& cn : rec.cuts)
          if (cn.crossings.size() >= 2) ++doubles;
      min_doubles = std::min(min_doubles, doubles);

      rows.push_back(run_grid(cfg, n));
      conv = conv && rows.back().converged;
    }
    Real pi = std::log2(rows[0].linf_int / rows[2].linf_int) / 2;
    Real pe = std::log2(rows[0].linf_ext / rows[2].linf_ext) / 2;
    bool pass = min_doubles > 0 && conv && pi >= 3.0 && pe >= 3.0;
    return std::pair{pass, "double-crossing segments>=" +
                               std::to_string(min_doubles) +
                               " order int=" + sci(pi) + " ext=" + sci(pe) +
                               " e256=" + sci(rows[2].linf_int)};
  });

  return failures;
}
