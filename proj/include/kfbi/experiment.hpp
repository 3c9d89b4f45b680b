#ifndef KFBI_EXPERIMENT_HPP
#define KFBI_EXPERIMENT_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kfbi/bie.hpp"
#include "kfbi/config.hpp"
#include "kfbi/solutions.hpp"
#include "kfbi/types.hpp"

namespace kfbi {

struct GridRunResult {
  int n = 0;
  int nb = 0;
  int iterations = 0;
  Real l2_int = 0, linf_int = 0;
  Real l2_ext = 0, linf_ext = 0;
  Real seconds = 0;
  Real residual = 0;
  bool converged = false;
  Real incompatibility = 0;
  std::vector<Real> history;
  GridField u;
};

struct ExperimentResult {
  RunConfig config;
  std::vector<GridRunResult> rows;
};

// log2(coarse/fine); NaN when either error vanishes.
inline Real convergence_order(Real e_coarse, Real e_fine) {
  if (!(e_coarse > 0) || !(e_fine > 0))
    return std::numeric_limits<Real>::quiet_NaN();
  return std::log2(e_coarse / e_fine);
}

namespace detail {

inline RegionSource source_of(const ExactSolution& u, Real sigma, Real kappa) {
  RegionSource s;
  s.f = [=](const Vec2& x) { return sigma * u.laplacian(x) - kappa * u.value(x); };
  s.lap = [=](const Vec2& x) {
    return sigma * u.bilaplacian(x) - kappa * u.laplacian(x);
  };
  return s;
}

} // namespace detail

// Manufactured data and one solve on an n-grid. Every boundary and source
// term is derived from the configured exact solutions, and the errors are
// measured against them per region (exterior over box-interior nodes).
inline GridRunResult run_grid(const RunConfig& cfg, int n) {
  GridRunResult row;
  row.n = n;

  const auto t0 = std::chrono::steady_clock::now();
  Grid2D grid = build_grid(cfg.box_lo, cfg.box_hi, n);
  BieSolver solver(grid, make_components(cfg), cfg.alpha_deg * kPi / 180);
  row.nb = solver.mesh().size();

  ExactSolution ui = find_solution(cfg.solution_interior);
  BieSolution sol;
  bool shift_invariant = false;

  if (cfg.problem == "dirichlet" || cfg.problem == "neumann") {
    BvpData d;
    d.sigma = cfg.sigma_int;
    d.kappa = cfg.kappa_int;
    d.f = detail::source_of(ui, d.sigma, d.kappa);
    if (cfg.problem == "dirichlet") {
      d.g = ui.value;
      sol = solver.solve_dirichlet(d, cfg.tol, cfg.max_iterations);
    } else {
      d.flux = [&ui, s = d.sigma](const Vec2& x, const Vec2& nrm) {
        return s * ui.gradient(x).dot(nrm);
      };
      shift_invariant = cfg.kappa_int == 0;
      sol = solver.solve_neumann(d, cfg.tol, cfg.max_iterations);
    }
  } else {
    ExactSolution ue = find_solution(cfg.solution_exterior);
    InterfaceData d;
    d.sigma_int = cfg.sigma_int;
    d.sigma_ext = cfg.sigma_ext;
    d.kappa_int = cfg.kappa_int;
    d.kappa_ext = cfg.kappa_ext;
    d.f_int = detail::source_of(ui, d.sigma_int, d.kappa_int);
    d.f_ext = detail::source_of(ue, d.sigma_ext, d.kappa_ext);
    d.g1 = [&](const Vec2& x) { return ui.value(x) - ue.value(x); };
    d.g2 = [&](const Vec2& x, const Vec2& nrm) {
      return d.sigma_int * ui.gradient(x).dot(nrm) -
             d.sigma_ext * ue.gradient(x).dot(nrm);
    };
    d.box = ue.value;
    sol = cfg.problem == "interface_single"
              ? solver.solve_interface_single(d, cfg.tol, cfg.max_iterations)
              : solver.solve_interface_two(d, cfg.tol, cfg.max_iterations);
  }
  row.seconds =
      std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0)
          .count();

  row.iterations = sol.stats.iterations;
  row.residual = sol.stats.residual;
  row.converged = sol.stats.converged;
  row.incompatibility = sol.stats.incompatibility;
  row.history = std::move(sol.stats.history);
  row.u = std::move(sol.u);

  const NodeClassification& cls = solver.classification();
  const ExactSolution* ue_ptr = nullptr;
  ExactSolution ue;
  if (cfg.is_interface()) {
    ue = find_solution(cfg.solution_exterior);
    ue_ptr = &ue;
  }

  // Pure Neumann determines the field up to a constant; compare after the
  // L2-optimal shift over the interior node set.
  Real shift = 0;
  if (shift_invariant) {
    Real sum = 0;
    long count = 0;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        if (cls.region(i, j) > 0) {
          sum += ui.value(grid.node(i, j)) - row.u(i, j);
          ++count;
        }
    if (count > 0) shift = sum / count;
  }

  Real s2i = 0, s2e = 0;
  long mi = 0, me = 0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      Vec2 x = grid.node(i, j);
      if (cls.region(i, j) > 0) {
        Real e = std::abs(row.u(i, j) + shift - ui.value(x));
        s2i += e * e;
        row.linf_int = std::max(row.linf_int, e);
        ++mi;
      } else if (ue_ptr && !grid.on_boundary(i, j)) {
        Real e = std::abs(row.u(i, j) - ue_ptr->value(x));
        s2e += e * e;
        row.linf_ext = std::max(row.linf_ext, e);
        ++me;
      }
    }
  if (mi > 0) row.l2_int = std::sqrt(s2i / mi);
  if (me > 0) row.l2_ext = std::sqrt(s2e / me);
  return row;
}

inline ExperimentResult run_experiment(const RunConfig& cfg,
                                       std::ostream* log = nullptr) {
  ExperimentResult out;
  out.config = cfg;
  for (int n : cfg.grids) {
    out.rows.push_back(run_grid(cfg, n));
    if (log) {
      const GridRunResult& r = out.rows.back();
      *log << "N=" << r.n << " Nb=" << r.nb << " iters=" << r.iterations
           << " residual=" << r.residual
           << " converged=" << (r.converged ? 1 : 0)
           << " seconds=" << r.seconds << "\n";
      *log << "  history:";
      for (Real h : r.history) *log << " " << h;
      *log << "\n";
      log->flush();
    }
  }
  return out;
}

// CSV layout is part of the tool contract: fixed header, %.5e values.
inline void write_csv(std::ostream& out,
                      const std::vector<GridRunResult>& rows) {
  out << "N,Nb,iters,l2_interior,linf_interior,l2_exterior,linf_exterior,"
         "seconds\n";
  char buf[200];
  for (const GridRunResult& r : rows) {
    std::snprintf(buf, sizeof buf,
                  "%d,%d,%d,%.5e,%.5e,%.5e,%.5e,%.5e\n", r.n, r.nb,
                  r.iterations, r.l2_int, r.linf_int, r.l2_ext, r.linf_ext,
                  r.seconds);
    out << buf;
  }
}

inline void write_csv_file(const std::string& path,
                           const std::vector<GridRunResult>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_csv(out, rows);
}

// Field dumps round-trip bitwise: %.17g is enough to reproduce any double.
inline void write_field(std::ostream& out, const GridField& u) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", u.grid.n, u.grid.lo,
                u.grid.hi);
  out << buf;
  for (int i = 0; i <= u.grid.n; ++i)
    for (int j = 0; j <= u.grid.n; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g\n", u(i, j));
      out << buf;
    }
}

inline void write_field_file(const std::string& path, const GridField& u) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_field(out, u);
}

inline GridField read_field(std::istream& in) {
  int n;
  Real lo, hi;
  if (!(in >> n >> lo >> hi))
    throw std::runtime_error("field file: bad header");
  GridField u(build_grid(lo, hi, n));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      if (!(in >> u.v(i, j)))
        throw std::runtime_error("field file: truncated data");
  return u;
}

inline GridField read_field_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_field(in);
}

} // namespace kfbi

#endif
