#ifndef KFBI_SOLUTIONS_HPP
#define KFBI_SOLUTIONS_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>

#include "kfbi/types.hpp"

namespace kfbi {

// A manufactured solution with enough analytic derivatives to supply every
// derived datum a run needs: f = sigma lap u - kappa u and its Laplacian,
// boundary and jump data, and the reference values for error norms.
struct ExactSolution {
  std::function<Real(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
  std::function<Real(const Vec2&)> laplacian;
  std::function<Real(const Vec2&)> bilaplacian;
};

// u = Im exp((a + i c1) x + i c2 y) = e^{ax} sin(c1 x + c2 y); the complex
// form keeps all derivatives exact by construction.
inline ExactSolution make_exp_sine(Real a, Real c1, Real c2) {
  using C = std::complex<Real>;
  const C wx(a, c1), wy(0, c2);
  const C lam = wx * wx + wy * wy;
  auto E = [wx, wy](const Vec2& x) { return std::exp(wx * x[0] + wy * x[1]); };
  return {
      [E](const Vec2& x) { return E(x).imag(); },
      [E, wx, wy](const Vec2& x) -> Vec2 {
        C e = E(x);
        return {(wx * e).imag(), (wy * e).imag()};
      },
      [E, lam](const Vec2& x) { return (lam * E(x)).imag(); },
      [E, lam](const Vec2& x) { return (lam * lam * E(x)).imag(); },
  };
}

inline ExactSolution make_exp_linear(Real p, Real q) {
  const Real s = p * p + q * q;
  auto e = [p, q](const Vec2& x) { return std::exp(p * x[0] + q * x[1]); };
  return {
      e,
      [e, p, q](const Vec2& x) -> Vec2 {
        Real v = e(x);
        return {p * v, q * v};
      },
      [e, s](const Vec2& x) { return s * e(x); },
      [e, s](const Vec2& x) { return s * s * e(x); },
  };
}

inline ExactSolution make_sin_product(Real p, Real q, Real x0, Real y0) {
  const Real s = p * p + q * q;
  auto u = [=](const Vec2& x) {
    return std::sin(p * (x[0] - x0)) * std::sin(q * (x[1] - y0));
  };
  return {
      u,
      [=](const Vec2& x) -> Vec2 {
        return {p * std::cos(p * (x[0] - x0)) * std::sin(q * (x[1] - y0)),
                q * std::sin(p * (x[0] - x0)) * std::cos(q * (x[1] - y0))};
      },
      [u, s](const Vec2& x) { return -s * u(x); },
      [u, s](const Vec2& x) { return s * s * u(x); },
  };
}

inline ExactSolution make_constant(Real c) {
  return {
      [c](const Vec2&) { return c; },
      [](const Vec2&) -> Vec2 { return Vec2::Zero(); },
      [](const Vec2&) { return Real(0); },
      [](const Vec2&) { return Real(0); },
  };
}

// Built-in registry keyed by the ids accepted in run configs.
inline const ExactSolution& find_solution(const std::string& id) {
  static const std::map<std::string, ExactSolution> reg = {
      // e^x sin(x cos(pi/3) + y sin(pi/3))
      {"exp_sin_tilted", make_exp_sine(1.0, 0.5, std::sqrt(3.0) / 2)},
      {"exp_x_sin_y", make_exp_sine(1.0, 0.0, 1.0)},
      {"exp_linear", make_exp_linear(0.6, 0.8)},
      // sin(pi (x+1)/2) sin(pi (y+1)/2)
      {"sin_product", make_sin_product(M_PI / 2, M_PI / 2, -1.0, -1.0)},
      {"zero", make_constant(0.0)},
      {"one", make_constant(1.0)},
  };
  auto it = reg.find(id);
  if (it == reg.end())
    throw std::invalid_argument("unknown exact-solution id: " + id);
  return it->second;
}

} // namespace kfbi

#endif
