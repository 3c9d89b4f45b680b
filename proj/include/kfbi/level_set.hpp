#ifndef KFBI_LEVEL_SET_HPP
#define KFBI_LEVEL_SET_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "kfbi/types.hpp"

namespace kfbi {

// Implicit curve H(x) = 0 with H < 0 inside. Gradient is analytic for every
// built-in shape; the Hessian evaluator falls back to central differences of
// the gradient when no closed form is supplied.
class LevelSet {
 public:
  using ValueFn = std::function<Real(const Vec2&)>;
  using GradFn = std::function<Vec2(const Vec2&)>;
  using HessFn = std::function<Mat2(const Vec2&)>;

  LevelSet() = default;
  LevelSet(std::string name, ValueFn value, GradFn grad, HessFn hess = nullptr)
      : name_(std::move(name)),
        value_(std::move(value)),
        grad_(std::move(grad)),
        hess_(std::move(hess)) {}

  const std::string& name() const { return name_; }
  Real value(const Vec2& x) const { return value_(x); }
  Vec2 gradient(const Vec2& x) const { return grad_(x); }
  Mat2 hessian(const Vec2& x) const {
    if (hess_) return hess_(x);
    const Real d = 1e-6;
    Mat2 out;
    for (int k = 0; k < 2; ++k) {
      Vec2 e = Vec2::Zero();
      e[k] = d;
      Vec2 col = (grad_(x + e) - grad_(x - e)) / (2 * d);
      out.col(k) = col;
    }
    return 0.5 * (out + out.transpose());
  }
  Vec2 unit_normal(const Vec2& x) const {
    Vec2 g = grad_(x);
    return g / g.norm();
  }

 private:
  std::string name_;
  ValueFn value_;
  GradFn grad_;
  HessFn hess_;
};

inline LevelSet make_circle(Real r, Real cx, Real cy) {
  Vec2 c{cx, cy};
  return LevelSet(
      "circle",
      [c, r](const Vec2& x) { return (x - c).squaredNorm() - r * r; },
      [c](const Vec2& x) -> Vec2 { return 2 * (x - c); },
      [](const Vec2&) -> Mat2 { return 2 * Mat2::Identity(); });
}

// Ellipse with semi-axes a, b rotated by theta about its center.
inline LevelSet make_ellipse(Real a, Real b, Real theta, Real cx = 0,
                             Real cy = 0) {
  const Real ct = std::cos(theta), st = std::sin(theta);
  Vec2 c{cx, cy};
  // H = (x'/a)^2 + (y'/b)^2 - 1 is the quadratic form x^T Q x - 1 in
  // centered coordinates, so the gradient and Hessian are exact.
  Mat2 rot;
  rot << ct, st, -st, ct;
  Mat2 d = Mat2::Zero();
  d(0, 0) = 1 / (a * a);
  d(1, 1) = 1 / (b * b);
  Mat2 q = rot.transpose() * d * rot;
  return LevelSet(
      "ellipse",
      [c, q](const Vec2& x) {
        Vec2 z = x - c;
        return z.dot(q * z) - 1.0;
      },
      [c, q](const Vec2& x) -> Vec2 { return 2 * (q * (x - c)); },
      [q](const Vec2&) -> Mat2 { return 2 * q; });
}

// Five-petal style star: H = x^2/a^2 + y^2/b^2 - (1 + eps sin(m atan2(y,x)))^2.
inline LevelSet make_star(Real a, Real b, Real eps, int m, Real cx = 0,
                          Real cy = 0) {
  Vec2 c{cx, cy};
  return LevelSet(
      "star",
      [=](const Vec2& p) {
        Vec2 z = p - c;
        Real th = std::atan2(z[1], z[0]);
        Real w = 1.0 + eps * std::sin(m * th);
        return z[0] * z[0] / (a * a) + z[1] * z[1] / (b * b) - w * w;
      },
      [=](const Vec2& p) -> Vec2 {
        Vec2 z = p - c;
        Real th = std::atan2(z[1], z[0]);
        Real r2 = z.squaredNorm();
        Real w = 1.0 + eps * std::sin(m * th);
        Real dw = eps * m * std::cos(m * th);
        return {2 * z[0] / (a * a) + 2 * w * dw * z[1] / r2,
                2 * z[1] / (b * b) - 2 * w * dw * z[0] / r2};
      });
}

// Half plane n.x < d inside; used by straight-interface tests.
inline LevelSet make_line(const Vec2& n, Real d) {
  Vec2 nu = n / n.norm();
  return LevelSet(
      "line", [nu, d](const Vec2& x) { return nu.dot(x) - d; },
      [nu](const Vec2&) -> Vec2 { return nu; },
      [](const Vec2&) -> Mat2 { return Mat2::Zero(); });
}

// Union of shapes as a single component: H = min_k H_k. The gradient follows
// the active branch, so it is correct away from equidistant seams.
inline LevelSet make_union(std::vector<LevelSet> parts) {
  auto active = [parts](const Vec2& x) {
    std::size_t best = 0;
    Real bv = parts[0].value(x);
    for (std::size_t k = 1; k < parts.size(); ++k) {
      Real v = parts[k].value(x);
      if (v < bv) {
        bv = v;
        best = k;
      }
    }
    return best;
  };
  return LevelSet(
      "union",
      [parts](const Vec2& x) {
        Real bv = parts[0].value(x);
        for (std::size_t k = 1; k < parts.size(); ++k)
          bv = std::min(bv, parts[k].value(x));
        return bv;
      },
      [parts, active](const Vec2& x) -> Vec2 {
        return parts[active(x)].gradient(x);
      },
      [parts, active](const Vec2& x) -> Mat2 {
        return parts[active(x)].hessian(x);
      });
}

} // namespace kfbi

#endif
