// Manufactured channel flow shared by the solver tests and the acceptance run.
#pragma once

#include "outflux/cutoffs.hpp"
#include "outflux/solver.hpp"

#include <algorithm>
#include <cmath>

namespace outflux::testing {

/// Channel |x2| < 1 from x1 = 0 with unit flux.
inline DomainSpec poiseuille_channel() {
  DomainSpec d;
  d.profile = OutletProfile::constant(1.0, 0.0);
  d.gamma = 1.0;
  d.x_left = 0.0;
  d.R0 = 2.0;
  return d;
}

/// Exact solution (3/4 (1 - x2^2), 0).
inline Vec2 poiseuille(const Vec2& x) { return Vec2(0.75 * (1.0 - x(1) * x(1)), 0.0); }

/// Smooth solenoidal extension of the parabolic inflow: the stream function
/// blends from the parabolic profile to the quartic 15/16 (1 - x2^2)^2 over
/// x1 in [1/2, 3/2] with the quintic transition. Both profiles carry unit
/// flux, so the field vanishes on the walls.
inline FieldSample blended_extension(const Vec2& x) {
  const double y = std::abs(x(1)), sg = x(1) < 0.0 ? -1.0 : 1.0;
  const double t = std::clamp(x(0) - 0.5, 0.0, 1.0);
  const double th = psi_eval(t), th1 = psi_eval(t, 1), th2 = psi_eval(t, 2);
  const double P = 0.75 * (y - y * y * y / 3.0), P1 = 0.75 * (1.0 - y * y), P2 = -1.5 * y;
  const double Q = 15.0 / 16.0 * (y - 2.0 * y * y * y / 3.0 + std::pow(y, 5) / 5.0);
  const double Q1 = 15.0 / 16.0 * (1.0 - y * y) * (1.0 - y * y);
  const double Q2 = -15.0 / 4.0 * y * (1.0 - y * y);
  FieldSample s;
  s.value = Vec2((1.0 - th) * P1 + th * Q1, -sg * th1 * (Q - P));
  s.grad << th1 * (Q1 - P1), sg * ((1.0 - th) * P2 + th * Q2), -sg * th2 * (Q - P),
      -th1 * (Q1 - P1);
  return s;
}

/// L^2 distance of A + v from the Poiseuille profile over cells with
/// x1 <= window.
inline double poiseuille_error(const DiscreteField& v, const FieldFn& A, double window) {
  const auto& space = *v.space();
  const auto& g = space.grid();
  const GaussRule& r = cell_rule();
  double err = 0.0;
  for (const auto& [i, j] : space.cells()) {
    if (g.xs[i + 1] > window + 1e-12) continue;
    const double hx = g.xs[i + 1] - g.xs[i], hy = g.ys[j + 1] - g.ys[j];
    for (int p = 0; p < 25; ++p) {
      const double s = r.nodes[p / 5], t = r.nodes[p % 5];
      const Vec2 x(g.xs[i] + hx * s, g.ys[j] + hy * t);
      const Vec2 u = A(x).value + v.eval_local(i, j, s, t).value;
      err += 2.0 * hx * hy * r.weights[p / 5] * r.weights[p % 5] * (u - poiseuille(x)).squaredNorm();
    }
  }
  return std::sqrt(err);
}

}  // namespace outflux::testing
