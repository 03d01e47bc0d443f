#pragma once

#include <functional>
#include <vector>

namespace outflux {

/// Gauss-Legendre rule on [0, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped to [0, 1]; cached per n.
const GaussRule& gauss_legendre(int n);

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

/// Composite Gauss rule on [a, b] with equal panels (nodes in physical
/// coordinates, weights include the panel length).
GaussRule composite_rule(double a, double b, int panels, int order);

/// Composite Gauss rule on [a, b] whose panels shrink geometrically (ratio
/// 1/2) towards a, down to a panel of width `finest`.
GaussRule graded_rule(double a, double b, double finest, int order);

/// Adaptive Gauss-Kronrod (7-15) with bisection. `rel_tol` is relative to
/// the integral magnitude; `abs_floor` stops refinement for integrals that
/// are essentially zero. Throws NumericError on non-convergence.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol = 1e-10, double abs_floor = 1e-14,
                              unsigned max_depth = 40);

/// Same, on [a, +inf).
QuadResult integrate_to_infinity(const std::function<double(double)>& f, double a,
                                 double rel_tol = 1e-10);

/// Splits [a, b] at `breaks` (ignoring those outside) and sums adaptive
/// integrals over the pieces.
QuadResult integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                               std::vector<double> breaks, double rel_tol = 1e-10,
                               double abs_floor = 1e-14);

}  // namespace outflux
