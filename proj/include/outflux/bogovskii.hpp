// Divergence equation div u = f with zero trace on the ladder cells
// omega_k = {R_k < x1 < R_{k+1}}, solved on the rescaled cell
// F(omega_k) = {0 < y1 < 1, |y2| < h_k(y1)} and pulled back.
#pragma once

#include "outflux/fem.hpp"
#include "outflux/geometry.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace outflux {

/// F(x) = (2L (x1 - R_k) / g(R_k), 2L x2 / g(R_k)) with L the ladder's
/// effective Lipschitz constant.
class BogovskiiTransform {
 public:
  BogovskiiTransform(const DomainSpec& spec, const TruncationLadder& ladder, int k);

  int k() const { return k_; }
  double L() const { return L_; }
  double R() const { return Rk_; }
  double R_next() const { return Rk1_; }
  /// 2L / g(R_k); the Jacobian determinant is scale()^2.
  double scale() const { return scale_; }
  double jacobian() const { return scale_ * scale_; }

  Vec2 forward(const Vec2& x) const;
  Vec2 inverse(const Vec2& y) const;
  /// Upper boundary h_k(y1) of the rescaled cell (the rescaled wall).
  double profile(double y1) const;
  /// Throws PreconditionError outside the closed cell.
  Vec2 checked_forward(const Vec2& x) const;

 private:
  DomainSpec spec_;
  int k_;
  double Rk_, Rk1_, gk_, L_, scale_;
};

struct TransformReport {
  double y1_min = 0.0, y1_max = 0.0;
  double max_abs_y2 = 0.0;       // over sampled boundary points
  double h_at_zero = 0.0;
  double lipschitz = 0.0;        // sampled Lipschitz constant of h_k
  double roundtrip_error = 0.0;  // max |F^{-1}(F(x)) - x|
  bool ok(double L) const;
};
/// Samples `points` boundary points of omega_k and checks the rescaled cell.
TransformReport check_transform(const BogovskiiTransform& t, int points);

struct StarCheck {
  int segments = 0;
  int failures = 0;
  bool pass() const { return failures == 0; }
};
/// Random segments from the triangle (0,0), (1,L), (1,-L) (shrunk by 2%
/// towards its centroid) to boundary points of the rescaled cell.
StarCheck star_check(const BogovskiiTransform& t, int segments, std::uint64_t seed);

struct ReferenceMeshSize {
  int n1 = 16;  // Q2 elements along y1
  int n2 = 16;  // Q2 elements across, even so the axis is a mesh line
};

/// Discrete solution on the rescaled cell: Q2 velocities on the mesh
/// y2 = h_k(y1) eta, P1 discontinuous multipliers.
struct DivSolution {
  int n1 = 0, n2 = 0;
  std::vector<Vec2> nodes;   // node positions (2 n1 + 1) x (2 n2 + 1), y1-major
  std::vector<Vec2> values;  // velocity per node in rescaled coordinates
  double grad_norm = 0.0;    // ||grad u||_{L^2(omega_k)} = ||grad_y v||
  double f_norm = 0.0;       // ||f||_{L^2(omega_k)}
  double ratio = 0.0;        // grad_norm / f_norm, 0 when f = 0
  double mean = 0.0;         // int f over omega_k before projection
  double residual = 0.0;     // discrete divergence defect, relative to f
  double physical_residual = 0.0;  // same defect recomputed in x coordinates
};

/// Minimizes ||grad u|| subject to the discrete constraint div u = f.
/// Throws PreconditionError when |int f| > compat_tol max(1, int |f|); the
/// remaining quadrature mean is projected out.
DivSolution solve_div(const BogovskiiTransform& t, const std::function<double(const Vec2&)>& f,
                      const ReferenceMeshSize& mesh = {}, double compat_tol = 1e-8);

/// Mirror average (u1 even, u2 odd in x2) of a solution.
void symmetrize(DivSolution& s);

struct HatCorrector {
  DivSolution solution;
  double compatibility = 0.0;  // int grad theta_k . v over omega_k
  double grad_v = 0.0;         // ||grad v||_{L^2(omega_k)}
  double ratio = 0.0;          // ||grad v_hat|| / ||grad v||
};

/// v_hat on omega_k with div v_hat = -grad theta_k . v, symmetrized. Throws
/// PreconditionError when the compatibility residual exceeds 1e-6 (v is not
/// solenoidal).
HatCorrector corrector_hat_v(const DiscreteField& v, const DomainSpec& spec,
                             const TruncationLadder& ladder, int k,
                             const ReferenceMeshSize& mesh = {});

}  // namespace outflux
