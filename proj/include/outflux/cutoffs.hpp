// Smooth transition Psi and the cutoffs built from it: the outlet cutoff xi,
// the strip cutoff xi_delta, the truncation cutoff theta_k and the Hopf
// cutoff chi of a boundary distance.
#pragma once

#include "outflux/common.hpp"
#include "outflux/geometry.hpp"

namespace outflux {

/// Quintic 10t^3 - 15t^4 + 6t^5 clamped to [0, 1]; order 0, 1 or 2.
double psi_eval(double t, int order = 0);
inline constexpr double kPsiSlopeMax = 1.875;  // Psi'(1/2)

/// xi(x) = Psi(eps * ln(gamma (g(x1) - x2) / x2)) for 0 <= x2 <= g(x1); the
/// profile is frozen at g(R_star) for x1 < R_star.
class OutletCutoff {
 public:
  OutletCutoff(OutletProfile profile, double gamma, double epsilon);
  /// Strip cutoff xi_delta: g = delta, gamma = 1.
  static OutletCutoff strip(double delta, double epsilon);

  double g(double x1) const;
  double gamma() const { return gamma_; }
  double epsilon() const { return epsilon_; }
  const OutletProfile& profile() const { return profile_; }

  /// Value, gradient and Hessian at x with 0 <= x2 <= g(x1). Returns value 1
  /// and zero derivatives on the axis. Throws PreconditionError otherwise.
  ScalarJet eval(const Vec2& x) const;
  /// Whether x lies in the band (1+gamma) x2 / gamma <= g <= (e^{1/eps}+gamma) x2 / gamma.
  bool in_transition_band(const Vec2& x) const;
  /// Band limits in x2 at abscissa x1: [lower, upper].
  std::pair<double, double> band(double x1) const;

 private:
  OutletProfile profile_;
  double gamma_;
  double epsilon_;
};

struct XiBoundReport {
  double sup_grad_x2_over_eps = 0.0;  // max_i |d_i xi| * x2 / eps
  double sup_grad_g = 0.0;            // max_i |d_i xi| * g(x1)
  double sup_hess_g2 = 0.0;           // max_ij |d_ij xi| * g(x1)^2
  bool support_ok = true;             // nonzero gradient only inside the band
  int points = 0;
};

/// Deterministic samples on [x1_lo, x1_hi]: `samples` abscissas times
/// `samples` log-spaced heights spanning the transition band plus margins.
XiBoundReport xi_bound_check(const OutletCutoff& cutoff, int samples, double x1_lo,
                             double x1_hi);

/// theta_k(x) = Psi((R_{k+1} - x1) / (R_{k+1} - R_k)).
class TruncationCutoff {
 public:
  TruncationCutoff(const TruncationLadder& ladder, const OutletProfile& profile, int k);

  ScalarJet eval(const Vec2& x) const;
  /// c in |grad theta_k| <= c / g(R_k).
  double bound_constant() const { return bound_constant_; }
  double g_at_start() const { return g_start_; }
  double start() const { return lo_; }
  double end() const { return hi_; }

 private:
  double lo_, hi_, g_start_, bound_constant_;
};

/// chi(d) = Psi(eps * ln(rho / d)): 1 for d <= rho e^{-1/eps}, 0 for d >= rho,
/// with |chi'(d)| <= 1.875 eps / d.
class HopfCutoff {
 public:
  HopfCutoff(double epsilon, double rho);

  /// (chi, chi', chi'') at distance d > 0.
  std::array<double, 3> eval(double d) const;
  double inner() const;  // rho e^{-1/eps}
  double rho() const { return rho_; }
  double epsilon() const { return epsilon_; }

 private:
  double epsilon_, rho_;
};

}  // namespace outflux
