#include "outflux/cutoffs.hpp"

#include <algorithm>
#include <cmath>

namespace outflux {

double psi_eval(double t, int order) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return order == 0 ? 1.0 : 0.0;
  const double t2 = t * t;
  switch (order) {
    case 0: return t2 * t * (10.0 - 15.0 * t + 6.0 * t2);
    case 1: return 30.0 * t2 * (1.0 - t) * (1.0 - t);
    case 2: return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    default: throw PreconditionError("psi_eval order must be 0, 1 or 2");
  }
}

OutletCutoff::OutletCutoff(OutletProfile profile, double gamma, double epsilon)
    : profile_(std::move(profile)), gamma_(gamma), epsilon_(epsilon) {
  if (!(gamma > 0.0) || !(epsilon > 0.0))
    throw PreconditionError("outlet cutoff needs gamma > 0 and eps > 0");
}

OutletCutoff OutletCutoff::strip(double delta, double epsilon) {
  return OutletCutoff(OutletProfile::constant(delta, 0.0), 1.0, epsilon);
}

double OutletCutoff::g(double x1) const { return profile_.value(std::max(x1, profile_.r_star())); }

std::pair<double, double> OutletCutoff::band(double x1) const {
  const double gx = g(x1);
  return {gamma_ * gx / (std::exp(1.0 / epsilon_) + gamma_), gamma_ * gx / (1.0 + gamma_)};
}

bool OutletCutoff::in_transition_band(const Vec2& x) const {
  const auto [lo, hi] = band(x(0));
  const double y = std::abs(x(1));
  return y >= lo * (1.0 - 1e-12) && y <= hi * (1.0 + 1e-12);
}

ScalarJet OutletCutoff::eval(const Vec2& x) const {
  const double x1 = x(0), y = x(1);
  const bool flat = x1 < profile_.r_star();
  const double gx = g(x1);
  const double g1 = flat ? 0.0 : profile_.d1(x1);
  const double g2 = flat ? 0.0 : profile_.d2(x1);
  if (y < 0.0 || y > gx * (1.0 + 1e-14))
    throw PreconditionError("xi evaluated outside the outlet upper half");
  ScalarJet jet;
  if (y == 0.0) {
    jet.value = 1.0;
    return jet;
  }
  const double gap = gx - y;
  if (gap <= 0.0) return jet;
  const double s = epsilon_ * (std::log(gamma_) + std::log(gap) - std::log(y));
  if (s >= 1.0) {
    jet.value = 1.0;
    return jet;
  }
  if (s <= 0.0) return jet;
  const double e = epsilon_;
  const Vec2 ds(e * g1 / gap, e * (-1.0 / gap - 1.0 / y));
  Mat2 hs;
  hs(0, 0) = e * (g2 * gap - g1 * g1) / (gap * gap);
  hs(0, 1) = hs(1, 0) = e * g1 / (gap * gap);
  hs(1, 1) = e * (-1.0 / (gap * gap) + 1.0 / (y * y));
  const double p1 = psi_eval(s, 1), p2 = psi_eval(s, 2);
  jet.value = psi_eval(s, 0);
  jet.grad = p1 * ds;
  jet.hess = p2 * ds * ds.transpose() + p1 * hs;
  return jet;
}

XiBoundReport xi_bound_check(const OutletCutoff& cutoff, int samples, double x1_lo,
                             double x1_hi) {
  if (samples < 100) throw PreconditionError("xi_bound_check needs at least 100 samples");
  XiBoundReport r;
  const int n1 = samples, n2 = samples;
  for (int i = 0; i <= n1; ++i) {
    const double x1 = x1_lo + (x1_hi - x1_lo) * i / n1;
    const double gx = cutoff.g(x1);
    auto [lo, hi] = cutoff.band(x1);
    // Log-spaced heights from lo/4 up to min(2 hi, g).
    const double a = std::log(lo / 4.0), b = std::log(std::min(2.0 * hi, gx * (1.0 - 1e-9)));
    for (int j = 0; j <= n2; ++j) {
      const Vec2 x(x1, std::exp(a + (b - a) * j / n2));
      const ScalarJet jet = cutoff.eval(x);
      const double gmax = jet.grad.cwiseAbs().maxCoeff();
      const double hmax = jet.hess.cwiseAbs().maxCoeff();
      r.sup_grad_x2_over_eps = std::max(r.sup_grad_x2_over_eps, gmax * x(1) / cutoff.epsilon());
      r.sup_grad_g = std::max(r.sup_grad_g, gmax * gx);
      r.sup_hess_g2 = std::max(r.sup_hess_g2, hmax * gx * gx);
      if (gmax > 0.0 && !cutoff.in_transition_band(x)) r.support_ok = false;
      ++r.points;
    }
  }
  return r;
}

TruncationCutoff::TruncationCutoff(const TruncationLadder& ladder, const OutletProfile& profile,
                                   int k) {
  if (k < 0 || k >= ladder.K()) throw PreconditionError("theta_k needs 0 <= k < K");
  lo_ = ladder.R(k);
  hi_ = ladder.R(k + 1);
  g_start_ = profile.value(lo_);
  bound_constant_ = 2.0 * ladder.L_eff * kPsiSlopeMax;
}

ScalarJet TruncationCutoff::eval(const Vec2& x) const {
  const double w = hi_ - lo_, t = (hi_ - x(0)) / w;
  ScalarJet jet;
  jet.value = psi_eval(t, 0);
  jet.grad(0) = -psi_eval(t, 1) / w;
  jet.hess(0, 0) = psi_eval(t, 2) / (w * w);
  return jet;
}

HopfCutoff::HopfCutoff(double epsilon, double rho) : epsilon_(epsilon), rho_(rho) {
  if (!(epsilon > 0.0) || !(rho > 0.0)) throw PreconditionError("Hopf cutoff needs eps, rho > 0");
}

double HopfCutoff::inner() const { return rho_ * std::exp(-1.0 / epsilon_); }

std::array<double, 3> HopfCutoff::eval(double d) const {
  if (d <= 0.0) return {1.0, 0.0, 0.0};
  const double s = epsilon_ * std::log(rho_ / d);
  if (s >= 1.0) return {1.0, 0.0, 0.0};
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  // s' = -eps/d, s'' = eps/d^2.
  const double s1 = -epsilon_ / d, s2 = epsilon_ / (d * d);
  const double p1 = psi_eval(s, 1);
  return {psi_eval(s, 0), p1 * s1, psi_eval(s, 2) * s1 * s1 + p1 * s2};
}

}  // namespace outflux
