#include "doctest.h"

#include "outflux/cutoffs.hpp"

#include <cmath>
#include <random>

using namespace outflux;

namespace {

// Finite differences of the value and of the gradient with a step scaled to
// the distance from the axis.
void check_jet_by_differences(const OutletCutoff& c, const Vec2& x, double tol) {
  const ScalarJet jet = c.eval(x);
  const double step = 1e-4 * x(1);
  Vec2 fd;
  Mat2 fdh;
  // Fourth-order stencil.
  for (int i = 0; i < 2; ++i) {
    Vec2 e = Vec2::Zero();
    e(i) = step;
    fd(i) = (8 * (c.eval(x + e).value - c.eval(x - e).value) - c.eval(x + 2 * e).value +
             c.eval(x - 2 * e).value) / (12 * step);
    fdh.col(i) = (8 * (c.eval(x + e).grad - c.eval(x - e).grad) - c.eval(x + 2 * e).grad +
                  c.eval(x - 2 * e).grad) / (12 * step);
  }
  CHECK((fd - jet.grad).norm() <= tol * jet.grad.norm() + 1e-12);
  CHECK((fdh - jet.hess).norm() <= 10 * tol * jet.hess.norm() + 1e-9);
}

}  // namespace

TEST_CASE("psi flat regions and midpoint") {
  CHECK(psi_eval(-1.0) == 0.0);
  CHECK(psi_eval(2.0) == 1.0);
  CHECK(psi_eval(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(psi_eval(0.5, 1) == doctest::Approx(kPsiSlopeMax));
  CHECK(psi_eval(1.5, 1) == 0.0);
  CHECK(psi_eval(-0.5, 2) == 0.0);
}

TEST_CASE("psi derivatives match central differences") {
  const double h = 1e-5;
  for (double t : {0.1, 0.3, 0.62, 0.9}) {
    CHECK(psi_eval(t, 1) == doctest::Approx((psi_eval(t + h) - psi_eval(t - h)) / (2 * h)).epsilon(1e-8));
    CHECK(psi_eval(t, 2) ==
          doctest::Approx((psi_eval(t + h, 1) - psi_eval(t - h, 1)) / (2 * h)).epsilon(1e-7));
  }
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = psi_eval(-0.1 + 1.2 * i / 1000.0);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("xi is one on the axis and vanishes at the wall") {
  const OutletCutoff c(OutletProfile::constant(1.0, 0.0), 1.0, 0.1);
  CHECK(c.eval(Vec2(3.0, 0.0)).value == 1.0);
  CHECK(c.eval(Vec2(3.0, 1e-12)).value == 1.0);
  CHECK(c.eval(Vec2(3.0, 1e-12)).grad.norm() == 0.0);
  CHECK(c.eval(Vec2(3.0, 1.0 - 1e-6)).value == 0.0);
  CHECK_THROWS_AS(c.eval(Vec2(3.0, 1.5)), PreconditionError);
}

TEST_CASE("xi gradient and Hessian match finite differences on the support") {
  const OutletCutoff c(OutletProfile::power(2.0 / 3.0, 1.0, 0.0), 1.0, 0.2);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  while (checked < 50) {
    const double x1 = 1.0 + 5.0 * u(rng);
    const auto [lo, hi] = c.band(x1);
    const double y = lo * std::pow(hi / lo, u(rng));
    const Vec2 x(x1, y);
    if (c.eval(x).grad.norm() == 0.0) continue;
    check_jet_by_differences(c, x, 1e-6);
    ++checked;
  }
}

TEST_CASE("xi bound suprema") {
  const OutletProfile channel = OutletProfile::constant(1.0, 0.0);
  double first[3];
  int i = 0;
  for (double eps : {0.2, 0.1, 0.05}) {
    const OutletCutoff c(channel, 1.0, eps);
    const auto r = xi_bound_check(c, 100, 1.0, 4.0);
    const auto r2 = xi_bound_check(c, 200, 1.0, 4.0);
    CHECK(std::abs(r2.sup_grad_x2_over_eps / r.sup_grad_x2_over_eps - 1.0) <= 0.1);
    CHECK(std::abs(r2.sup_hess_g2 / r.sup_hess_g2 - 1.0) <= 0.1);
    CHECK(r.support_ok);
    first[i++] = r.sup_grad_x2_over_eps;
  }
  for (double f : first) CHECK(std::abs(f / first[1] - 1.0) <= 0.1);

  const OutletCutoff p(OutletProfile::power(2.0 / 3.0, 1.0, 0.0), 0.5, 0.1);
  const auto r = xi_bound_check(p, 100, 1.0, 30.0);
  CHECK(std::isfinite(r.sup_hess_g2));
  CHECK(r.sup_hess_g2 > 0.0);
  CHECK(r.support_ok);
}

TEST_CASE("theta_k") {
  const auto g = OutletProfile::constant(1.0, 0.0);
  const auto ladder = build_ladder(g, 1.0, 7);
  double ref = -1.0;
  for (int k = 0; k <= 5; ++k) {
    const TruncationCutoff t(ladder, g, k);
    CHECK(t.eval(Vec2(ladder.R(k) - 0.3, 0.2)).value == 1.0);
    CHECK(t.eval(Vec2(ladder.R(k) - 0.3, 0.2)).grad.norm() == 0.0);
    CHECK(t.eval(Vec2(ladder.R(k + 1) + 0.1, -0.2)).value == 0.0);
    CHECK(t.eval(Vec2(ladder.R(k) + 0.3, 0.4)).value == t.eval(Vec2(ladder.R(k) + 0.3, -0.4)).value);
    double sup = 0.0;
    for (int s = 0; s <= 400; ++s) {
      const double x1 = ladder.R(k) + (ladder.R(k + 1) - ladder.R(k)) * s / 400.0;
      sup = std::max(sup, t.eval(Vec2(x1, 0.0)).grad.norm());
    }
    sup *= t.g_at_start();
    CHECK(sup <= t.bound_constant() * (1 + 1e-12));
    if (ref < 0) ref = sup;
    CHECK(sup == doctest::Approx(ref).epsilon(1e-12));
  }
  const TruncationCutoff t(ladder, g, 2);
  const double x1 = ladder.R(2) + 0.37, h = 1e-6;
  CHECK(t.eval(Vec2(x1, 0.1)).grad(0) ==
        doctest::Approx((t.eval(Vec2(x1 + h, 0.1)).value - t.eval(Vec2(x1 - h, 0.1)).value) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("Hopf cutoff") {
  const HopfCutoff chi(0.5, 1.0);
  CHECK(chi.eval(1.5)[0] == 0.0);
  CHECK(chi.eval(chi.inner() * 0.9)[0] == 1.0);
  const double h = 1e-7;
  for (double d : {0.2, 0.4, 0.7}) {
    const auto v = chi.eval(d);
    CHECK(v[1] == doctest::Approx((chi.eval(d + h)[0] - chi.eval(d - h)[0]) / (2 * h)).epsilon(1e-6));
    CHECK(v[2] == doctest::Approx((chi.eval(d + h)[1] - chi.eval(d - h)[1]) / (2 * h)).epsilon(1e-6));
    CHECK(std::abs(v[1]) <= kPsiSlopeMax * 0.5 / d);
  }
}
