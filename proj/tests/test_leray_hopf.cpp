#include "doctest.h"

#include "outflux/leray_hopf.hpp"
#include "outflux/quadrature.hpp"

#include <cmath>

using namespace outflux;

namespace {

DomainSpec channel() {
  DomainSpec d;
  d.profile = OutletProfile::constant(1.0, 0.0);
  d.gamma = 1.0;
  d.x_left = 0.0;
  d.R0 = 2.0;
  return d;
}

}  // namespace

TEST_CASE("trial fields are symmetric, solenoidal and vanish outside their disks") {
  const DomainSpec d = channel();
  for (int t : {0, 3, 40, 80, 85}) {
    const BumpField w = make_trial(d, {0.0, 4.0}, 7, t);
    for (const auto& b : w.bumps()) {
      for (double a : {0.3, 1.1, 2.0, 2.9}) {
        const Vec2 x = b.center + 0.6 * b.radius * Vec2(std::cos(a), std::sin(a));
        const FieldSample s = w.eval(x), m = w.eval(mirror(x));
        const double scale = std::max(s.grad.norm(), 1e-300);
        CHECK(std::abs(s.divergence()) <= 1e-10 * scale);
        CHECK(std::abs(s.value(0) - m.value(0)) <= 1e-12 * std::max(s.value.norm(), 1e-300));
        CHECK(std::abs(s.value(1) + m.value(1)) <= 1e-12 * std::max(s.value.norm(), 1e-300));
        // Jacobian against central differences.
        const double h = 1e-6 * b.radius;
        for (int j = 0; j < 2; ++j) {
          Vec2 e = Vec2::Zero();
          e(j) = h;
          const Vec2 fd = (w.eval(x + e).value - w.eval(x - e).value) / (2 * h);
          CHECK((fd - s.grad.col(j)).norm() <= 1e-5 * scale);
        }
      }
      const Vec2 out = b.center + 1.01 * b.radius * Vec2(1.0, 0.0);
      bool covered = false;
      for (const auto& o : w.bumps()) covered |= (out - o.center).norm() < o.radius;
      if (!covered) CHECK(w.eval(out).value.norm() == 0.0);
    }
  }
}

TEST_CASE("trial integrals agree with a brute-force tensor quadrature") {
  const DomainSpec d = channel();
  // A smooth symmetric test field: first component even, second odd in x2.
  auto A = [](const Vec2& x) {
    FieldSample s;
    s.value = Vec2(std::cos(x(1)) + x(0), -x(1) * x(0));
    s.grad << 1.0, -std::sin(x(1)), -x(1), -x(0);
    return s;
  };
  for (int t : {0, 75, 80}) {
    const BumpField w = make_trial(d, {0.5, 3.5}, 11, t);
    const TrialIntegrals ti = trial_integrals(w, A);
    // Full disks (both halves) on fine tensor grids; the disks are disjoint.
    double n = 0.0, dd = 0.0, q = 0.0;
    for (const auto& b : w.bumps()) {
      const GaussRule rx = composite_rule(b.center(0) - b.radius, b.center(0) + b.radius, 120, 4);
      const GaussRule ry = composite_rule(b.center(1) - b.radius, b.center(1) + b.radius, 120, 4);
      for (std::size_t i = 0; i < rx.nodes.size(); ++i)
        for (std::size_t j = 0; j < ry.nodes.size(); ++j) {
          const Vec2 x(rx.nodes[i], ry.nodes[j]);
          const FieldSample ws = w.eval(x), a = A(x);
          const double wt = rx.weights[i] * ry.weights[j];
          n += wt * (ws.grad * ws.value).dot(a.value);
          dd += wt * ws.grad.squaredNorm();
          q += wt * a.value.squaredNorm() * ws.value.squaredNorm();
        }
    }
    CHECK(ti.d == doctest::Approx(dd).epsilon(1e-5));
    CHECK(ti.q == doctest::Approx(q).epsilon(1e-5));
    CHECK(std::abs(ti.n - n) <= 1e-6 * std::sqrt(dd * q));
  }
}

TEST_CASE("zero extension gives a zero statistic") {
  const DomainSpec d = channel();
  const FieldFn zero = [](const Vec2&) { return FieldSample{}; };
  const auto s = leray_hopf_ratio(zero, d, {0.0, 4.0}, 40, 1);
  CHECK(s.ratio == 0.0);
  CHECK(s.trials + s.skipped == 40);
  CHECK_THROWS_AS(leray_hopf_ratio(zero, d, {0.0, 4.0}, 19, 1), PreconditionError);
}

TEST_CASE("channel statistic in the outlet decreases with epsilon") {
  const DomainSpec d = channel();
  const auto ladder = build_ladder(d.profile, d.R0, 7);
  double previous = 0.0;
  for (double eps : {0.1, 0.05}) {
    const ExtensionField ext = assemble_extension(d, BoundaryData{-1.0, {}}, {eps});
    const auto s = leray_hopf_ratio(ext.as_function(), d, {ladder.R(0), ladder.R(6)}, 111, 42);
    CHECK(s.ratio > 0.0);
    if (previous > 0.0) CHECK(s.ratio < previous);
    previous = s.ratio;
  }
}

TEST_CASE("cell statistics are uniform along the ladder") {
  DomainSpec d = channel();
  d.profile = OutletProfile::power(2.0 / 3.0, 1.0, 0.0);
  const auto ladder = build_ladder(d.profile, d.R0, 7);
  const ExtensionField ext = assemble_extension(d, BoundaryData{-1.0, {}}, {0.1});
  double lo = 1e300, hi = 0.0;
  for (int k = 0; k <= 5; ++k) {
    const auto s = leray_hopf_ratio(ext.as_function(), d, {ladder.R(k), ladder.R(k + 1)}, 111, 42);
    lo = std::min(lo, s.ratio);
    hi = std::max(hi, s.ratio);
  }
  CHECK(lo > 0.0);
  CHECK(hi <= 3.0 * lo);
}

TEST_CASE("statistics are deterministic across thread counts") {
  const DomainSpec d = channel();
  const ExtensionField ext = assemble_extension(d, BoundaryData{-1.0, {}}, {0.1});
  setenv("OUTFLUX_THREADS", "1", 1);
  const auto a = leray_hopf_ratio(ext.as_function(), d, {0.0, 4.0}, 60, 9);
  setenv("OUTFLUX_THREADS", "3", 1);
  const auto b = leray_hopf_ratio(ext.as_function(), d, {0.0, 4.0}, 60, 9);
  unsetenv("OUTFLUX_THREADS");
  CHECK(a.per_trial == b.per_trial);
}
