#include "doctest.h"

#include "outflux/estimates.hpp"
#include "synthetic.hpp"

#include <cmath>
#include <numbers>

using namespace outflux;
using outflux::testing::random_claim_instance;

namespace {

constexpr double kPi = std::numbers::pi;

DomainSpec paraboloidal() {
  DomainSpec d;
  d.profile = OutletProfile::power(2.0 / 3.0, 1.0, 0.0);
  d.gamma = 1.0;
  d.x_left = 0.0;
  d.R0 = 2.0;
  return d;
}

DomainSpec channel() {
  DomainSpec d = paraboloidal();
  d.profile = OutletProfile::constant(1.0, 0.0);
  return d;
}

ContinuationState state_from(const std::vector<std::vector<double>>& ys) {
  ContinuationState s;
  for (const auto& y : ys) {
    LevelReport l;
    l.level = static_cast<int>(y.size()) - 1;
    l.y = y;
    s.levels.push_back(l);
  }
  return s;
}

}  // namespace

TEST_CASE("Hardy ratios of power trials") {
  const HardyRegion strip{2.0, 1.0, HardySides::Bottom};
  // w = d: int w^2/d^2 = int |w'|^2.
  CHECK(hardy_ratio(strip, HardyTrial{}) == doctest::Approx(1.0).epsilon(1e-13));
  // w = d^alpha: 1 / alpha^2, tending to the 1D constant 4.
  for (double a : {0.52, 0.75, 1.5}) {
    HardyTrial t;
    t.alpha = a;
    CHECK(hardy_ratio(strip, t) == doctest::Approx(1.0 / (a * a)).epsilon(1e-12));
  }
  HardyTrial bad;
  bad.alpha = 0.5;
  CHECK_THROWS_AS(hardy_ratio(strip, bad), PreconditionError);
}

TEST_CASE("Hardy fit approaches the one-dimensional constant from below") {
  for (auto sides : {HardySides::Bottom, HardySides::BottomAndTop}) {
    const HardyRegion r{1.5, 1.0, sides};
    const auto fit = hardy_check(r, 40, 7);
    // Each line x1 = const obeys the 1D inequality with constant 4.
    for (double x : fit.ratios) CHECK(x <= 4.0);
    CHECK(fit.constant >= 0.8 * 4.0);
    CHECK(std::abs(fit.drift()) <= 0.05);
  }
  CHECK_THROWS_AS(hardy_check(HardyRegion{}, 10, 1), PreconditionError);
}

TEST_CASE("Hardy ratios are invariant under scaling and dilation") {
  const HardyRegion r{1.0, 0.5, HardySides::BottomAndTop};
  for (int i = 0; i < 20; ++i) {
    HardyTrial t = hardy_trial(3, i);
    const double base = hardy_ratio(r, t);
    t.amplitude = 2.0;
    CHECK(hardy_ratio(r, t) == doctest::Approx(base).epsilon(1e-12));
    t.amplitude = 1.0;
    CHECK(hardy_ratio(HardyRegion{3.0, 1.5, r.sides}, t) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("Poincare fit on a rectangle matches the first Dirichlet eigenvalue") {
  const double w = 3.0, h = 2.0, g = 1.5;
  const auto cell = rectangle_cell(w, h, g);
  const auto fit = poincare_check(cell, TrialFamily::ProductSine, 20, 11);
  const double exact = 1.0 / (kPi * kPi * (1.0 / (w * w) + 1.0 / (h * h))) / (g * g);
  CHECK(std::abs(fit.constant - exact) <= 0.05 * exact);
  CHECK(fit.constant <= exact * (1.0 + 1e-9));
  // Homogeneity.
  CellTrial t = cell_trial(TrialFamily::ProductSine, 11, 3);
  const double base = poincare_ratio(cell, integrate_trial(cell, t));
  t.amplitude = -4.0;
  CHECK(poincare_ratio(cell, integrate_trial(cell, t)) == doctest::Approx(base).epsilon(1e-12));
  // Functions vanishing only on the walls obey the 1D bound across x2.
  const auto free = poincare_check(cell, TrialFamily::WallPolynomial, 30, 12);
  for (double x : free.ratios) CHECK(x <= h * h / (kPi * kPi) / (g * g));
}

TEST_CASE("Poincare constant is uniform along a paraboloidal outlet") {
  const auto d = paraboloidal();
  const auto ladder = build_ladder(d.profile, d.R0, 8);
  std::vector<double> c;
  for (int k = 0; k <= 5; ++k) {
    const auto fit = poincare_check(ladder_cell(d, ladder, k), TrialFamily::WallPolynomial, 30, 5);
    // Width at most 3 g(R_k) across the cell.
    CHECK(fit.constant <= 9.0 / (kPi * kPi));
    c.push_back(fit.constant);
  }
  CHECK(spread(c) <= 2.0);
}

TEST_CASE("L4 direct ratio is bounded by the interpolation chain") {
  for (const auto& d : {channel(), paraboloidal()}) {
    const auto ladder = build_ladder(d.profile, d.R0, 8);
    std::vector<double> c;
    for (int k = 0; k <= 5; ++k) {
      const auto cell = ladder_cell(d, ladder, k);
      const auto fit = l4_check(cell, TrialFamily::WallPolynomial, 30, 9);
      CHECK(fit.chain_holds());
      c.push_back(fit.direct.constant);
    }
    CHECK(spread(c) <= 2.0);
  }
  // Ladyzhenskaya: |u|_4^4 <= 2 |u|^2 |grad u|^2 for zero trace.
  const auto cell = rectangle_cell(1.0, 2.0);
  const auto sine = l4_check(cell, TrialFamily::ProductSine, 30, 2);
  CHECK(sine.multiplicative <= std::pow(2.0, 0.25));
  CellTrial t = cell_trial(TrialFamily::WallPolynomial, 4, 1);
  const double base = l4_ratio(cell, integrate_trial(cell, t));
  t.amplitude = 3.0;
  CHECK(l4_ratio(cell, integrate_trial(cell, t)) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("Q sequence") {
  CHECK(data_constant(2.0, 1.0, 3.0) == doctest::Approx(2.0 * (1.0 + 1.0 + 9.0)));
  SUBCASE("channel: affine in k") {
    const auto d = channel();
    const auto ladder = build_ladder(d.profile, d.R0, 12);
    const auto q = q_sequence(0.5, d.profile, ladder, 1.0, 0.5, 12);
    for (int k = 0; k < 12; ++k) CHECK(q.Q[k + 1] - q.Q[k] == doctest::Approx(1.0).epsilon(1e-10));
    REQUIRE(q.k0.has_value());
    CHECK(*q.k0 < 12);
  }
  SUBCASE("paraboloidal: convergent and eventually admissible") {
    const auto d = paraboloidal();
    const auto ladder = build_ladder(d.profile, d.R0, 30);
    const auto q = q_sequence(0.5, d.profile, ladder, 1.0, 0.5, 30);
    for (int k = 1; k <= 30; ++k) {
      const double direct = integral_g_minus3(d.profile, d.R0, ladder.R(k)).value;
      CHECK(q.integral[k] == doctest::Approx(direct).epsilon(1e-9));
      CHECK(q.Q[k] == doctest::Approx(2.0 * 0.5 * (1.0 + direct)).epsilon(1e-9));
    }
    for (int k = 2; k <= 30; ++k) {
      CHECK(q.Q[k] - q.Q[k - 1] < q.Q[k - 1] - q.Q[k - 2]);
      CHECK(q.increment[k] < q.increment[k - 1]);
    }
    REQUIRE(q.k0.has_value());
    CHECK(q.admissibility.back() < q.admissibility.front());
  }
  SUBCASE("too aggressive constants are reported") {
    const auto d = channel();
    const auto ladder = build_ladder(d.profile, d.R0, 4);
    const auto q = q_sequence(1.0, d.profile, ladder, 100.0, 0.0, 4);
    CHECK_FALSE(q.k0.has_value());
  }
}

TEST_CASE("admissibility grows with the data constant when c_** > 0") {
  // c_* dQ / Q is invariant under Q -> tQ while c_** dQ^{3/2} / Q grows
  // like t^{1/2}.
  const auto d = paraboloidal();
  const auto ladder = build_ladder(d.profile, d.R0, 10);
  const auto a = q_sequence(1.0, d.profile, ladder, 0.5, 0.3, 10);
  const auto b = q_sequence(4.0, d.profile, ladder, 0.5, 0.3, 10);
  const auto c = q_sequence(4.0, d.profile, ladder, 0.5, 0.0, 10);
  const auto e = q_sequence(1.0, d.profile, ladder, 0.5, 0.0, 10);
  for (int k = 0; k < 10; ++k) {
    CHECK(b.admissibility[k] > a.admissibility[k]);
    CHECK(c.admissibility[k] == doctest::Approx(e.admissibility[k]).epsilon(1e-12));
  }
}

TEST_CASE("Saint-Venant claim: trivial and synthetic cases") {
  const int N = 10;
  std::vector<double> Q, g(N + 1, 1.0);
  for (int k = 0; k <= N; ++k) Q.push_back(std::ldexp(1.0, k));
  SUBCASE("y = 0") {
    const auto v = saint_venant_claim({std::vector<double>(N + 1, 0.0), Q, g, 1.0, 0.0});
    CHECK(v.all_hold());
  }
  // Equality in the recursion, solved backwards from y_N = Q_N.
  auto equality = [&](double c) {
    std::vector<double> y(N + 1);
    y[N] = Q[N];
    for (int k = N - 1; k >= 0; --k) y[k] = (c * y[k + 1] + 0.5 * Q[k]) / (1.0 + c);
    return y;
  };
  SUBCASE("admissible constant") {
    const ClaimInput in{equality(0.25), Q, g, 0.25, 0.0};
    const auto v = saint_venant_claim(in);
    CHECK(v.all_hold());
    for (int k = 0; k < N; ++k) {
      CHECK(v.recursion[k]);
      CHECK(v.admissible[k]);
      CHECK(v.status[k] == StepStatus::Proved);
      CHECK(in.y[k] <= Q[k]);
    }
  }
  SUBCASE("c_* = 1 breaks admissibility and the conclusion") {
    const ClaimInput in{equality(1.0), Q, g, 1.0, 0.0};
    const auto v = saint_venant_claim(in);
    const auto direct = exhaustive_claim(in);
    for (int k = 0; k < N; ++k) CHECK_FALSE(v.admissible[k]);
    REQUIRE(v.first_violation.has_value());
    CHECK(*v.first_violation == N - 1);
    for (int k = 0; k <= N; ++k) CHECK((v.status[k] != StepStatus::Violated) == (direct[k] != 0));
  }
}

TEST_CASE("Saint-Venant claim agrees with direct verification") {
  for (int i = 0; i < 100; ++i) {
    const auto in = random_claim_instance(derive_seed(2024, i), 12);
    const auto v = saint_venant_claim(in);
    const auto direct = exhaustive_claim(in);
    CHECK(v.all_hold());
    for (std::size_t k = 0; k < in.y.size(); ++k) {
      CHECK(v.status[k] == StepStatus::Proved);
      CHECK(direct[k]);
    }
  }
}

TEST_CASE("Saint-Venant claim flags a constructed violation at its index") {
  const int N = 8;
  std::vector<double> Q, g(N + 1, 1.0);
  for (int k = 0; k <= N; ++k) Q.push_back(std::ldexp(1.0, k));
  for (int m = 1; m < N; ++m) {
    std::vector<double> y(N + 1, 0.0);
    for (int j = m; j <= N; ++j) y[j] = Q[m] + 1.0;
    const ClaimInput in{y, Q, g, 0.25, 0.0};
    const auto v = saint_venant_claim(in);
    const auto direct = exhaustive_claim(in);
    REQUIRE(v.first_violation.has_value());
    CHECK(*v.first_violation == m);
    for (int k = 0; k <= N; ++k) {
      CHECK((v.status[k] == StepStatus::Violated) == (k == m));
      CHECK((direct[k] == 0) == (k == m));
    }
  }
  const std::vector<double> g3(3, 1.0);
  CHECK_THROWS_AS(saint_venant_claim({{1.0, 0.5, 2.0}, {4.0, 4.0, 4.0}, g3, 1.0, 0.0}),
                  HypothesisError);
  CHECK_THROWS_AS(saint_venant_claim({{1.0, 2.0, 5.0}, {4.0, 4.0, 4.0}, g3, 1.0, 0.0}),
                  HypothesisError);
}

TEST_CASE("ledger fitted from a growing profile") {
  const auto d = channel();
  const auto ladder = build_ladder(d.profile, d.R0, 8);
  std::vector<double> y;
  for (int k = 0; k <= 6; ++k) y.push_back(3.0 * (1.0 + k));
  const auto L = build_ledger(y, d, ladder, 0.5, 0.5);
  // Unit channel steps: int g^{-3} = k, dy = 3, F = 0.5 * 3 + 0.5 * 3^{3/2}.
  double expected = 1.5;
  for (int k = 0; k < 6; ++k)
    expected = std::max(expected, (y[k] - 1.5 - 0.5 * std::pow(3.0, 1.5)) / (1.0 + k));
  CHECK(L.c_data == doctest::Approx(expected).epsilon(1e-10));
  CHECK(L.verdicts.at("recursion"));
  CHECK(L.verdicts.at("y_nondecreasing"));
  CHECK(L.verdicts.at("q_nondecreasing"));
  CHECK(L.y.back() <= L.Q.back() * (1.0 + 1e-12));
  for (std::size_t k = 0; k < L.Q.size(); ++k)
    CHECK(L.Q[k] == doctest::Approx(2.0 * L.c_data * (1.0 + L.integral[k])));
  const auto zero = build_ledger(std::vector<double>(5, 0.0), d, ladder, 0.5, 0.5);
  CHECK(zero.c_data == 0.0);
  CHECK(zero.verdicts.at("claim"));
}

TEST_CASE("growth constant and saturation") {
  const auto d = channel();
  const auto ladder = build_ladder(d.profile, d.R0, 8);
  const auto zero = growth_bound_check(state_from({{0, 0, 0}, {0, 0, 0, 0}}), d.profile, ladder);
  for (double c : zero.c_hat) CHECK(c == 0.0);
  CHECK(zero.stable());
  // y_k = 3 (1 + k) on a unit-step channel ladder.
  std::vector<std::vector<double>> ys;
  for (int l = 3; l <= 5; ++l) {
    std::vector<double> y;
    for (int k = 0; k <= l; ++k) y.push_back(3.0 * (1.0 + k));
    ys.push_back(y);
  }
  const auto r = growth_bound_check(state_from(ys), d.profile, ladder);
  for (double c : r.c_hat) CHECK(c == doctest::Approx(3.0));
  CHECK(r.factor == doctest::Approx(1.0));

  auto s = state_from({{1.0, 1.5, 1.75, 1.8}, {1.0, 1.5, 1.75, 1.8, 1.81}});
  s.levels[0].difference = 0.1;
  s.levels[1].difference = 0.01;
  const auto sat = saturation_check(s);
  CHECK(sat.increments_decreasing);
  CHECK(sat.last_fraction == doctest::Approx(0.01 / 1.81));
  CHECK(sat.saturated());
  CHECK(sat.differences_decreasing);
  const auto grow = saturation_check(state_from({{1.0, 2.0, 3.5}}));
  CHECK_FALSE(grow.increments_decreasing);
  CHECK_FALSE(grow.saturated());
}
