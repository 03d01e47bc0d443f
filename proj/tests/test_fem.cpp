#include "doctest.h"

#include "outflux/fem.hpp"

#include <cmath>
#include <random>

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

DomainSpec holed() {
  DomainSpec d = channel();
  d.R0 = 4.0;
  d.holes = {{2.0, 0.5}};
  return d;
}

std::shared_ptr<const StreamSpace> space_for(const DomainSpec& d, int k, GridOptions o) {
  const auto ladder = build_ladder(d.profile, d.R0, 4);
  return std::make_shared<const StreamSpace>(make_grid(d, ladder, k, o));
}

DiscreteField random_field(const std::shared_ptr<const StreamSpace>& s, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Eigen::VectorXd c(s->size());
  for (int i = 0; i < c.size(); ++i) c[i] = n(rng);
  return DiscreteField(s, c);
}

}  // namespace

TEST_CASE("Hermite shape functions interpolate nodal data and differentiate consistently") {
  const double hx = 0.3, hy = 0.7;
  // Kronecker property at the corners.
  const double cs[4] = {0, 1, 1, 0}, ct[4] = {0, 0, 1, 1};
  for (int c = 0; c < 4; ++c) {
    const auto b = cell_basis(hx, hy, cs[c], ct[c]);
    for (int a = 0; a < 16; ++a) {
      const double data[4] = {b[a].n, b[a].nx, b[a].ny, b[a].nxy};
      for (int kind = 0; kind < 4; ++kind)
        CHECK(data[kind] == doctest::Approx(a == 4 * c + kind ? 1.0 : 0.0));
    }
  }
  // Derivatives against central differences in physical coordinates.
  const double s = 0.37, t = 0.61, e = 1e-6;
  const auto b0 = cell_basis(hx, hy, s, t);
  const auto bxp = cell_basis(hx, hy, s + e / hx, t), bxm = cell_basis(hx, hy, s - e / hx, t);
  const auto byp = cell_basis(hx, hy, s, t + e / hy), bym = cell_basis(hx, hy, s, t - e / hy);
  for (int a = 0; a < 16; ++a) {
    CHECK(b0[a].nx == doctest::Approx((bxp[a].n - bxm[a].n) / (2 * e)).epsilon(1e-6));
    CHECK(b0[a].ny == doctest::Approx((byp[a].n - bym[a].n) / (2 * e)).epsilon(1e-6));
    CHECK(b0[a].nxx == doctest::Approx((bxp[a].nx - bxm[a].nx) / (2 * e)).epsilon(1e-6));
    CHECK(b0[a].nxy == doctest::Approx((byp[a].nx - bym[a].nx) / (2 * e)).epsilon(1e-6));
    CHECK(b0[a].nyy == doctest::Approx((byp[a].ny - bym[a].ny) / (2 * e)).epsilon(1e-6));
  }
}

TEST_CASE("free coefficients of a rectangular grid") {
  const auto s = space_for(channel(), 0, {0.5, false, 0});
  const auto& g = s->grid();
  REQUIRE(g.active_count() == g.nx() * g.ny());
  // Interior nodes carry 4 coefficients, interior axis nodes 2.
  CHECK(s->size() == 4 * (g.nx() - 1) * (g.ny() - 1) + 2 * (g.nx() - 1));
}

TEST_CASE("discrete fields are solenoidal, symmetric, continuous and vanish on walls") {
  for (const auto& d : {channel(), holed()}) {
    const auto s = space_for(d, 1, {0.25, false, 2});
    const auto f = random_field(s, 11);
    const auto& g = s->grid();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 200; ++n) {
      const Vec2 x(g.xs.front() + u(rng) * (g.xs.back() - g.xs.front()), u(rng) * g.ys.back());
      const FieldSample a = f.eval(x);
      CHECK(std::abs(a.divergence()) <= 1e-10 * (1.0 + a.grad.norm()));
      const FieldSample m = f.eval(mirror(x));
      CHECK(std::abs(m.value(0) - a.value(0)) <= 1e-12);
      CHECK(std::abs(m.value(1) + a.value(1)) <= 1e-12);
    }
    // Velocity is continuous across interior cell edges and zero on the
    // boundary of the active region.
    for (const auto& [i, j] : s->cells()) {
      for (double r : {0.2, 0.7}) {
        const FieldSample in = f.eval_local(i, j, 1.0, r);
        const FieldSample top = f.eval_local(i, j, r, 1.0);
        const FieldSample bottom = f.eval_local(i, j, r, 0.0);
        if (g.is_active(i + 1, j))
          CHECK((in.value - f.eval_local(i + 1, j, 0.0, r).value).norm() <= 1e-10);
        else
          CHECK(in.value.norm() <= 1e-12);
        if (g.is_active(i, j + 1))
          CHECK((top.value - f.eval_local(i, j + 1, r, 0.0).value).norm() <= 1e-10);
        else
          CHECK(top.value.norm() <= 1e-12);
        if (!g.is_active(i - 1, j)) CHECK(f.eval_local(i, j, 0.0, r).value.norm() <= 1e-12);
        if (j == 0) CHECK(std::abs(bottom.value(1)) <= 1e-12);
        else if (!g.is_active(i, j - 1)) CHECK(bottom.value.norm() <= 1e-12);
      }
    }
  }
}

TEST_CASE("axis refinement splits only the first row") {
  const auto ladder = build_ladder(channel().profile, 2.0, 4);
  const auto base = build_half_grid(channel(), ladder, 0, 0.25);
  const auto fine = refine_axis(base, 3);
  REQUIRE(fine.ny() == base.ny() + 3);
  CHECK(fine.ys[1] == doctest::Approx(0.25 / 8));
  CHECK(fine.ys[3] == doctest::Approx(0.25 / 2));
  CHECK(fine.ys[4] == doctest::Approx(0.25));
  CHECK(fine.active_count() == base.active_count() + 3 * base.nx());
}

TEST_CASE("zero extension reproduces the field and vanishes beyond the old truncation") {
  const auto d = holed();
  const auto small = space_for(d, 0, {0.25, false, 0});
  const auto large = space_for(d, 2, {0.25, false, 0});
  const auto f = random_field(small, 3);
  const auto e = extend_by_zero(f, large);
  const double R0 = small->grid().xs.back();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 100; ++n) {
    const Vec2 x(d.x_left + u(rng) * (large->grid().xs.back() - d.x_left), u(rng));
    const FieldSample a = e.eval(x);
    if (x(0) < R0) {
      const FieldSample b = f.eval(x);
      CHECK((a.value - b.value).norm() <= 1e-12);
      CHECK((a.grad - b.grad).norm() <= 1e-10);
    } else {
      CHECK(a.value.norm() <= 1e-12);
    }
  }
  CHECK_THROWS_AS(extend_by_zero(e, small), PreconditionError);
}

TEST_CASE("cell integrals cover the mirrored domain") {
  const auto d = channel();
  const auto ladder = build_ladder(d.profile, d.R0, 4);
  const auto g = make_grid(d, ladder, 2, {0.25, false, 1});
  const double area = integrate_cells(g, -1e9, 1e9, [](int, int, const Vec2&) { return 1.0; });
  CHECK(area == doctest::Approx(2.0 * ladder.R(2)));
  // int x1^2 x2^2 over [0, R] x [-1, 1] = R^3 / 3 * 2 / 3.
  const double R1 = ladder.R(1);
  const double m = integrate_cells(g, 0.0, R1, [](int, int, const Vec2& x) {
    return x(0) * x(0) * x(1) * x(1);
  });
  CHECK(m == doctest::Approx(R1 * R1 * R1 / 3.0 * 2.0 / 3.0));
}
