#include "doctest.h"

#include "manufactured.hpp"
#include "outflux/solver.hpp"

#include <cmath>

using namespace outflux;
using outflux::testing::blended_extension;
using outflux::testing::poiseuille_channel;
using outflux::testing::poiseuille_error;

namespace {

std::shared_ptr<const StreamSpace> channel_space(int level, double h) {
  const auto d = poiseuille_channel();
  const auto ladder = build_ladder(d.profile, d.R0, 8);
  return std::make_shared<const StreamSpace>(make_grid(d, ladder, level, {h, false, 0}));
}

ExtensionField unit_flux_extension(const DomainSpec& d, double epsilon) {
  BoundaryData data;
  data.inflow_flux = -1.0;
  ExtensionOptions o;
  o.epsilon = epsilon;
  return assemble_extension(d, data, o);
}

}  // namespace

TEST_CASE("lambda = 0 gives the zero solution in one iteration") {
  const auto d = poiseuille_channel();
  const auto A = unit_flux_extension(d, 0.2).as_function();
  LevelSystem sys(channel_space(1, 0.25), A, ForceField::bump(1.0, 0.5, 1.0, 1.0), 1.0);
  SolveConfig cfg;
  cfg.lambdas = {0.0};
  const auto res = homotopy_solve(sys, cfg);
  REQUIRE(res.steps.size() == 1);
  CHECK(res.steps[0].iterations == 1);
  CHECK(res.v.coefficients().norm() == 0.0);
}

TEST_CASE("zero data gives the zero solution at every lambda") {
  LevelSystem sys(channel_space(2, 0.25), FieldFn{}, ForceField::zero(), 1.0);
  const auto res = homotopy_solve(sys, SolveConfig{});
  CHECK(res.steps.size() == 5);
  for (const auto& s : res.steps) CHECK(s.iterations == 1);
  CHECK(res.v.coefficients().norm() == 0.0);
}

TEST_CASE("energy balance holds for every converged homotopy step") {
  const auto d = poiseuille_channel();
  const auto A = unit_flux_extension(d, 0.2).as_function();
  LevelSystem sys(channel_space(2, 0.125), A, ForceField::bump(1.0, 0.5, 2.0, 1.0), 1.0);
  const auto res = homotopy_solve(sys, SolveConfig{});
  CHECK(res.steps.back().lambda == 1.0);
  for (const auto& s : res.steps) {
    CHECK(s.energy_residual <= 1e-8);
    CHECK(std::isfinite(s.dirichlet));
  }
  CHECK(res.steps.back().dirichlet > 0.0);
  // A converged solution is a fixed point of the Picard map.
  const auto again = sys.picard(1.0, res.v.coefficients(), 1e-10, 5);
  CHECK(again.converged);
  CHECK(again.iterations <= 2);
}

TEST_CASE("the skew convection term vanishes on the diagonal") {
  // Testing the lagged system with the unknown itself removes b(u; v, v).
  const auto d = poiseuille_channel();
  const auto A = unit_flux_extension(d, 0.2).as_function();
  LevelSystem sys(channel_space(1, 0.25), A, ForceField::zero(), 1.0);
  Eigen::VectorXd lag = Eigen::VectorXd::LinSpaced(sys.size(), -1.0, 1.0);
  const Eigen::VectorXd c = sys.picard_step(0.7, lag);
  const EnergyBalance e = sys.balance(0.7, c);
  CHECK(e.residual() <= 1e-10);
}

TEST_CASE("discrete solutions are symmetric and vanish on the walls") {
  const auto d = poiseuille_channel();
  const auto A = unit_flux_extension(d, 0.2).as_function();
  LevelSystem sys(channel_space(1, 0.25), A, ForceField::bump(1.0, 0.5, 1.0, 1.0), 1.0);
  const auto v = homotopy_solve(sys, SolveConfig{}).v;
  for (double x1 : {0.3, 1.1, 2.7}) {
    for (double x2 : {0.1, 0.45, 0.8}) {
      const FieldSample a = v.eval(Vec2(x1, x2)), b = v.eval(Vec2(x1, -x2));
      CHECK(a.value(0) == doctest::Approx(b.value(0)).epsilon(1e-12));
      CHECK(a.value(1) == doctest::Approx(-b.value(1)).epsilon(1e-12));
    }
    CHECK(v.eval(Vec2(x1, 1.0 - 1e-14)).value.norm() <= 1e-10);
  }
}

TEST_CASE("manufactured Poiseuille flow converges at third order in L2") {
  const auto d = poiseuille_channel();
  const auto ladder = build_ladder(d.profile, d.R0, 8);
  const FieldFn A = blended_extension;
  std::vector<double> errors;
  for (double h : {0.25, 0.125, 0.0625}) {
    auto space = std::make_shared<const StreamSpace>(make_grid(d, ladder, 6, {h, false, 0}));
    LevelSystem sys(space, A, ForceField::zero(), 1.0);
    SolveConfig cfg;
    cfg.lambdas = {0.0, 1.0};
    const auto res = homotopy_solve(sys, cfg);
    CHECK(res.steps.back().energy_residual <= 1e-8);
    errors.push_back(poiseuille_error(res.v, A, 3.0));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double order = std::log2(errors[i - 1] / errors[i]);
    CHECK(std::abs(order - 3.0) <= 0.5);
  }
}

TEST_CASE("dual norms of a body force") {
  const auto d = poiseuille_channel();
  const auto ladder = build_ladder(d.profile, d.R0, 8);
  CHECK(dual_norm(ForceField::zero(), d, ladder, 2, {}) == 0.0);
  const auto f = ForceField::bump(1.0, 0.6, 1.0, 0.5);
  const double coarse = dual_norm(f, d, ladder, 1, {0.25, false, 0});
  const double fine = dual_norm(f, d, ladder, 1, {0.125, false, 0});
  CHECK(fine > 0.0);
  CHECK(std::abs(fine - coarse) <= 0.05 * fine);
  // Supported in Omega_0: nearly constant in k, so the weight decides.
  const auto w = weighted_dual_norm(f, d, ladder, 4, {0.25, false, 0});
  CHECK(w.argmax == 1);
  for (std::size_t k = 1; k < w.per_level.size(); ++k) CHECK(w.per_level[k] < w.per_level[k - 1]);
  const double n1 = dual_norm(f, d, ladder, 1, {0.25, false, 0});
  const double n4 = dual_norm(f, d, ladder, 4, {0.25, false, 0});
  CHECK(n4 >= n1 * (1.0 - 1e-9));
  CHECK(n4 <= 1.01 * n1);
}

TEST_CASE("invading domains with zero data stay at zero") {
  const auto d = poiseuille_channel();
  const auto ladder = build_ladder(d.profile, d.R0, 8);
  SolveConfig cfg;
  cfg.grid.h = 0.25;
  cfg.stop_tol = 0.0;
  const auto state = invade(d, ladder, FieldFn{}, ForceField::zero(), cfg, 1, 3);
  REQUIRE(state.levels.size() == 3);
  for (const auto& l : state.levels) {
    CHECK(l.solve.v.coefficients().norm() == 0.0);
    for (double y : l.y) CHECK(y == 0.0);
  }
}

TEST_CASE("invading domains warm start and produce nondecreasing profiles") {
  const auto d = poiseuille_channel();
  const auto ladder = build_ladder(d.profile, d.R0, 8);
  const auto A = unit_flux_extension(d, 0.2).as_function();
  SolveConfig cfg;
  cfg.grid.h = 0.25;
  cfg.stop_tol = 0.0;
  const auto state = invade(d, ladder, A, ForceField::zero(), cfg, 1, 3);
  REQUIRE(state.levels.size() == 3);
  for (const auto& l : state.levels) {
    REQUIRE(static_cast<int>(l.y.size()) == l.level + 1);
    for (std::size_t k = 1; k < l.y.size(); ++k) CHECK(l.y[k] >= l.y[k - 1]);
    for (const auto& s : l.solve.steps) CHECK(s.energy_residual <= 1e-8);
  }
  CHECK(state.levels[1].difference.has_value());
  CHECK(state.levels[1].solve.steps.size() == 1);  // warm start at lambda = 1
}
