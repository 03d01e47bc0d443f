#include "outflux/geometry.hpp"

#include "outflux/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace outflux {

OutletProfile OutletProfile::constant(double scale, double r_star) {
  if (!(scale > 0.0)) throw HypothesisError("profile-invalid: constant profile needs scale > 0");
  OutletProfile p;
  p.kind_ = ProfileKind::Constant;
  p.scale_ = scale;
  p.r_star_ = r_star;
  return p;
}

OutletProfile OutletProfile::power(double alpha, double scale, double r_star) {
  if (!(scale > 0.0)) throw HypothesisError("profile-invalid: power profile needs scale > 0");
  if (r_star <= -1.0) throw HypothesisError("profile-invalid: R_star must exceed -1");
  OutletProfile p;
  p.kind_ = alpha == 0.0 ? ProfileKind::Constant : ProfileKind::Power;
  p.alpha_ = alpha;
  p.scale_ = scale;
  p.r_star_ = r_star;
  return p;
}

double OutletProfile::value(double t) const {
  if (kind_ == ProfileKind::Constant) return scale_;
  return scale_ * std::pow(1.0 + t, alpha_);
}

double OutletProfile::d1(double t) const {
  if (kind_ == ProfileKind::Constant) return 0.0;
  return scale_ * alpha_ * std::pow(1.0 + t, alpha_ - 1.0);
}

double OutletProfile::d2(double t) const {
  if (kind_ == ProfileKind::Constant) return 0.0;
  return scale_ * alpha_ * (alpha_ - 1.0) * std::pow(1.0 + t, alpha_ - 2.0);
}

namespace {

// Log-spaced samples of [a, a + span], denser near a.
std::vector<double> log_samples(double a, double span, int n) {
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  const double lmax = std::log1p(span);
  for (int i = 0; i <= n; ++i) t[i] = a + std::expm1(lmax * i / n);
  return t;
}

}  // namespace

double OutletProfile::lipschitz_estimate(double span) const {
  double sup = 0.0;
  for (double t : log_samples(r_star_, span, 4000)) sup = std::max(sup, std::abs(d1(t)));
  return sup;
}

double OutletProfile::sup_abs_g_d2(double span) const {
  double sup = 0.0;
  for (double t : log_samples(r_star_, span, 4000))
    sup = std::max(sup, std::abs(value(t) * d2(t)));
  return sup;
}

void OutletProfile::validate(double L, int samples, double span) const {
  const auto t = log_samples(r_star_, span, samples);
  for (double s : t) {
    const double g = value(s);
    if (!(g > 0.0) || !std::isfinite(g))
      throw HypothesisError("profile-invalid: g(" + std::to_string(s) + ") is not positive");
    if (!std::isfinite(d1(s)) || !std::isfinite(value(s) * d2(s)))
      throw HypothesisError("profile-invalid: unbounded derivative at " + std::to_string(s));
  }
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    for (std::size_t j : {i + 1, std::min(t.size() - 1, i + 7)}) {
      const double lhs = std::abs(value(t[i]) - value(t[j]));
      if (lhs > L * std::abs(t[i] - t[j]) * (1.0 + 1e-12) + 1e-14)
        throw HypothesisError("profile-invalid: Lipschitz bound fails near t = " +
                              std::to_string(t[i]));
    }
  }
}

double DomainSpec::wall_factor() const {
  return outlet == OutletKind::Outer ? 1.0 : gamma / (gamma + 1.0);
}

double DomainSpec::wall(double x1) const {
  return wall_factor() * profile.value(std::max(x1, profile.r_star()));
}

bool DomainSpec::inside(const Vec2& x) const {
  if (x(0) <= x_left) return false;
  if (std::abs(x(1)) >= wall(x(0))) return false;
  for (const auto& hole : holes)
    if ((x - Vec2(hole.center, 0.0)).norm() <= hole.radius) return false;
  return true;
}

double DomainSpec::drain_start() const { return holes.empty() ? x_left : holes.back().center; }

void DomainSpec::validate() const {
  if (!(gamma > 0.0)) throw HypothesisError("gamma must be positive");
  if (R0 < profile.r_star()) throw HypothesisError("R0 must be at least R_star");
  if (!(R0 > x_left)) throw HypothesisError("R0 must exceed the left wall abscissa");
  for (std::size_t i = 0; i < holes.size(); ++i) {
    const auto& h = holes[i];
    if (!(h.radius > 0.0)) throw HypothesisError("hole " + std::to_string(i) + " radius <= 0");
    if (h.center - h.radius <= x_left || h.center + h.radius >= R0)
      throw HypothesisError("hole " + std::to_string(i) + " is not contained in the core");
    for (int s = 0; s <= 64; ++s) {
      const double x1 = h.center - h.radius + 2.0 * h.radius * s / 64.0;
      const double y = std::sqrt(std::max(0.0, h.radius * h.radius - std::pow(x1 - h.center, 2)));
      if (y >= wall(x1)) throw HypothesisError("hole " + std::to_string(i) + " touches the wall");
    }
    if (i > 0) {
      const auto& p = holes[i - 1];
      if (p.center + p.radius >= h.center - h.radius)
        throw HypothesisError("holes " + std::to_string(i - 1) + " and " + std::to_string(i) +
                              " overlap or are unsorted");
    }
  }
}

TruncationLadder build_ladder(const OutletProfile& profile, double R0, int K) {
  if (K < 1) throw PreconditionError("ladder needs K >= 1");
  if (R0 < profile.r_star()) throw PreconditionError("ladder needs R0 >= R_star");
  TruncationLadder ladder;
  ladder.L = profile.lipschitz_estimate();
  ladder.L_eff = std::max(ladder.L, 0.5);
  ladder.radii.push_back(R0);
  for (int k = 0; k < K; ++k) {
    const double r = ladder.radii.back();
    const double g = profile.value(r);
    if (!(g > 0.0) || !std::isfinite(g))
      throw HypothesisError("profile-invalid: g(" + std::to_string(r) + ") is not positive");
    ladder.radii.push_back(r + g / (2.0 * ladder.L_eff));
  }
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const double a = ladder.radii[k], b = ladder.radii[k + 1], ga = profile.value(a);
    for (int s = 0; s < 100; ++s) {
      const double g = profile.value(a + (b - a) * s / 99.0);
      margin = std::min({margin, g - 0.5 * ga, 1.5 * ga - g});
    }
  }
  ladder.worst_sandwich_margin = margin;
  ladder.sandwich_ok = margin >= 0.0;
  return ladder;
}

RegionTag classify_point(const DomainSpec& spec, const TruncationLadder& ladder, const Vec2& x) {
  const double top = std::max(spec.wall(spec.x_left), spec.wall(ladder.radii.back()));
  const double tol = 1e-9 * std::hypot(ladder.radii.back() - spec.x_left, 2.0 * top);
  const double x1 = x(0), y = std::abs(x(1));
  RegionTag tag;
  if (x1 < spec.x_left - tol || x1 > ladder.radii.back() + tol) return tag;
  const double wall = spec.wall(x1);
  if (y > wall + tol) return tag;
  for (std::size_t i = 0; i < spec.holes.size(); ++i) {
    const double d = std::hypot(x1 - spec.holes[i].center, y) - spec.holes[i].radius;
    if (d < -tol) return tag;
    if (d <= tol) return {Region::Boundary, static_cast<int>(i), BoundaryKind::Hole};
  }
  if (std::abs(y - wall) <= tol) return {Region::Boundary, -1, BoundaryKind::Wall};
  if (std::abs(x1 - spec.x_left) <= tol) return {Region::Boundary, -1, BoundaryKind::Inlet};
  for (int k = 0; k <= ladder.K(); ++k)
    if (std::abs(x1 - ladder.radii[k]) <= tol) return {Region::Boundary, k, BoundaryKind::Section};
  if (x1 < ladder.radii[0]) return {Region::Core, -1, BoundaryKind::None};
  const auto it = std::upper_bound(ladder.radii.begin(), ladder.radii.end(), x1);
  return {Region::Cell, static_cast<int>(it - ladder.radii.begin()) - 1, BoundaryKind::None};
}

GIntegral integral_g_minus3(const OutletProfile& profile, double a, double b) {
  if (!(a < b)) throw PreconditionError("integral_g_minus3 needs a < b");
  auto f = [&](double t) { return std::pow(profile.value(t), -3.0); };
  QuadResult q = std::isinf(b) ? integrate_to_infinity(f, a, 1e-11)
                               : integrate_adaptive(f, a, b, 1e-12, 1e-300);
  return {q.value, q.error};
}

CaseReport classify_case(const OutletProfile& profile, double R0, int rungs) {
  const auto ladder = build_ladder(profile, R0, rungs);
  // Least-squares slope of log J_k against log k over the upper half of the
  // ladder, where the asymptotic power law has settled.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = rungs / 2; k < rungs; ++k) {
    const double J = integral_g_minus3(profile, ladder.radii[k], ladder.radii[k + 1]).value;
    const double lx = std::log(static_cast<double>(k)), ly = std::log(J);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CaseReport r;
  r.decay_exponent = -slope;
  if (r.decay_exponent > 1.1) {
    r.flux_case = FluxCase::Finite;
    r.total = integral_g_minus3(profile, R0, std::numeric_limits<double>::infinity()).value;
  }
  return r;
}

int StaircaseGrid::active_count() const {
  return static_cast<int>(std::count(active.begin(), active.end(), 1));
}

std::optional<std::pair<int, int>> StaircaseGrid::locate(const Vec2& x) const {
  const double y = x(1);
  if (x(0) < xs.front() || x(0) > xs.back() || y < ys.front() || y > ys.back()) return std::nullopt;
  int i = static_cast<int>(std::upper_bound(xs.begin(), xs.end(), x(0)) - xs.begin()) - 1;
  int j = static_cast<int>(std::upper_bound(ys.begin(), ys.end(), y) - ys.begin()) - 1;
  i = std::clamp(i, 0, nx() - 1);
  j = std::clamp(j, 0, ny() - 1);
  if (!is_active(i, j)) return std::nullopt;
  return std::make_pair(i, j);
}

StaircaseGrid build_half_grid(const DomainSpec& spec, const TruncationLadder& ladder, int k,
                              double h, bool stretch) {
  if (!(h > 0.0)) throw PreconditionError("mesh size must be positive");
  if (k < 0 || k > ladder.K()) throw PreconditionError("truncation index out of range");
  StaircaseGrid grid;
  grid.level = k;
  std::vector<double> knots{spec.x_left};
  for (int j = 0; j <= k; ++j) knots.push_back(ladder.radii[j]);
  grid.xs.push_back(knots.front());
  const double base = spec.wall(spec.x_left);
  for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
    const double a = knots[s], b = knots[s + 1];
    const double hx = stretch && s > 0 ? h * std::max(1.0, spec.wall(a) / base) : h;
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / hx - 1e-9)));
    for (int i = 1; i <= n; ++i) grid.xs.push_back(i == n ? b : a + (b - a) * i / n);
  }
  double top = 0.0;
  for (double x : grid.xs) top = std::max(top, spec.wall(x));
  const int ny = static_cast<int>(std::floor(top / h + 1e-9));
  for (int j = 0; j <= ny; ++j) grid.ys.push_back(j * h);
  const int nx = grid.nx();
  grid.active.assign(static_cast<std::size_t>(nx) * ny, 0);
  const double tol = 1e-10 * (1.0 + top);
  for (int i = 0; i < nx; ++i) {
    const double xa = grid.xs[i], xb = grid.xs[i + 1];
    double wmin = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= 8; ++s) wmin = std::min(wmin, spec.wall(xa + (xb - xa) * s / 8.0));
    for (int j = 0; j < ny; ++j) {
      const double ya = grid.ys[j], yb = grid.ys[j + 1];
      bool ok = yb <= wmin + tol;
      for (const auto& hole : spec.holes) {
        if (!ok) break;
        const double dx = std::max({xa - hole.center, 0.0, hole.center - xb});
        const double dy = std::max({ya, 0.0, -yb});
        ok = std::hypot(dx, dy) >= hole.radius - tol;
      }
      grid.active[static_cast<std::size_t>(i) * ny + j] = ok ? 1 : 0;
    }
  }
  return grid;
}

int TruncationMesh::euler_characteristic() const {
  std::set<std::pair<int, int>> edges;
  for (const auto& c : cells)
    for (int e = 0; e < 4; ++e) {
      int a = c[e], b = c[(e + 1) % 4];
      edges.emplace(std::min(a, b), std::max(a, b));
    }
  return static_cast<int>(nodes.size()) - static_cast<int>(edges.size()) +
         static_cast<int>(cells.size());
}

TruncationMesh mesh_truncation(const DomainSpec& spec, const TruncationLadder& ladder, int k,
                               double h) {
  const StaircaseGrid grid = build_half_grid(spec, ladder, k, h);
  const int nx = grid.nx(), ny = grid.ny();
  // Full grid rows: -ny..ny mapped to 0..2ny.
  auto full_active = [&](int i, int jj) {
    const int j = jj - ny;
    return j >= 0 ? grid.is_active(i, j) : grid.is_active(i, -j - 1);
  };
  TruncationMesh mesh;
  std::map<std::pair<int, int>, int> id;
  auto node = [&](int i, int jj) {
    auto [it, fresh] = id.try_emplace({i, jj}, static_cast<int>(mesh.nodes.size()));
    if (fresh) {
      const int j = jj - ny;
      mesh.nodes.emplace_back(grid.xs[i], j >= 0 ? grid.ys[j] : -grid.ys[-j]);
    }
    return it->second;
  };
  for (int i = 0; i < nx; ++i)
    for (int jj = 0; jj < 2 * ny; ++jj)
      if (full_active(i, jj))
        mesh.cells.push_back({node(i, jj), node(i + 1, jj), node(i + 1, jj + 1), node(i, jj + 1)});
  if (mesh.cells.empty()) throw MeshResolutionError("mesh size too coarse: no interior cells");

  mesh.mirror.resize(mesh.nodes.size());
  for (const auto& [key, n] : id) {
    auto it = id.find({key.first, 2 * ny - key.second});
    if (it == id.end()) throw MeshResolutionError("mesh lost mirror symmetry");
    mesh.mirror[n] = it->second;
  }

  auto tag_edge = [&](int a, int b) {
    MeshEdge e{a, b, BoundaryKind::Wall, -1};
    const Vec2 m = 0.5 * (mesh.nodes[a] + mesh.nodes[b]);
    const bool vertical = std::abs(mesh.nodes[a](0) - mesh.nodes[b](0)) < 1e-12;
    if (vertical && std::abs(m(0) - ladder.radii[k]) < 1e-12) {
      e.tag = BoundaryKind::Section;
      e.index = k;
    } else if (vertical && std::abs(m(0) - spec.x_left) < 1e-12) {
      e.tag = BoundaryKind::Inlet;
    } else {
      for (std::size_t i = 0; i < spec.holes.size(); ++i) {
        const double d = (m - Vec2(spec.holes[i].center, 0.0)).norm() - spec.holes[i].radius;
        if (d < 2.0 * h) {
          e.tag = BoundaryKind::Hole;
          e.index = static_cast<int>(i);
        }
      }
    }
    return e;
  };
  for (int i = 0; i < nx; ++i)
    for (int jj = 0; jj < 2 * ny; ++jj) {
      if (!full_active(i, jj)) continue;
      const bool jj_lo = jj == 0 || !full_active(i, jj - 1);
      const bool jj_hi = jj == 2 * ny - 1 || !full_active(i, jj + 1);
      const bool i_lo = i == 0 || !full_active(i - 1, jj);
      const bool i_hi = i == nx - 1 || !full_active(i + 1, jj);
      if (jj_lo) mesh.boundary.push_back(tag_edge(node(i, jj), node(i + 1, jj)));
      if (i_hi) mesh.boundary.push_back(tag_edge(node(i + 1, jj), node(i + 1, jj + 1)));
      if (jj_hi) mesh.boundary.push_back(tag_edge(node(i + 1, jj + 1), node(i, jj + 1)));
      if (i_lo) mesh.boundary.push_back(tag_edge(node(i, jj + 1), node(i, jj)));
    }
  for (int jj = 0; jj <= 2 * ny; ++jj) {
    auto it = id.find({nx, jj});
    if (it != id.end()) mesh.section_chain.push_back(it->second);
  }

  // A disk with N interior holes has Euler characteristic 1 - N.
  const int expected = 1 - static_cast<int>(spec.holes.size());
  if (mesh.euler_characteristic() != expected)
    throw MeshResolutionError("mesh size " + std::to_string(h) +
                              " does not resolve the hole/outlet topology");
  return mesh;
}

}  // namespace outflux
