#include "outflux/leray_hopf.hpp"

#include "outflux/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace outflux {

namespace {

constexpr int kScaleLevels = 37;

// Largest radius of a disk centred at c that stays inside Omega and the
// region (upper-half check suffices by symmetry).
double room(const DomainSpec& spec, const TrialRegion& region, const Vec2& c) {
  double r = std::min({c(0) - region.x1_lo, region.x1_hi - c(0), c(0) - spec.x_left});
  if (r <= 0.0) return 0.0;
  for (const auto& h : spec.holes) r = std::min(r, (c - Vec2(h.center, 0.0)).norm() - h.radius);
  if (r <= 0.0) return 0.0;
  // Shrink until the disk fits under the wall.
  for (int it = 0; it < 60; ++it) {
    double wmin = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= 16; ++s) wmin = std::min(wmin, spec.wall(c(0) - r + 2.0 * r * s / 16.0));
    if (std::abs(c(1)) + r <= wmin) break;
    r *= 0.8;
  }
  return r;
}

}  // namespace

BumpField::BumpField(std::vector<Bump> bumps) {
  for (const auto& b : bumps) {
    bumps_.push_back(b);
    if (b.center(1) != 0.0) {
      Bump m = b;
      m.center = mirror(b.center);
      bumps_.push_back(m);
    }
  }
}

FieldSample BumpField::eval(const Vec2& x) const {
  // psi = x2 * B with B = sum weight * q^6 * L, q = 1 - |x - c|^2 / r^2.
  double B = 0.0;
  Vec2 dB = Vec2::Zero();
  Mat2 hB = Mat2::Zero();
  for (const auto& b : bumps_) {
    const Vec2 rel = x - b.center;
    const double r2 = b.radius * b.radius;
    const double q = 1.0 - rel.squaredNorm() / r2;
    if (q <= 0.0) continue;
    const Vec2 dq = -2.0 * rel / r2;
    const double q4 = q * q * q * q, q5 = q4 * q;
    // P = q^6 times the tilt factor L = 1 + tilt * (x1 - c1) / r.
    const double P = q5 * q, L = 1.0 + b.tilt * rel(0) / b.radius, k = b.tilt / b.radius;
    const Vec2 dP = 6.0 * q5 * dq;
    const Mat2 hP = 30.0 * q4 * dq * dq.transpose() - 12.0 * q5 / r2 * Mat2::Identity();
    const Vec2 e1(1.0, 0.0);
    B += b.weight * P * L;
    dB += b.weight * (dP * L + P * k * e1);
    hB += b.weight * (hP * L + k * (dP * e1.transpose() + e1 * dP.transpose()));
  }
  const double y = x(1);
  // Derivatives of psi.
  const double px = y * dB(0), py = B + y * dB(1);
  const double pxx = y * hB(0, 0), pxy = dB(0) + y * hB(0, 1), pyy = 2.0 * dB(1) + y * hB(1, 1);
  FieldSample w;
  w.value = Vec2(py, -px);
  w.grad << pxy, pyy, -pxx, -pxy;
  return w;
}

BumpField make_trial(const DomainSpec& spec, const TrialRegion& region, std::uint64_t seed,
                     int t) {
  SplitMix rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
  const double shrink = std::ldexp(1.0, -(t % kScaleLevels));
  const int kind = (t / kScaleLevels) % 3;

  // Axis points where the boundary crosses the axis, with the side Omega
  // lies on.
  std::vector<std::pair<double, int>> crossings;
  if (spec.x_left >= region.x1_lo && spec.x_left < region.x1_hi) crossings.push_back({spec.x_left, +1});
  for (const auto& h : spec.holes) {
    if (h.center - h.radius > region.x1_lo) crossings.push_back({h.center - h.radius, -1});
    if (h.center + h.radius < region.x1_hi) crossings.push_back({h.center + h.radius, +1});
  }

  const double tilt = (t / (3 * kScaleLevels)) % 2 == 0 ? 0.9 : -0.9;
  double fit = 1.0;  // shrinks on rejected placements
  for (int attempt = 0; attempt < 200; ++attempt, fit *= 0.97) {
    if (kind == 1 && !crossings.empty()) {
      const auto [p, side] = crossings[rng.next() % crossings.size()];
      // A disk hugging the crossing: edge at gap * radius from the boundary.
      double base = 0.0;
      for (double step = 1e-3; step <= 4.0; step *= 2.0)
        if (room(spec, region, Vec2(p + side * step, 0.0)) >= 0.49 * step) base = 0.49 * step;
      const double rad = base * shrink * fit;
      if (rad <= 0.0) continue;
      const double gap = rng.uniform(0.02, 0.5) * rad;
      const Vec2 c(p + side * (rad + gap), 0.0);
      if (room(spec, region, c) < rad) continue;
      return BumpField({{c, rad, 1.0, -side, tilt}});
    }
    const double x1 = rng.uniform(region.x1_lo, region.x1_hi);
    if (kind == 2) {
      const double w = spec.wall(x1);
      const double rad = 0.45 * w * shrink * fit;
      const double u = rng.uniform();
      double y;
      if (u < 0.4) {
        y = rad * rng.uniform(1.02, 1.5);
      } else if (u < 0.7) {
        y = w - rad * rng.uniform(1.02, 1.5);
      } else {
        y = rng.uniform(rad * 1.02, std::max(rad * 1.02, w - rad * 1.02));
      }
      const Vec2 c(x1, y);
      if (room(spec, region, c) < rad) continue;
      return BumpField({{c, rad, 1.0, 0, tilt}});
    }
    const Vec2 c(x1, 0.0);
    const double r = room(spec, region, c);
    if (r <= 0.0) continue;
    return BumpField({{c, 0.9 * r * shrink, 1.0, 0, tilt}});
  }
  throw NumericError("could not place a trial field in the region");
}

TrialIntegrals trial_integrals(const BumpField& w, const FieldFn& A) {
  TrialIntegrals out;
  for (const auto& b : w.bumps()) {
    if (b.center(1) < 0.0) continue;  // counted through the mirror factor
    const double r = b.radius, c1 = b.center(0), c2 = b.center(1);
    GaussRule rx;
    if (b.hug < 0) {
      rx = graded_rule(c1 - r, c1 + r, r * std::ldexp(1.0, -32), 6);
    } else if (b.hug > 0) {
      rx = graded_rule(c1 - r, c1 + r, r * std::ldexp(1.0, -32), 6);
      for (auto& x : rx.nodes) x = 2.0 * c1 - x;
    } else {
      rx = composite_rule(c1 - r, c1 + r, 10, 6);
    }
    const double lo = std::max(c2 - r, 0.0), hi = c2 + r;
    const GaussRule ry = lo < 0.05 * r ? graded_rule(lo, hi, std::max(r * std::ldexp(1.0, -48), 1e-3 * lo), 6)
                                       : composite_rule(lo, hi, 10, 6);
    for (std::size_t i = 0; i < rx.nodes.size(); ++i)
      for (std::size_t j = 0; j < ry.nodes.size(); ++j) {
        const Vec2 x(rx.nodes[i], ry.nodes[j]);
        if ((x - b.center).squaredNorm() >= r * r) continue;
        const FieldSample ws = w.eval(x);
        const FieldSample a = A(x);
        const double wt = 2.0 * rx.weights[i] * ry.weights[j];
        out.n += wt * (ws.grad * ws.value).dot(a.value);
        out.d += wt * ws.grad.squaredNorm();
        out.q += wt * a.value.squaredNorm() * ws.value.squaredNorm();
      }
  }
  return out;
}

LerayHopfStats leray_hopf_ratio(const FieldFn& A, const DomainSpec& spec,
                                const TrialRegion& region, int trials, std::uint64_t seed) {
  if (trials < 20) throw PreconditionError("leray_hopf_ratio needs at least 20 trials");
  std::vector<TrialIntegrals> res(static_cast<std::size_t>(trials));
  parallel_for(res.size(), [&](std::size_t t) {
    res[t] = trial_integrals(make_trial(spec, region, seed, static_cast<int>(t)), A);
  });
  LerayHopfStats s;
  for (const auto& r : res) {
    if (!(r.d > 0.0)) {
      ++s.skipped;
      s.per_trial.push_back(0.0);
      continue;
    }
    ++s.trials;
    const double ratio = std::abs(r.n) / r.d;
    s.per_trial.push_back(ratio);
    s.ratio = std::max(s.ratio, ratio);
    s.quadratic_ratio = std::max(s.quadratic_ratio, r.q / r.d);
  }
  return s;
}

}  // namespace outflux
