// Sampled Leray-Hopf statistics of an extension field over symmetric,
// solenoidal test fields with zero trace.
#pragma once

#include "outflux/extension.hpp"

#include <cstdint>
#include <vector>

namespace outflux {

/// Polynomial bump (1 - |x - c|^2 / r^2)^6 (1 + tilt (x1 - c1) / r) inside
/// the disk of radius r. The tilt breaks the x1 reflection symmetry, without
/// which the trilinear term vanishes against x1-independent fields.
struct Bump {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
  double weight = 1.0;
  int hug = 0;  // -1 / +1: a boundary lies just left / right of the disk
  double tilt = 0.0;
};

/// w = (d psi/dx2, -d psi/dx1) with psi = x2 * sum_j weight_j beta_j, each
/// off-axis bump paired with its mirror image. Symmetric, solenoidal and
/// compactly supported in the union of the disks.
class BumpField {
 public:
  explicit BumpField(std::vector<Bump> bumps);

  /// Value and Jacobian of w.
  FieldSample eval(const Vec2& x) const;
  const std::vector<Bump>& bumps() const { return bumps_; }

 private:
  std::vector<Bump> bumps_;  // including mirror partners
};

struct TrialRegion {
  double x1_lo = 0.0;
  double x1_hi = 1.0;
};

/// Deterministic trial generator: trial t draws its centre from
/// derive_seed(seed, t) and cycles through radii 2^{-j} of the local room
/// (j = t mod 37), so that every length scale down to ~1e-11 is probed.
/// Kinds cycle through on-axis bumps, on-axis bumps hugging a boundary
/// crossing of the axis, and mirrored off-axis pairs.
BumpField make_trial(const DomainSpec& spec, const TrialRegion& region, std::uint64_t seed,
                     int t);

/// Integrals of a trial against A over its support (upper half doubled):
/// n = int (w.grad)w.A, d = int |grad w|^2, q = int |A|^2 |w|^2.
struct TrialIntegrals {
  double n = 0.0, d = 0.0, q = 0.0;
};
TrialIntegrals trial_integrals(const BumpField& w, const FieldFn& A);

struct LerayHopfStats {
  double ratio = 0.0;            // max |n| / d
  double quadratic_ratio = 0.0;  // max q / d
  int trials = 0;
  int skipped = 0;  // degenerate trials (d = 0)
  std::vector<double> per_trial;
};

/// Requires trials >= 20.
LerayHopfStats leray_hopf_ratio(const FieldFn& A, const DomainSpec& spec,
                                const TrialRegion& region, int trials, std::uint64_t seed);

}  // namespace outflux
