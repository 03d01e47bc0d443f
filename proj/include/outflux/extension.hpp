// Symmetric solenoidal extension A of the boundary data: flux carriers along
// thin strips, the outlet drain, collar correctors and flux bookkeeping.
//
// Boundary components are indexed c = 0 for the outer boundary (data lives on
// the left wall x1 = x_left) and c = 1..N for holes (hole c - 1). Fluxes are
// taken with the normal pointing out of Omega.
#pragma once

#include "outflux/common.hpp"
#include "outflux/cutoffs.hpp"
#include "outflux/geometry.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace outflux {

/// Per-hole trace: a.n = flux / (2 pi r) (1 + beta cos(theta)), tangential
/// component swirl * sin(theta) (theta measured from the positive x1 axis).
struct HoleTrace {
  double flux = 0.0;
  double beta = 0.0;
  double swirl = 0.0;
};

struct BoundaryData {
  double inflow_flux = 0.0;  // parabolic profile on the left wall
  std::vector<HoleTrace> holes;

  double flux(int component) const;
  double total_flux() const;
  int components() const { return 1 + static_cast<int>(holes.size()); }
  /// Trace on the left wall at height x2 and its x2-derivative.
  std::pair<Vec2, Vec2> inlet_trace(const DomainSpec& spec, double x2) const;
  /// Trace on hole i at angle theta and its theta-derivative.
  std::pair<Vec2, Vec2> hole_trace(const DomainSpec& spec, int i, double theta) const;
  /// Boundary data with every flux and swirl scaled by s.
  BoundaryData scaled(double s) const;
};

/// Corridors along the axis joining each component to the last hole.
struct StripSpec {
  double delta = 0.0;                // half-height
  std::vector<double> start;         // per component c < N: X_c - eta_c
  double end = 0.0;                  // X_N + eta_N
};

/// delta = 0.5 min(r_i, wall), eta_i = r_i / 2; the outer strip starts at
/// x_left - delta. `delta_override` replaces the automatic half-height.
StripSpec make_strips(const DomainSpec& spec, std::optional<double> delta_override = {});
/// Throws HypothesisError when the strip invariants fail.
void validate_strips(const DomainSpec& spec, const StripSpec& strips);

/// xi~ = (-d xi/dx2, d xi/dx1) for x2 >= 0, mirrored (first component even,
/// second odd) for x2 < 0.
FieldSample tilde_xi_field(const OutletCutoff& cutoff, const Vec2& x);

enum class TermKind { CarrierStrip, CarrierOutlet, Corrector };
std::string to_string(TermKind kind);

struct ExtensionTerm {
  TermKind kind = TermKind::CarrierStrip;
  int component = 0;
  FieldFn field;
  std::vector<double> flux;  // flux through each component
};

/// Carrier moving `flux` from component c (< N) to the last hole.
ExtensionTerm carrier_strip(const DomainSpec& spec, const StripSpec& strips, int c, double flux,
                            double epsilon);

/// b_inf = -(F/2) xi~ for x1 >= drain_start, zero before. Throws
/// HypothesisError when the band top gamma g / (1 + gamma) does not cross
/// the last hole.
ExtensionTerm carrier_outlet(const DomainSpec& spec, const OutletCutoff& cutoff, double flux);

/// Trace value and derivative along a boundary parameter (x2 on the left
/// wall, theta on a hole).
using CurveTrace = std::function<std::pair<Vec2, Vec2>(double)>;

/// curl(chi(d) (E(s) + d T(s))) in a collar of width chi.rho() around the
/// component; E, T are adaptive cubic Hermite fits of the residual trace.
/// Throws PreconditionError when the residual flux exceeds 1e-8.
ExtensionTerm corrector(const DomainSpec& spec, int component, const CurveTrace& residual,
                        const HopfCutoff& chi);

/// (A1(x) + A1(x'), A2(x) - A2(x')) / 2 with x' the mirror point.
FieldFn symmetrize(FieldFn field);

struct ExtensionOptions {
  double epsilon = 0.1;
  std::optional<double> delta;
  std::optional<double> collar;  // corrector collar width
};

struct ExtensionField {
  std::vector<ExtensionTerm> terms;
  StripSpec strips;
  double epsilon = 0.0;
  std::vector<double> collars;  // per component

  FieldSample eval(const Vec2& x) const;
  FieldFn as_function() const;
  /// Sum over terms of the per-component fluxes.
  std::vector<double> ledger() const;
};

/// Default collar width for a component: half its clearance to the other
/// boundary pieces.
double default_collar(const DomainSpec& spec, int component);

ExtensionField assemble_extension(const DomainSpec& spec, const BoundaryData& data,
                                  const ExtensionOptions& options);

/// Flux of a field through component c (normal out of Omega).
double boundary_flux(const FieldFn& field, const DomainSpec& spec, int component);
/// Flux through the cross-section {x1} x (-wall, wall) in the +x1 direction.
double cross_section_flux(const FieldFn& field, const DomainSpec& spec, double x1);

struct DecayReport {
  double sup_value_g = 0.0;  // sup |b| g(x1)
  double sup_grad_g2 = 0.0;  // sup |grad b| g(x1)^2
};

/// Sampled decay suprema on [x1_lo, x1_hi] over the upper half.
DecayReport decay_check(const FieldFn& field, const DomainSpec& spec, double x1_lo,
                        double x1_hi, int samples);

}  // namespace outflux
