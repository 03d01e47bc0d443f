// Symmetric domain with one outlet: profile g, truncation ladder, region
// classification and staircase meshes of truncations.
#pragma once

#include "outflux/common.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace outflux {

enum class ProfileKind { Constant, Power };

/// Outlet half-width g(t) = scale * (1 + t)^alpha (alpha = 0 for channels),
/// valid for t >= r_star.
class OutletProfile {
 public:
  static OutletProfile constant(double scale, double r_star);
  static OutletProfile power(double alpha, double scale, double r_star);

  ProfileKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double scale() const { return scale_; }
  double r_star() const { return r_star_; }

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;

  /// Numeric sup of |g'| on [r_star, r_star + span] (log-spaced samples).
  double lipschitz_estimate(double span = 1e6) const;
  /// Numeric sups of |g'| and |g g''|.
  double sup_abs_d1(double span = 1e6) const { return lipschitz_estimate(span); }
  double sup_abs_g_d2(double span = 1e6) const;

  /// Positivity and Lipschitz(L) checks on sampled pairs; throws
  /// HypothesisError("profile-invalid ...") on failure.
  void validate(double L, int samples = 400, double span = 1e3) const;

 private:
  ProfileKind kind_ = ProfileKind::Constant;
  double alpha_ = 0.0;
  double scale_ = 1.0;
  double r_star_ = 0.0;
};

enum class OutletKind { Inner, Outer };

/// Circular hole centred on the symmetry axis.
struct Hole {
  double center = 0.0;
  double radius = 0.0;
};

/// Omega = core [x_left, R0] minus holes, joined to the outlet x1 >= R0.
/// The wall half-height is factor * g(max(x1, r_star)), factor = 1 for
/// D = D_out and gamma / (gamma + 1) for D = D_in.
struct DomainSpec {
  OutletProfile profile;
  double gamma = 0.5;
  OutletKind outlet = OutletKind::Outer;
  double x_left = 0.0;
  double R0 = 1.0;
  std::vector<Hole> holes;  // sorted by center; the last one is Gamma_N

  double wall(double x1) const;
  double wall_factor() const;
  /// Strict interior membership (ignores truncation).
  bool inside(const Vec2& x) const;
  /// Abscissa where the outlet carrier starts: centre of the last hole, or
  /// x_left when there are no holes.
  double drain_start() const;
  /// Throws HypothesisError when symmetry/axis-crossing/containment fail.
  void validate() const;
};

/// Ladder R_{l+1} = R_l + g(R_l) / (2 L_eff).
struct TruncationLadder {
  std::vector<double> radii;
  double L = 0.0;      // estimated Lipschitz constant of g
  double L_eff = 0.5;  // max(L, 1/2)
  bool sandwich_ok = true;
  double worst_sandwich_margin = 0.0;

  int K() const { return static_cast<int>(radii.size()) - 1; }
  double R(int k) const { return radii.at(static_cast<std::size_t>(k)); }
};

/// Builds K + 1 radii from R0 and checks 1/2 g(R_k) <= g(t) <= 3/2 g(R_k) on
/// 100 points per interval.
TruncationLadder build_ladder(const OutletProfile& profile, double R0, int K);

enum class Region { Core, Cell, Exterior, Boundary };
enum class BoundaryKind { None, Wall, Inlet, Hole, Section };

struct RegionTag {
  Region region = Region::Exterior;
  int index = -1;  // cell k, hole i or section k
  BoundaryKind boundary = BoundaryKind::None;

  bool operator==(const RegionTag&) const = default;
};

/// Region of x relative to the ladder. Points within 1e-9 * diameter of a
/// boundary piece are tagged Boundary. Mirror points get identical tags.
RegionTag classify_point(const DomainSpec& spec, const TruncationLadder& ladder, const Vec2& x);

struct GIntegral {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive quadrature of g^{-3} on [a, b] (b may be +inf).
GIntegral integral_g_minus3(const OutletProfile& profile, double a, double b);

enum class FluxCase { Finite, Infinite };  // case (i) / case (ii)

struct CaseReport {
  FluxCase flux_case = FluxCase::Infinite;
  double decay_exponent = 0.0;  // p in J_k ~ k^{-p}
  std::optional<double> total;  // integral to infinity for case (i)
};

/// Classifies by the power-law decay of the ladder increments
/// J_k = int_{R_k}^{R_{k+1}} g^{-3}: summable when p > 1.
CaseReport classify_case(const OutletProfile& profile, double R0, int rungs = 60);

class MeshResolutionError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Tensor grid of the upper half of Omega_k with active (fully interior)
/// rectangular cells; x2 lines are uniform with spacing h from the axis,
/// x1 lines contain x_left, R0, ..., R_k.
struct StaircaseGrid {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<char> active;  // (i, j) -> i * ny + j for cells
  int level = 0;

  int nx() const { return static_cast<int>(xs.size()) - 1; }
  int ny() const { return static_cast<int>(ys.size()) - 1; }
  bool is_active(int i, int j) const {
    return i >= 0 && j >= 0 && i < nx() && j < ny() && active[i * ny() + j];
  }
  int active_count() const;
  /// Cell containing x (upper half), or nullopt.
  std::optional<std::pair<int, int>> locate(const Vec2& x) const;
};

/// `stretch` scales the x1 spacing with wall(R_j)/wall(R0) in the outlet.
StaircaseGrid build_half_grid(const DomainSpec& spec, const TruncationLadder& ladder, int k,
                              double h, bool stretch = false);

struct MeshEdge {
  int a = 0, b = 0;
  BoundaryKind tag = BoundaryKind::None;
  int index = -1;
};

/// Full (mirrored) quadrilateral mesh of Omega_k.
struct TruncationMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 4>> cells;
  std::vector<MeshEdge> boundary;
  std::vector<int> mirror;        // node -> mirror node
  std::vector<int> section_chain;  // nodes on sigma(R_k), bottom to top

  int euler_characteristic() const;
};

TruncationMesh mesh_truncation(const DomainSpec& spec, const TruncationLadder& ladder, int k,
                               double h);

}  // namespace outflux
