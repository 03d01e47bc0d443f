// Sampled functional inequalities on the ladder cells, the Saint-Venant
// recursion for the Dirichlet integrals y_k and the growth constant.
#pragma once

#include "outflux/geometry.hpp"
#include "outflux/solver.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace outflux {

// ---------------------------------------------------------------- Hardy

enum class HardySides { Bottom, BottomAndTop };

/// Rectangle (0, width) x (0, height) with the zero-trace set on the bottom
/// side, or on both horizontal sides.
struct HardyRegion {
  double width = 1.0;
  double height = 1.0;
  HardySides sides = HardySides::Bottom;
};

/// w(x) = amplitude * P(x1 / width) * rho(d / height) with
/// rho(s) = s^alpha * q(s); P and q are monomial coefficient lists. For two
/// sides the profile is mirrored about the midline.
struct HardyTrial {
  double alpha = 1.0;
  std::vector<double> q{1.0};
  std::vector<double> p{1.0};
  double amplitude = 1.0;
};

/// int |w|^2 / dist^2 over int |grad w|^2, with exact monomial moments.
double hardy_ratio(const HardyRegion& region, const HardyTrial& trial);

/// Trial i of the sampled family: the first six are pure powers d^alpha,
/// alpha in {0.52, 0.55, 0.6, 0.75, 1, 1.5}; the rest add random cubic
/// factors. Requires alpha > 1/2 so both integrals are finite.
HardyTrial hardy_trial(std::uint64_t seed, int index);

struct InequalityFit {
  double constant = 0.0;  // max ratio over the trials
  double doubled = 0.0;   // same with twice as many trials
  std::vector<double> ratios;
  /// Relative change under trial doubling.
  double drift() const { return constant > 0.0 ? (doubled - constant) / constant : 0.0; }
};

/// Requires trials >= 20.
InequalityFit hardy_check(const HardyRegion& region, int trials, std::uint64_t seed);

// ------------------------------------------------- cell inequalities

/// Region {x0 < x1 < x0 + length, |x2| < wall(x1)} with the reference
/// height g_ref used to normalize the constants.
struct CellRegion {
  double x0 = 0.0;
  double length = 1.0;
  std::function<double(double)> wall;
  std::function<double(double)> wall_d1;
  double g_ref = 1.0;
};

/// omega_k of the ladder with g_ref = g(R_k).
CellRegion ladder_cell(const DomainSpec& spec, const TruncationLadder& ladder, int k);
/// Rectangle width x height (walls at +-height/2).
CellRegion rectangle_cell(double width, double height, double g_ref = 1.0);

enum class TrialFamily {
  WallPolynomial,  // (1 - t^2) times a random bicubic; free on the sections
  ProductSine,     // random sine modes up to 3, zero on the whole boundary
};

/// Scalar test function in cell coordinates s = (x1 - x0) / length,
/// t = x2 / wall(x1).
struct CellTrial {
  TrialFamily family = TrialFamily::WallPolynomial;
  std::vector<double> coefficients;  // 16 entries, (a, b) -> 4 a + b
  double amplitude = 1.0;
};

/// Trial 0 of ProductSine is the lowest mode alone.
CellTrial cell_trial(TrialFamily family, std::uint64_t seed, int index);

struct CellIntegrals {
  double l2_sq = 0.0;    // int u^2
  double grad_sq = 0.0;  // int |grad u|^2
  double l4_4 = 0.0;     // int u^4
};

CellIntegrals integrate_trial(const CellRegion& cell, const CellTrial& trial);

/// Ratio int u^2 / (g_ref^2 int |grad u|^2).
double poincare_ratio(const CellRegion& cell, const CellIntegrals& I);
/// Ratio ||u||_4 / (g_ref^{1/2} ||grad u||).
double l4_ratio(const CellRegion& cell, const CellIntegrals& I);

InequalityFit poincare_check(const CellRegion& cell, TrialFamily family, int trials,
                             std::uint64_t seed);

struct L4Fit {
  InequalityFit direct;
  /// Fitted constant of ||u||_4 <= m ||grad u||^{1/2} ||u||^{1/2}.
  double multiplicative = 0.0;
  /// Per trial: m times the fourth root of the trial's Poincare ratio.
  std::vector<double> chained;
  bool chain_holds() const;
};

L4Fit l4_check(const CellRegion& cell, TrialFamily family, int trials, std::uint64_t seed);

/// max / min of a positive sequence (1 for a single entry, infinity when
/// the minimum is not positive).
double spread(const std::vector<double>& values);

// ------------------------------------------------------- Saint-Venant

/// c (|a|^2 + |a|^4 + |f|_*^2).
double data_constant(double c, double a_norm, double f_star);

struct QSequence {
  std::vector<double> R, g;
  std::vector<double> integral;   // int_{R_0}^{R_k} g^{-3}
  std::vector<double> Q;          // 2 c_data (1 + integral)
  std::vector<double> increment;  // int_{R_{k-1}}^{R_k} g^{-3} / (1 + integral), k >= 1
  /// (c_* dQ + c_** g(R_k) dQ^{3/2}) / (Q_k / 2) for k < K.
  std::vector<double> admissibility;
  std::optional<int> k0;  // admissible for every k in [k0, K)
};

/// Q_k for k = 0..K on the ladder.
QSequence q_sequence(double c_data, const OutletProfile& profile, const TruncationLadder& ladder,
                     double c_star, double c_2star, int K);

struct ClaimInput {
  std::vector<double> y, Q, gR;
  double c_star = 0.0;
  double c_2star = 0.0;
};

enum class StepStatus {
  Proved,         // the induction step applies at k
  HoldsUnproved,  // y_k <= Q_k but a hypothesis at k fails
  Violated,       // y_k > Q_k
};

struct ClaimVerdict {
  std::vector<StepStatus> status;  // k = 0..N
  std::vector<char> recursion;     // y_k <= F_k(y_{k+1} - y_k) + Q_k / 2, k < N
  std::vector<char> admissible;    // Q_k / 2 >= F_k(Q_{k+1} - Q_k), k < N
  std::optional<int> first_violation;  // largest violating k
  bool all_hold() const { return !first_violation; }
};

/// Backward induction from k = N: when y_{k+1} <= Q_{k+1} and both
/// hypotheses hold at k, monotonicity of F_k(tau) = c_* tau +
/// c_** g_k tau^{3/2} gives y_k <= Q_k. Throws HypothesisError unless
/// y >= 0 is nondecreasing, Q, c_*, c_** >= 0, sizes agree and y_N <= Q_N.
/// Both hypotheses are compared with a relative slack of 1e-12.
ClaimVerdict saint_venant_claim(const ClaimInput& in);

/// y_k <= Q_k checked directly.
std::vector<char> exhaustive_claim(const ClaimInput& in);

struct EstimateLedger {
  std::vector<double> R, g, integral, y, Q;
  double c_star = 0.0, c_2star = 0.0;
  double c_data = 0.0;  // smallest value making the recursion hold
  QSequence q;
  ClaimVerdict claim;
  std::map<std::string, bool> verdicts;
};

/// Fits c_data from the profile y (k = 0..N) and evaluates the recursion,
/// the admissibility condition and the claim.
EstimateLedger build_ledger(const std::vector<double>& y, const DomainSpec& spec,
                            const TruncationLadder& ladder, double c_star, double c_2star);

// ------------------------------------------------------------- growth

/// max_k y_k / (1 + int_{R_0}^{R_k} g^{-3}) and its argmax.
std::pair<double, int> growth_constant(const std::vector<double>& y, const OutletProfile& profile,
                                       const TruncationLadder& ladder);

struct GrowthReport {
  std::vector<int> levels;
  std::vector<double> c_hat;
  std::vector<int> argmax;
  double factor = 1.0;  // spread of c_hat over the levels
  bool stable() const { return factor <= 2.0; }
};

GrowthReport growth_bound_check(const ContinuationState& state, const OutletProfile& profile,
                                const TruncationLadder& ladder);

struct SaturationReport {
  bool increments_decreasing = false;  // y_{k+1} - y_k, last level
  double last_fraction = 0.0;          // last increment / y_max
  bool differences_decreasing = false;  // Omega_1 level differences
  bool saturated() const { return increments_decreasing && last_fraction < 0.05; }
};

SaturationReport saturation_check(const ContinuationState& state);

}  // namespace outflux
