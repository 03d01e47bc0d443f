#include "outflux/estimates.hpp"

#include "outflux/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace outflux {

namespace {

constexpr double kPi = std::numbers::pi;

// int_0^top s^e ds for e > -1.
double moment(double e, double top) { return std::pow(top, e + 1.0) / (e + 1.0); }

void normal_fill(std::vector<double>& v, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (double& x : v) x = scale * n(rng);
}

}  // namespace

// ---------------------------------------------------------------- Hardy

double hardy_ratio(const HardyRegion& region, const HardyTrial& trial) {
  if (!(trial.alpha > 0.5)) throw PreconditionError("hardy trial needs alpha > 1/2");
  const double a = trial.alpha;
  const bool both = region.sides == HardySides::BottomAndTop;
  const double top = both ? 0.5 : 1.0;
  // rho integrals on [0, top] in units of the height.
  double weighted = 0.0, slope = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < trial.q.size(); ++i) {
    for (std::size_t j = 0; j < trial.q.size(); ++j) {
      const double qq = trial.q[i] * trial.q[j];
      const double e = 2.0 * a - 2.0 + static_cast<double>(i + j);
      weighted += qq * moment(e, top);
      slope += (a + i) * (a + j) * qq * moment(e, top);
      mass += qq * moment(e + 2.0, top);
    }
  }
  double p_mass = 0.0, p_slope = 0.0;
  for (std::size_t i = 0; i < trial.p.size(); ++i) {
    for (std::size_t j = 0; j < trial.p.size(); ++j) {
      const double pp = trial.p[i] * trial.p[j];
      p_mass += pp * moment(static_cast<double>(i + j), 1.0);
      if (i > 0 && j > 0) p_slope += static_cast<double>(i * j) * pp * moment(i + j - 2.0, 1.0);
    }
  }
  const double W = region.width, H = region.height, amp2 = trial.amplitude * trial.amplitude;
  const double mirror_factor = both ? 2.0 : 1.0;
  const double lhs = amp2 * mirror_factor * W * p_mass * weighted / H;
  const double rhs = amp2 * mirror_factor * (p_slope / W * H * mass + W * p_mass * slope / H);
  return lhs / rhs;
}

HardyTrial hardy_trial(std::uint64_t seed, int index) {
  static constexpr double alphas[] = {0.52, 0.55, 0.6, 0.75, 1.0, 1.5};
  HardyTrial t;
  t.alpha = alphas[index % 6];
  if (index < 6) return t;
  t.q.assign(4, 0.0);
  t.p.assign(4, 0.0);
  normal_fill(t.q, derive_seed(seed, 2 * static_cast<std::uint64_t>(index)), 0.5);
  normal_fill(t.p, derive_seed(seed, 2 * static_cast<std::uint64_t>(index) + 1), 0.5);
  t.q[0] += 1.0;
  t.p[0] += 1.0;
  return t;
}

InequalityFit hardy_check(const HardyRegion& region, int trials, std::uint64_t seed) {
  if (trials < 20) throw PreconditionError("hardy_check needs at least 20 trials");
  std::vector<double> r(2 * static_cast<std::size_t>(trials));
  parallel_for(r.size(), [&](std::size_t i) {
    r[i] = hardy_ratio(region, hardy_trial(seed, static_cast<int>(i)));
  });
  InequalityFit fit;
  fit.ratios.assign(r.begin(), r.begin() + trials);
  fit.constant = *std::max_element(fit.ratios.begin(), fit.ratios.end());
  fit.doubled = *std::max_element(r.begin(), r.end());
  return fit;
}

// ------------------------------------------------- cell inequalities

CellRegion ladder_cell(const DomainSpec& spec, const TruncationLadder& ladder, int k) {
  if (k < 0 || k + 1 > ladder.K()) throw PreconditionError("ladder cell index out of range");
  CellRegion c;
  c.x0 = ladder.R(k);
  c.length = ladder.R(k + 1) - ladder.R(k);
  c.wall = [spec](double x1) { return spec.wall(x1); };
  c.wall_d1 = [spec](double x1) {
    return x1 < spec.profile.r_star() ? 0.0 : spec.wall_factor() * spec.profile.d1(x1);
  };
  c.g_ref = spec.profile.value(std::max(ladder.R(k), spec.profile.r_star()));
  return c;
}

CellRegion rectangle_cell(double width, double height, double g_ref) {
  CellRegion c;
  c.length = width;
  c.wall = [height](double) { return 0.5 * height; };
  c.wall_d1 = [](double) { return 0.0; };
  c.g_ref = g_ref;
  return c;
}

CellTrial cell_trial(TrialFamily family, std::uint64_t seed, int index) {
  CellTrial t;
  t.family = family;
  t.coefficients.assign(16, 0.0);
  if (family == TrialFamily::ProductSine && index == 0) {
    t.coefficients[0] = 1.0;
    return t;
  }
  normal_fill(t.coefficients, derive_seed(seed, static_cast<std::uint64_t>(index)), 1.0);
  return t;
}

namespace {

// Legendre P_0..P_3 and derivatives at z.
void legendre(double z, double* p, double* dp) {
  p[0] = 1.0, dp[0] = 0.0;
  p[1] = z, dp[1] = 1.0;
  p[2] = 0.5 * (3.0 * z * z - 1.0), dp[2] = 3.0 * z;
  p[3] = 0.5 * (5.0 * z * z * z - 3.0 * z), dp[3] = 0.5 * (15.0 * z * z - 3.0);
}

// Value and (d/ds, d/dt) of a trial at cell coordinates (s, t).
std::array<double, 3> trial_jet(const CellTrial& tr, double s, double t) {
  double a[4], da[4], b[4], db[4];
  if (tr.family == TrialFamily::WallPolynomial) {
    legendre(2.0 * s - 1.0, a, da);
    for (double& d : da) d *= 2.0;
    legendre(t, b, db);
  } else {
    for (int m = 0; m < 4; ++m) {
      const double ws = (m + 1) * kPi, wt = 0.5 * (m + 1) * kPi;
      a[m] = std::sin(ws * s), da[m] = ws * std::cos(ws * s);
      b[m] = std::sin(wt * (t + 1.0)), db[m] = wt * std::cos(wt * (t + 1.0));
    }
  }
  double u = 0.0, us = 0.0, ut = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double c = tr.coefficients[4 * i + j];
      u += c * a[i] * b[j];
      us += c * da[i] * b[j];
      ut += c * a[i] * db[j];
    }
  }
  if (tr.family == TrialFamily::WallPolynomial) {
    const double w = 1.0 - t * t;
    ut = w * ut - 2.0 * t * u;
    u *= w;
    us *= w;
  }
  return {tr.amplitude * u, tr.amplitude * us, tr.amplitude * ut};
}

}  // namespace

CellIntegrals integrate_trial(const CellRegion& cell, const CellTrial& trial) {
  const GaussRule& r = gauss_legendre(24);
  const double L = cell.length;
  CellIntegrals I;
  for (std::size_t p = 0; p < r.nodes.size(); ++p) {
    const double s = r.nodes[p], x1 = cell.x0 + L * s;
    const double w = cell.wall(x1), w1 = cell.wall_d1(x1);
    for (std::size_t q = 0; q < r.nodes.size(); ++q) {
      const double t = 2.0 * r.nodes[q] - 1.0;
      const double weight = r.weights[p] * 2.0 * r.weights[q] * L * w;
      const auto [u, us, ut] = trial_jet(trial, s, t);
      const double ux1 = us / L - ut * t * w1 / w, ux2 = ut / w;
      I.l2_sq += weight * u * u;
      I.grad_sq += weight * (ux1 * ux1 + ux2 * ux2);
      I.l4_4 += weight * u * u * u * u;
    }
  }
  return I;
}

double poincare_ratio(const CellRegion& cell, const CellIntegrals& I) {
  return I.l2_sq / (cell.g_ref * cell.g_ref * I.grad_sq);
}

double l4_ratio(const CellRegion& cell, const CellIntegrals& I) {
  return std::pow(I.l4_4, 0.25) / (std::sqrt(cell.g_ref) * std::sqrt(I.grad_sq));
}

namespace {

std::vector<CellIntegrals> sample(const CellRegion& cell, TrialFamily family, int count,
                                  std::uint64_t seed) {
  std::vector<CellIntegrals> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = integrate_trial(cell, cell_trial(family, seed, static_cast<int>(i)));
  });
  return out;
}

InequalityFit fit_from(const std::vector<double>& all, int trials) {
  InequalityFit fit;
  fit.ratios.assign(all.begin(), all.begin() + trials);
  fit.constant = *std::max_element(fit.ratios.begin(), fit.ratios.end());
  fit.doubled = *std::max_element(all.begin(), all.end());
  return fit;
}

}  // namespace

InequalityFit poincare_check(const CellRegion& cell, TrialFamily family, int trials,
                             std::uint64_t seed) {
  if (trials < 1) throw PreconditionError("poincare_check needs trials");
  const auto I = sample(cell, family, 2 * trials, seed);
  std::vector<double> r;
  for (const auto& x : I) r.push_back(poincare_ratio(cell, x));
  return fit_from(r, trials);
}

bool L4Fit::chain_holds() const {
  for (std::size_t i = 0; i < direct.ratios.size(); ++i)
    if (direct.ratios[i] > chained[i] * (1.0 + 1e-12)) return false;
  return true;
}

L4Fit l4_check(const CellRegion& cell, TrialFamily family, int trials, std::uint64_t seed) {
  if (trials < 1) throw PreconditionError("l4_check needs trials");
  const auto I = sample(cell, family, 2 * trials, seed);
  std::vector<double> direct;
  L4Fit fit;
  for (const auto& x : I) {
    direct.push_back(l4_ratio(cell, x));
    const double m = std::pow(x.l4_4 / (x.grad_sq * x.l2_sq), 0.25);
    fit.multiplicative = std::max(fit.multiplicative, m);
  }
  fit.direct = fit_from(direct, trials);
  for (int i = 0; i < trials; ++i)
    fit.chained.push_back(fit.multiplicative * std::pow(poincare_ratio(cell, I[i]), 0.25));
  return fit;
}

double spread(const std::vector<double>& values) {
  if (values.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*lo > 0.0)) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

// ------------------------------------------------------- Saint-Venant

double data_constant(double c, double a_norm, double f_star) {
  const double a2 = a_norm * a_norm;
  return c * (a2 + a2 * a2 + f_star * f_star);
}

namespace {

double F(double c_star, double c_2star, double g, double tau) {
  return c_star * tau + c_2star * g * std::pow(tau, 1.5);
}

// a <= b up to rounding in b.
bool leq(double a, double b) { return a <= b + 1e-12 * std::abs(b); }

}  // namespace

QSequence q_sequence(double c_data, const OutletProfile& profile, const TruncationLadder& ladder,
                     double c_star, double c_2star, int K) {
  if (K < 0 || K > ladder.K()) throw PreconditionError("q_sequence index beyond the ladder");
  if (c_data < 0.0 || c_star < 0.0 || c_2star < 0.0)
    throw PreconditionError("q_sequence needs nonnegative constants");
  QSequence s;
  double acc = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double R = ladder.R(k);
    double step = 0.0;
    if (k > 0) step = integral_g_minus3(profile, ladder.R(k - 1), R).value;
    acc += step;
    s.R.push_back(R);
    s.g.push_back(profile.value(std::max(R, profile.r_star())));
    s.integral.push_back(acc);
    s.Q.push_back(2.0 * c_data * (1.0 + acc));
    s.increment.push_back(step / (1.0 + acc));
  }
  for (int k = 0; k < K; ++k) {
    const double rhs = F(c_star, c_2star, s.g[k], s.Q[k + 1] - s.Q[k]);
    s.admissibility.push_back(rhs == 0.0 ? 0.0 : rhs / (0.5 * s.Q[k]));
  }
  int k0 = K;
  while (k0 > 0 && s.admissibility[k0 - 1] <= 1.0) --k0;
  if (k0 < K || K == 0) s.k0 = k0;
  return s;
}

ClaimVerdict saint_venant_claim(const ClaimInput& in) {
  const std::size_t n = in.y.size();
  if (n == 0 || in.Q.size() != n || in.gR.size() != n)
    throw HypothesisError("claim: y, Q and g(R_k) must have equal nonzero length");
  if (in.c_star < 0.0 || in.c_2star < 0.0) throw HypothesisError("claim: negative constants");
  for (std::size_t k = 0; k < n; ++k) {
    if (!(in.y[k] >= 0.0) || !(in.Q[k] >= 0.0)) throw HypothesisError("claim: negative entries");
    if (k > 0 && in.y[k] < in.y[k - 1]) throw HypothesisError("claim: y must be nondecreasing");
  }
  const int N = static_cast<int>(n) - 1;
  if (in.y[N] > in.Q[N]) throw HypothesisError("claim: y_N exceeds Q_N");

  ClaimVerdict v;
  v.status.assign(n, StepStatus::Proved);
  v.recursion.assign(static_cast<std::size_t>(N), 0);
  v.admissible.assign(static_cast<std::size_t>(N), 0);
  for (int k = N - 1; k >= 0; --k) {
    const double g = in.gR[k];
    v.recursion[k] = leq(in.y[k], F(in.c_star, in.c_2star, g, in.y[k + 1] - in.y[k]) + 0.5 * in.Q[k]);
    v.admissible[k] = leq(F(in.c_star, in.c_2star, g, in.Q[k + 1] - in.Q[k]), 0.5 * in.Q[k]);
    // y_{k+1} <= Q_{k+1} is available unless step k + 1 was a violation.
    const bool above_ok = v.status[k + 1] != StepStatus::Violated;
    if (above_ok && v.recursion[k] && v.admissible[k]) {
      v.status[k] = StepStatus::Proved;
    } else if (in.y[k] > in.Q[k]) {
      v.status[k] = StepStatus::Violated;
      if (!v.first_violation) v.first_violation = k;
    } else {
      v.status[k] = StepStatus::HoldsUnproved;
    }
  }
  return v;
}

std::vector<char> exhaustive_claim(const ClaimInput& in) {
  std::vector<char> out;
  for (std::size_t k = 0; k < in.y.size(); ++k) out.push_back(in.y[k] <= in.Q[k]);
  return out;
}

EstimateLedger build_ledger(const std::vector<double>& y, const DomainSpec& spec,
                            const TruncationLadder& ladder, double c_star, double c_2star) {
  if (y.empty()) throw PreconditionError("ledger needs at least one y_k");
  const int N = static_cast<int>(y.size()) - 1;
  // Shape of the sequence first (c_data = 1), then the fitted constant.
  const QSequence unit = q_sequence(1.0, spec.profile, ladder, c_star, c_2star, N);
  double c = y[N] / (2.0 * (1.0 + unit.integral[N]));
  for (int k = 0; k < N; ++k) {
    const double excess = y[k] - F(c_star, c_2star, unit.g[k], y[k + 1] - y[k]);
    c = std::max(c, excess / (1.0 + unit.integral[k]));
  }
  EstimateLedger L;
  L.c_star = c_star;
  L.c_2star = c_2star;
  L.c_data = std::max(c, 0.0);
  L.q = q_sequence(L.c_data, spec.profile, ladder, c_star, c_2star, N);
  L.R = L.q.R;
  L.g = L.q.g;
  L.integral = L.q.integral;
  L.y = y;
  L.Q = L.q.Q;
  L.claim = saint_venant_claim({y, L.Q, L.g, c_star, c_2star});
  auto all = [](const std::vector<char>& v) {
    return std::all_of(v.begin(), v.end(), [](char c) { return c != 0; });
  };
  L.verdicts["recursion"] = all(L.claim.recursion);
  L.verdicts["admissible"] = all(L.claim.admissible);
  L.verdicts["claim"] = L.claim.all_hold();
  L.verdicts["y_nondecreasing"] = std::is_sorted(y.begin(), y.end());
  L.verdicts["q_nondecreasing"] = std::is_sorted(L.Q.begin(), L.Q.end());
  return L;
}

// ------------------------------------------------------------- growth

std::pair<double, int> growth_constant(const std::vector<double>& y, const OutletProfile& profile,
                                       const TruncationLadder& ladder) {
  if (y.empty()) return {0.0, 0};
  const int N = static_cast<int>(y.size()) - 1;
  const QSequence q = q_sequence(1.0, profile, ladder, 0.0, 0.0, N);
  double best = 0.0;
  int arg = 0;
  for (int k = 0; k <= N; ++k) {
    const double c = y[k] / (1.0 + q.integral[k]);
    if (c > best) best = c, arg = k;
  }
  return {best, arg};
}

GrowthReport growth_bound_check(const ContinuationState& state, const OutletProfile& profile,
                                const TruncationLadder& ladder) {
  GrowthReport r;
  for (const auto& l : state.levels) {
    const auto [c, k] = growth_constant(l.y, profile, ladder);
    r.levels.push_back(l.level);
    r.c_hat.push_back(c);
    r.argmax.push_back(k);
  }
  const bool all_zero = std::all_of(r.c_hat.begin(), r.c_hat.end(), [](double c) { return c == 0.0; });
  r.factor = all_zero ? 1.0 : spread(r.c_hat);
  return r;
}

SaturationReport saturation_check(const ContinuationState& state) {
  SaturationReport r;
  if (state.levels.empty()) return r;
  const auto& y = state.levels.back().y;
  r.increments_decreasing = true;
  double prev = std::numeric_limits<double>::infinity(), last = 0.0;
  for (std::size_t k = 1; k < y.size(); ++k) {
    last = y[k] - y[k - 1];
    if (last > prev) r.increments_decreasing = false;
    prev = last;
  }
  const double y_max = *std::max_element(y.begin(), y.end());
  r.last_fraction = y_max > 0.0 ? last / y_max : 0.0;
  std::vector<double> diffs;
  for (const auto& l : state.levels)
    if (l.difference) diffs.push_back(*l.difference);
  r.differences_decreasing = diffs.size() >= 2;
  for (std::size_t i = 1; i < diffs.size(); ++i)
    if (!(diffs[i] < diffs[i - 1])) r.differences_decreasing = false;
  return r;
}

}  // namespace outflux
