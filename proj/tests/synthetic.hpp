// Random inputs for the Saint-Venant claim that satisfy its hypotheses by
// construction; shared by the estimate tests and the acceptance run.
#pragma once

#include "outflux/estimates.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>

namespace outflux::testing {

/// Root of an increasing h on [lo, hi] with h(lo) <= 0 <= h(hi).
template <typename H>
double increasing_root(H h, double lo, double hi) {
  boost::math::tools::eps_tolerance<double> tol(50);
  const auto [a, b] = boost::math::tools::bisect(h, lo, hi, tol);
  return a;  // left end keeps h <= 0
}

/// Q grows with increments up to the admissibility limit; y is built
/// backwards from y_N <= Q_N inside the feasible set of the recursion.
inline ClaimInput random_claim_instance(std::uint64_t seed, int N) {
  SplitMix rng(seed);
  ClaimInput in;
  in.c_star = rng.uniform(0.0, 2.0);
  in.c_2star = rng.uniform(0.0, 1.0);
  auto F = [&](int k, double tau) {
    return in.c_star * tau + in.c_2star * in.gR[k] * std::pow(tau, 1.5);
  };
  for (int k = 0; k <= N; ++k) in.gR.push_back(rng.uniform(0.5, 3.0));
  in.Q.push_back(rng.uniform(0.5, 2.0));
  for (int k = 0; k < N; ++k) {
    const double half = 0.5 * in.Q[k];
    double hi = 1.0;
    while (F(k, hi) < half) hi *= 2.0;
    const double d_max = increasing_root([&](double d) { return F(k, d) - half; }, 0.0, hi);
    in.Q.push_back(in.Q[k] + rng.uniform(0.0, 1.0) * d_max);
  }
  in.y.assign(static_cast<std::size_t>(N) + 1, 0.0);
  in.y[N] = rng.uniform(0.0, 1.0) * in.Q[N];
  for (int k = N - 1; k >= 0; --k) {
    const double up = in.y[k + 1], half = 0.5 * in.Q[k];
    auto h = [&](double y) { return y - F(k, up - y) - half; };
    const double y_max = h(up) <= 0.0 ? up : increasing_root(h, 0.0, up);
    const double u = rng.uniform();
    in.y[k] = y_max * (1.0 - 0.5 * u * u);
  }
  return in;
}

}  // namespace outflux::testing
