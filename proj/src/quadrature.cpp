#include "outflux/quadrature.hpp"

#include "outflux/common.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

namespace outflux {

namespace {

GaussRule build_gauss(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss(n)).first;
  return it->second;
}

GaussRule composite_rule(double a, double b, int panels, int order) {
  const GaussRule& g = gauss_legendre(order);
  GaussRule out;
  const double w = (b - a) / panels;
  for (int p = 0; p < panels; ++p)
    for (int i = 0; i < order; ++i) {
      out.nodes.push_back(a + w * (p + g.nodes[i]));
      out.weights.push_back(w * g.weights[i]);
    }
  return out;
}

GaussRule graded_rule(double a, double b, double finest, int order) {
  const GaussRule& g = gauss_legendre(order);
  GaussRule out;
  std::vector<double> cuts{b};
  while (cuts.back() - a > 2.0 * finest) cuts.push_back(a + 0.5 * (cuts.back() - a));
  cuts.push_back(a);
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double lo = cuts[p + 1], w = cuts[p] - lo;
    for (int i = 0; i < order; ++i) {
      out.nodes.push_back(lo + w * g.nodes[i]);
      out.weights.push_back(w * g.weights[i]);
    }
  }
  return out;
}

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol, double abs_floor, unsigned max_depth) {
  using boost::math::quadrature::gauss_kronrod;
  if (a == b) return {};
  // Boost's termination is relative; handle near-zero integrals with an
  // absolute floor by doing our own bisection on top of the 15-point rule.
  struct Panel {
    double a, b, value, error;
    unsigned depth;
  };
  auto eval = [&](double lo, double hi) {
    double err = 0.0;
    const double v = gauss_kronrod<double, 15>::integrate(f, lo, hi, 0, 0.0, &err);
    // The non-recursive estimate refers to the integral mapped to [-1, 1].
    return Panel{lo, hi, v, err * 0.5 * (hi - lo), 0};
  };
  std::vector<Panel> done;
  std::vector<Panel> work{eval(a, b)};
  double total = work.front().value;
  // Sum of |panel| approximates the L1 norm, so cancelling integrands are
  // judged against their magnitude rather than a near-zero net value.
  double magnitude = std::abs(total);
  while (!work.empty()) {
    Panel p = work.back();
    work.pop_back();
    const double tol = std::max(rel_tol * std::max(std::abs(total), magnitude), abs_floor) *
                       std::max((p.b - p.a) / (b - a), 1e-3);
    if (p.error <= tol || !std::isfinite(p.error)) {
      if (!std::isfinite(p.value)) throw NumericError("quadrature: non-finite integrand");
      done.push_back(p);
      continue;
    }
    if (p.depth >= max_depth) {
      throw NumericError("quadrature did not converge on [" + std::to_string(p.a) + ", " +
                         std::to_string(p.b) + "]");
    }
    const double m = 0.5 * (p.a + p.b);
    Panel l = eval(p.a, m), r = eval(m, p.b);
    l.depth = r.depth = p.depth + 1;
    total += l.value + r.value - p.value;
    magnitude += std::abs(l.value) + std::abs(r.value) - std::abs(p.value);
    work.push_back(l);
    work.push_back(r);
  }
  std::sort(done.begin(), done.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
  QuadResult out;
  for (const auto& p : done) {
    out.value += p.value;
    out.error += p.error;
  }
  return out;
}

QuadResult integrate_to_infinity(const std::function<double(double)>& f, double a,
                                 double rel_tol) {
  // t in (0, 1] -> x = a + (1 - t) / t
  auto g = [&](double t) {
    if (t <= 0.0) return 0.0;
    const double x = a + (1.0 - t) / t;
    return f(x) / (t * t);
  };
  return integrate_adaptive(g, 0.0, 1.0, rel_tol, 1e-15, 60);
}

QuadResult integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                               std::vector<double> breaks, double rel_tol, double abs_floor) {
  std::vector<double> pts{a};
  std::sort(breaks.begin(), breaks.end());
  for (double x : breaks)
    if (x > a && x < b) pts.push_back(x);
  pts.push_back(b);
  QuadResult out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto r = integrate_adaptive(f, pts[i], pts[i + 1], rel_tol, abs_floor);
    out.value += r.value;
    out.error += r.error;
  }
  return out;
}

}  // namespace outflux
