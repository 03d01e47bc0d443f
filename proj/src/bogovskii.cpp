#include "outflux/bogovskii.hpp"

#include "outflux/cutoffs.hpp"
#include "outflux/quadrature.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace outflux {

BogovskiiTransform::BogovskiiTransform(const DomainSpec& spec, const TruncationLadder& ladder,
                                       int k)
    : spec_(spec), k_(k) {
  if (k < 0 || k + 1 > ladder.K()) throw PreconditionError("ladder cell index out of range");
  Rk_ = ladder.R(k);
  Rk1_ = ladder.R(k + 1);
  gk_ = spec.profile.value(Rk_);
  L_ = ladder.L_eff;
  scale_ = 2.0 * L_ / gk_;
}

Vec2 BogovskiiTransform::forward(const Vec2& x) const {
  return Vec2(scale_ * (x(0) - Rk_), scale_ * x(1));
}

Vec2 BogovskiiTransform::inverse(const Vec2& y) const {
  return Vec2(Rk_ + y(0) / scale_, y(1) / scale_);
}

double BogovskiiTransform::profile(double y1) const {
  return scale_ * spec_.wall(Rk_ + y1 / scale_);
}

Vec2 BogovskiiTransform::checked_forward(const Vec2& x) const {
  const double tol = 1e-12 * (1.0 + std::abs(Rk1_));
  if (x(0) < Rk_ - tol || x(0) > Rk1_ + tol || std::abs(x(1)) > spec_.wall(x(0)) + tol)
    throw PreconditionError("point outside the ladder cell");
  return forward(x);
}

bool TransformReport::ok(double L) const {
  return y1_min >= -1e-12 && y1_max <= 1.0 + 1e-12 && max_abs_y2 <= 3.0 * L * (1.0 + 1e-12) &&
         lipschitz <= L * (1.0 + 1e-6) && roundtrip_error <= 1e-12;
}

TransformReport check_transform(const BogovskiiTransform& t, int points) {
  TransformReport r;
  r.y1_min = std::numeric_limits<double>::infinity();
  r.y1_max = -r.y1_min;
  r.h_at_zero = t.profile(0.0);
  const double R = t.R(), span = t.R_next() - t.R();
  const int per_side = std::max(points / 4, 2);
  auto visit = [&](const Vec2& x) {
    const Vec2 y = t.checked_forward(x);
    r.y1_min = std::min(r.y1_min, y(0));
    r.y1_max = std::max(r.y1_max, y(0));
    r.max_abs_y2 = std::max(r.max_abs_y2, std::abs(y(1)));
    const Vec2 back = t.inverse(y);
    r.roundtrip_error = std::max(r.roundtrip_error, (back - x).norm() / (1.0 + x.norm()));
  };
  const double top0 = t.profile(0.0) / t.scale(), top1 = t.profile(1.0) / t.scale();
  for (int i = 0; i < per_side; ++i) {
    const double s = static_cast<double>(i) / (per_side - 1);
    const double x1 = R + s * span;
    const double w = t.profile(t.scale() * (x1 - R)) / t.scale();
    visit(Vec2(x1, w));
    visit(Vec2(x1, -w));
    visit(Vec2(R, (2.0 * s - 1.0) * top0));
    visit(Vec2(R + span, (2.0 * s - 1.0) * top1));
  }
  const int n = std::max(points, 10);
  double prev = t.profile(0.0);
  for (int i = 1; i <= n; ++i) {
    const double y1 = static_cast<double>(i) / n;
    const double h = t.profile(y1);
    r.lipschitz = std::max(r.lipschitz, std::abs(h - prev) * n);
    prev = h;
  }
  return r;
}

StarCheck star_check(const BogovskiiTransform& t, int segments, std::uint64_t seed) {
  SplitMix rng(seed);
  const double L = t.L();
  const Vec2 O(0.0, 0.0), Ap(1.0, L), Am(1.0, -L);
  const Vec2 centroid = (O + Ap + Am) / 3.0;
  auto inside = [&](const Vec2& y) {
    const double tol = 1e-12;
    return y(0) >= -tol && y(0) <= 1.0 + tol && std::abs(y(1)) <= t.profile(std::clamp(y(0), 0.0, 1.0)) + tol;
  };
  StarCheck out;
  for (int s = 0; s < segments; ++s) {
    double a = rng.uniform(), b = rng.uniform();
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    Vec2 p = O + a * (Ap - O) + b * (Am - O);
    p = centroid + 0.98 * (p - centroid);
    // Boundary point: graph of +-h_k or one of the vertical sides.
    Vec2 q;
    const double u = rng.uniform(), side = rng.uniform();
    if (side < 0.6) {
      q = Vec2(u, (rng.uniform() < 0.5 ? 1.0 : -1.0) * t.profile(u));
    } else if (side < 0.8) {
      q = Vec2(0.0, (2.0 * u - 1.0) * t.profile(0.0));
    } else {
      q = Vec2(1.0, (2.0 * u - 1.0) * t.profile(1.0));
    }
    bool ok = true;
    for (int m = 0; m <= 64 && ok; ++m) ok = inside(p + (q - p) * (m / 64.0));
    ++out.segments;
    if (!ok) ++out.failures;
  }
  return out;
}

namespace {

// Quadratic Lagrange basis on [0, 1] with nodes 0, 1/2, 1.
std::array<double, 3> lagrange(double s) {
  return {2.0 * (s - 0.5) * (s - 1.0), -4.0 * s * (s - 1.0), 2.0 * s * (s - 0.5)};
}
std::array<double, 3> lagrange_d(double s) { return {4.0 * s - 3.0, -8.0 * s + 4.0, 4.0 * s - 1.0}; }

struct QuadPoint {
  Vec2 y = Vec2::Zero();
  double weight = 0.0;                    // includes the Jacobian determinant
  std::array<double, 9> N{};
  std::array<Vec2, 9> dN{};                // physical (rescaled-domain) gradients
};

class ReferenceMesh {
 public:
  ReferenceMesh(const BogovskiiTransform& t, const ReferenceMeshSize& size)
      : n1_(size.n1), n2_(size.n2) {
    if (n1_ < 1 || n2_ < 2 || n2_ % 2 != 0) throw PreconditionError("bad reference mesh size");
    NI_ = 2 * n1_ + 1;
    NJ_ = 2 * n2_ + 1;
    nodes_.resize(static_cast<std::size_t>(NI_) * NJ_);
    for (int I = 0; I < NI_; ++I) {
      const double y1 = static_cast<double>(I) / (NI_ - 1);
      const double h = t.profile(y1);
      for (int J = 0; J < NJ_; ++J) nodes_[I * NJ_ + J] = Vec2(y1, h * (-1.0 + 2.0 * J / (NJ_ - 1)));
    }
  }

  int NI() const { return NI_; }
  int NJ() const { return NJ_; }
  int elements() const { return n1_ * n2_; }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  int node(int e, int a) const {
    const int e1 = e / n2_, e2 = e % n2_;
    return (2 * e1 + a / 3) * NJ_ + 2 * e2 + a % 3;
  }
  /// Velocity unknown of node n and component c, -1 on the boundary.
  int dof(int n, int c) const {
    const int I = n / NJ_, J = n % NJ_;
    if (I == 0 || J == 0 || I == NI_ - 1 || J == NJ_ - 1) return -1;
    return ((I - 1) * (NJ_ - 2) + (J - 1)) * 2 + c;
  }
  int velocity_size() const { return 2 * (NI_ - 2) * (NJ_ - 2); }
  Vec2 center(int e) const { return nodes_[node(e, 4)]; }
  double size() const { return 1.0 / n1_; }

  std::vector<QuadPoint> points(int e, const GaussRule& r) const {
    std::vector<QuadPoint> out;
    const std::size_t m = r.nodes.size();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double s = r.nodes[i], t = r.nodes[j];
        const auto Ls = lagrange(s), Lt = lagrange(t), Ds = lagrange_d(s), Dt = lagrange_d(t);
        QuadPoint q;
        Mat2 Jm = Mat2::Zero();
        std::array<Vec2, 9> dref;
        for (int a = 0; a < 9; ++a) {
          q.N[a] = Ls[a / 3] * Lt[a % 3];
          dref[a] = Vec2(Ds[a / 3] * Lt[a % 3], Ls[a / 3] * Dt[a % 3]);
          const Vec2& x = nodes_[node(e, a)];
          q.y += q.N[a] * x;
          Jm += x * dref[a].transpose();
        }
        const double det = Jm.determinant();
        if (!(det > 0.0)) throw NumericError("degenerate reference element");
        const Mat2 JinvT = Jm.inverse().transpose();
        for (int a = 0; a < 9; ++a) q.dN[a] = JinvT * dref[a];
        q.weight = r.weights[i] * r.weights[j] * det;
        out.push_back(q);
      }
    return out;
  }

  std::array<double, 3> pressure(int e, const Vec2& y) const {
    const Vec2 c = center(e);
    return {1.0, (y(0) - c(0)) / size(), (y(1) - c(1)) / size()};
  }

 private:
  int n1_, n2_, NI_, NJ_;
  std::vector<Vec2> nodes_;
};

}  // namespace

DivSolution solve_div(const BogovskiiTransform& t, const std::function<double(const Vec2&)>& f,
                      const ReferenceMeshSize& size, double compat_tol) {
  const ReferenceMesh mesh(t, size);
  const GaussRule& rule = gauss_legendre(4);
  const int ne = mesh.elements();
  const int nv = mesh.velocity_size(), np = 3 * ne;
  const double sc = t.scale();

  // Rescaled data f_hat(y) = f(F^{-1} y) / scale, so that div_y v = f_hat
  // pulls back to div_x u = f.
  std::vector<std::vector<QuadPoint>> pts(ne);
  std::vector<std::vector<double>> fh(ne);
  double mean_hat = 0.0, area = 0.0, abs_phys = 0.0;
  for (int e = 0; e < ne; ++e) {
    pts[e] = mesh.points(e, rule);
    for (const auto& q : pts[e]) {
      const double v = f(t.inverse(q.y)) / sc;
      fh[e].push_back(v);
      mean_hat += q.weight * v;
      area += q.weight;
      abs_phys += q.weight * std::abs(v) / sc;
    }
  }
  DivSolution out;
  out.mean = mean_hat / sc;  // int f dx = int f_hat dy / scale
  if (std::isfinite(compat_tol)) {
    // Mesh-independent check of the compatibility condition.
    auto cell_integral = [&](const std::function<double(double)>& g) {
      return integrate_adaptive(
                 [&](double x1) {
                   const double w = t.profile(sc * (x1 - t.R())) / sc;
                   return integrate_adaptive([&](double x2) { return g(f(Vec2(x1, x2))); }, -w, w,
                                             1e-11, 1e-16)
                       .value;
                 },
                 t.R(), t.R_next(), 1e-11, 1e-16)
          .value;
    };
    out.mean = cell_integral([](double v) { return v; });
    abs_phys = cell_integral([](double v) { return std::abs(v); });
    if (std::abs(out.mean) > compat_tol * std::max(1.0, abs_phys))
      throw PreconditionError("data has nonzero mean over the ladder cell");
  }
  const double shift = mean_hat / area;

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + np + 1);
  double fnorm2 = 0.0;
  for (int e = 0; e < ne; ++e) {
    for (std::size_t p = 0; p < pts[e].size(); ++p) {
      const QuadPoint& q = pts[e][p];
      const double fv = fh[e][p] - shift;
      fnorm2 += q.weight * fv * fv;
      const auto qb = mesh.pressure(e, q.y);
      for (int m = 0; m < 3; ++m) {
        const int row = nv + 3 * e + m;
        rhs[row] += q.weight * qb[m] * fv;
        trip.emplace_back(row, nv + np, q.weight * qb[m]);
        trip.emplace_back(nv + np, row, q.weight * qb[m]);
      }
      for (int a = 0; a < 9; ++a) {
        const int na = mesh.node(e, a);
        for (int c = 0; c < 2; ++c) {
          const int ia = mesh.dof(na, c);
          if (ia < 0) continue;
          for (int b = 0; b < 9; ++b) {
            const int ib = mesh.dof(mesh.node(e, b), c);
            if (ib >= 0) trip.emplace_back(ia, ib, q.weight * q.dN[a].dot(q.dN[b]));
          }
          for (int m = 0; m < 3; ++m) {
            const double v = q.weight * qb[m] * q.dN[a](c);
            trip.emplace_back(nv + 3 * e + m, ia, v);
            trip.emplace_back(ia, nv + 3 * e + m, v);
          }
        }
      }
    }
  }
  Eigen::SparseMatrix<double> M(nv + np + 1, nv + np + 1);
  M.setFromTriplets(trip.begin(), trip.end());
  M.makeCompressed();

  out.n1 = size.n1;
  out.n2 = size.n2;
  out.nodes = mesh.nodes();
  out.values.assign(out.nodes.size(), Vec2::Zero());
  out.f_norm = std::sqrt(fnorm2);
  if (out.f_norm == 0.0) return out;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(M);
  if (lu.info() != Eigen::Success) throw NumericError("divergence system is singular");
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) throw NumericError("divergence system is singular");
  for (std::size_t n = 0; n < out.nodes.size(); ++n)
    for (int c = 0; c < 2; ++c) {
      const int i = mesh.dof(static_cast<int>(n), c);
      if (i >= 0) out.values[n](c) = sol[i];
    }

  // Norms and divergence defects, in rescaled and in physical coordinates.
  double grad2 = 0.0;
  Eigen::VectorXd defect = Eigen::VectorXd::Zero(np), load = Eigen::VectorXd::Zero(np);
  Eigen::VectorXd defect_x = Eigen::VectorXd::Zero(np), load_x = Eigen::VectorXd::Zero(np);
  const double mean_x = shift * sc;  // projected mean in terms of f
  for (int e = 0; e < ne; ++e)
    for (std::size_t p = 0; p < pts[e].size(); ++p) {
      const QuadPoint& q = pts[e][p];
      Mat2 G = Mat2::Zero();
      for (int a = 0; a < 9; ++a) G += out.values[mesh.node(e, a)] * q.dN[a].transpose();
      grad2 += q.weight * G.squaredNorm();
      const double div_y = G.trace();
      const auto qb = mesh.pressure(e, q.y);
      // x coordinates: div_x u = scale div_y v, dx = dy / scale^2.
      const Vec2 x = t.inverse(q.y);
      const double fx = f(x) - mean_x, dx = q.weight / (sc * sc);
      for (int m = 0; m < 3; ++m) {
        defect[3 * e + m] += q.weight * qb[m] * (div_y - (fh[e][p] - shift));
        load[3 * e + m] += q.weight * qb[m] * (fh[e][p] - shift);
        const double qx = mesh.pressure(e, t.forward(x))[m];
        defect_x[3 * e + m] += dx * qx * (sc * div_y - fx);
        load_x[3 * e + m] += dx * qx * fx;
      }
    }
  out.grad_norm = std::sqrt(grad2);
  out.ratio = out.grad_norm / out.f_norm;
  out.residual = load.norm() > 0.0 ? defect.norm() / load.norm() : 0.0;
  out.physical_residual = load_x.norm() > 0.0 ? defect_x.norm() / load_x.norm() : 0.0;
  return out;
}

void symmetrize(DivSolution& s) {
  const int NJ = 2 * s.n2 + 1;
  for (std::size_t n = 0; n < s.values.size(); ++n) {
    const int I = static_cast<int>(n) / NJ, J = static_cast<int>(n) % NJ;
    if (J > NJ - 1 - J) continue;
    Vec2& a = s.values[n];
    Vec2& b = s.values[static_cast<std::size_t>(I) * NJ + (NJ - 1 - J)];
    const double u1 = 0.5 * (a(0) + b(0)), u2 = 0.5 * (a(1) - b(1));
    a = Vec2(u1, u2);
    b = Vec2(u1, -u2);
  }
}

HatCorrector corrector_hat_v(const DiscreteField& v, const DomainSpec& spec,
                             const TruncationLadder& ladder, int k,
                             const ReferenceMeshSize& mesh) {
  const auto& grid = v.space()->grid();
  if (ladder.R(k + 1) > grid.xs.back() + 1e-12 * (1.0 + grid.xs.back()))
    throw PreconditionError("field does not cover the ladder cell");
  const TruncationCutoff theta(ladder, spec.profile, k);
  HatCorrector out;
  const double lo = ladder.R(k), hi = ladder.R(k + 1);
  out.compatibility = integrate_cells(grid, lo, hi, [&](int, int, const Vec2& x) {
    return theta.eval(x).grad(0) * v.eval(x).value(0);
  });
  const double mag = integrate_cells(grid, lo, hi, [&](int, int, const Vec2& x) {
    return std::abs(theta.eval(x).grad(0) * v.eval(x).value(0));
  });
  if (std::abs(out.compatibility) > 1e-6 * std::max(1.0, mag))
    throw PreconditionError("field is not solenoidal: nonzero flux through the ladder cell");
  out.grad_v = std::sqrt(integrate_cells(grid, lo, hi, [&](int, int, const Vec2& x) {
    return v.eval(x).grad.squaredNorm();
  }));
  const BogovskiiTransform t(spec, ladder, k);
  // The discrete field is integrated exactly above; the reference mesh only
  // sees quadrature noise in the mean, which solve_div projects out.
  out.solution = solve_div(
      t, [&](const Vec2& x) { return -theta.eval(x).grad(0) * v.eval(x).value(0); }, mesh,
      std::numeric_limits<double>::infinity());
  symmetrize(out.solution);
  out.ratio = out.grad_v > 0.0 ? out.solution.grad_norm / out.grad_v : 0.0;
  return out;
}

}  // namespace outflux
