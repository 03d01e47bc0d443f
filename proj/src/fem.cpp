#include "outflux/fem.hpp"

#include <algorithm>
#include <cmath>

namespace outflux {

namespace {

// Cubic Hermite shape functions on [0, 1]: value/derivative/second derivative
// of H0 (left value), H1 (left slope), H2 (right value), H3 (right slope).
std::array<std::array<double, 3>, 4> hermite(double s) {
  const double s2 = s * s, s3 = s2 * s;
  return {{{1 - 3 * s2 + 2 * s3, -6 * s + 6 * s2, -6 + 12 * s},
           {s - 2 * s2 + s3, 1 - 4 * s + 3 * s2, -4 + 6 * s},
           {3 * s2 - 2 * s3, 6 * s - 6 * s2, 6 - 12 * s},
           {-s2 + s3, -2 * s + 3 * s2, -2 + 6 * s}}};
}

constexpr int kCornerX[4] = {0, 1, 1, 0};
constexpr int kCornerY[4] = {0, 0, 1, 1};

}  // namespace

StaircaseGrid refine_axis(const StaircaseGrid& grid, int layers) {
  if (layers <= 0) return grid;
  StaircaseGrid out = grid;
  const double first = grid.ys.at(1);
  out.ys = {0.0};
  for (int l = layers; l >= 1; --l) out.ys.push_back(std::ldexp(first, -l));
  out.ys.insert(out.ys.end(), grid.ys.begin() + 1, grid.ys.end());
  const int ny = out.ny(), old_ny = grid.ny();
  out.active.assign(static_cast<std::size_t>(out.nx()) * ny, 0);
  for (int i = 0; i < out.nx(); ++i)
    for (int j = 0; j < ny; ++j) {
      const int src = std::max(j - layers, 0);
      out.active[static_cast<std::size_t>(i) * ny + j] =
          grid.active[static_cast<std::size_t>(i) * old_ny + src];
    }
  return out;
}

StaircaseGrid make_grid(const DomainSpec& spec, const TruncationLadder& ladder, int k,
                        const GridOptions& options) {
  return refine_axis(build_half_grid(spec, ladder, k, options.h, options.stretch),
                     options.axis_layers);
}

std::array<BasisJet, 16> cell_basis(double hx, double hy, double s, double t) {
  const auto X = hermite(s), Y = hermite(t);
  std::array<BasisJet, 16> out;
  for (int c = 0; c < 4; ++c)
    for (int kind = 0; kind < 4; ++kind) {
      const int kx = kind & 1, ky = kind >> 1;
      const auto& fx = X[2 * kCornerX[c] + kx];
      const auto& fy = Y[2 * kCornerY[c] + ky];
      const double sx = kx ? hx : 1.0, sy = ky ? hy : 1.0;
      BasisJet& b = out[4 * c + kind];
      b.n = sx * sy * fx[0] * fy[0];
      b.nx = sx * sy * fx[1] * fy[0] / hx;
      b.ny = sx * sy * fx[0] * fy[1] / hy;
      b.nxx = sx * sy * fx[2] * fy[0] / (hx * hx);
      b.nxy = sx * sy * fx[1] * fy[1] / (hx * hy);
      b.nyy = sx * sy * fx[0] * fy[2] / (hy * hy);
    }
  return out;
}

StreamSpace::StreamSpace(StaircaseGrid grid) : grid_(std::move(grid)) {
  const int nx = grid_.nx(), ny = grid_.ny();
  // Cells below the axis are the mirror images of the first row.
  auto cell = [&](int i, int j) { return grid_.is_active(i, j >= 0 ? j : -j - 1); };
  index_.assign(static_cast<std::size_t>(nx + 1) * (ny + 1) * 4, -1);
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j) {
      const bool interior =
          cell(i - 1, j - 1) && cell(i, j - 1) && cell(i - 1, j) && cell(i, j);
      if (!interior) continue;
      // psi and psi_x vanish on the axis (psi is odd in x2).
      for (int kind = j == 0 ? 2 : 0; kind < 4; ++kind)
        index_[(static_cast<std::size_t>(i) * (ny + 1) + j) * 4 + kind] = free_++;
    }
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      if (grid_.is_active(i, j)) cells_.emplace_back(i, j);
  if (cells_.empty()) throw MeshResolutionError("mesh size too coarse: no interior cells");
}

int StreamSpace::dof(int i, int j, int kind) const {
  if (i < 0 || j < 0 || i > grid_.nx() || j > grid_.ny()) return -1;
  return index_[(static_cast<std::size_t>(i) * (grid_.ny() + 1) + j) * 4 + kind];
}

std::array<int, 16> StreamSpace::cell_dofs(int i, int j) const {
  std::array<int, 16> out;
  for (int c = 0; c < 4; ++c)
    for (int kind = 0; kind < 4; ++kind)
      out[4 * c + kind] = dof(i + kCornerX[c], j + kCornerY[c], kind);
  return out;
}

DiscreteField::DiscreteField(std::shared_ptr<const StreamSpace> space,
                             Eigen::VectorXd coefficients)
    : space_(std::move(space)), coef_(std::move(coefficients)) {
  if (coef_.size() != space_->size())
    throw PreconditionError("coefficient vector does not match the space");
}

FieldSample DiscreteField::eval_local(int i, int j, double s, double t) const {
  const auto& g = space_->grid();
  const double hx = g.xs[i + 1] - g.xs[i], hy = g.ys[j + 1] - g.ys[j];
  const auto basis = cell_basis(hx, hy, s, t);
  const auto dofs = space_->cell_dofs(i, j);
  FieldSample out;
  for (int a = 0; a < 16; ++a) {
    if (dofs[a] < 0) continue;
    const double c = coef_[dofs[a]];
    out.value += c * basis[a].velocity();
    out.grad += c * basis[a].gradient();
  }
  return out;
}

FieldSample DiscreteField::eval(const Vec2& x) const {
  if (!space_) return {};
  if (x(1) < 0.0) {
    FieldSample s = eval(mirror(x));
    s.value(1) = -s.value(1);
    s.grad(0, 1) = -s.grad(0, 1);
    s.grad(1, 0) = -s.grad(1, 0);
    return s;
  }
  const auto& g = space_->grid();
  const auto cell = g.locate(x);
  if (!cell) return {};
  const auto [i, j] = *cell;
  const double s = (x(0) - g.xs[i]) / (g.xs[i + 1] - g.xs[i]);
  const double t = (x(1) - g.ys[j]) / (g.ys[j + 1] - g.ys[j]);
  return eval_local(i, j, s, t);
}

FieldFn DiscreteField::as_function() const {
  auto self = std::make_shared<DiscreteField>(*this);
  return [self](const Vec2& x) { return self->eval(x); };
}

DiscreteField extend_by_zero(const DiscreteField& field,
                             const std::shared_ptr<const StreamSpace>& target) {
  const auto& src = field.space()->grid();
  const auto& dst = target->grid();
  auto prefix = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() > b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i] - b[i]) > 1e-12 * (1.0 + std::abs(a[i]))) return false;
    return true;
  };
  if (!prefix(src.xs, dst.xs) || !prefix(src.ys, dst.ys))
    throw PreconditionError("target grid does not extend the source grid");
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(target->size());
  for (int i = 0; i <= src.nx(); ++i)
    for (int j = 0; j <= src.ny(); ++j)
      for (int kind = 0; kind < 4; ++kind) {
        const int a = field.space()->dof(i, j, kind);
        if (a < 0) continue;
        const int b = target->dof(i, j, kind);
        if (b < 0) {
          if (field.coefficients()[a] != 0.0)
            throw PreconditionError("target grid fixes a free coefficient of the source");
          continue;
        }
        coef[b] = field.coefficients()[a];
      }
  return DiscreteField(target, std::move(coef));
}

const GaussRule& cell_rule() { return gauss_legendre(5); }

double integrate_cells(const StaircaseGrid& grid, double lo, double hi,
                       const std::function<double(int, int, const Vec2&)>& integrand) {
  const GaussRule& r = cell_rule();
  double total = 0.0;
  const double tol = 1e-12 * (1.0 + std::abs(hi));
  for (int i = 0; i < grid.nx(); ++i) {
    const double xa = grid.xs[i], xb = grid.xs[i + 1];
    if (xa < lo - tol || xb > hi + tol) continue;
    for (int j = 0; j < grid.ny(); ++j) {
      if (!grid.is_active(i, j)) continue;
      const double ya = grid.ys[j], yb = grid.ys[j + 1];
      double cell = 0.0;
      for (std::size_t p = 0; p < r.nodes.size(); ++p)
        for (std::size_t q = 0; q < r.nodes.size(); ++q) {
          const Vec2 x(xa + (xb - xa) * r.nodes[p], ya + (yb - ya) * r.nodes[q]);
          cell += r.weights[p] * r.weights[q] * integrand(i, j, x);
        }
      total += 2.0 * (xb - xa) * (yb - ya) * cell;
    }
  }
  return total;
}

}  // namespace outflux
