// Bicubic Hermite (Bogner-Fox-Schmit) stream-function space on a staircase
// half grid. Velocities v = (dpsi/dx2, -dpsi/dx1) are exactly solenoidal,
// symmetric (psi odd in x2) and vanish on every wall of the grid.
#pragma once

#include "outflux/geometry.hpp"
#include "outflux/quadrature.hpp"

#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace outflux {

struct GridOptions {
  double h = 0.125;
  bool stretch = false;  // outlet x1 spacing grows with the wall height
  int axis_layers = 0;   // dyadic refinement of the first row towards the axis
};

/// Half grid of Omega_k with the requested refinements.
StaircaseGrid make_grid(const DomainSpec& spec, const TruncationLadder& ladder, int k,
                        const GridOptions& options);

/// Splits the first row of cells into rows at h 2^{-1}, ..., h 2^{-layers}.
StaircaseGrid refine_axis(const StaircaseGrid& grid, int layers);

/// Stream function derivatives of one basis function at a point.
struct BasisJet {
  double n = 0.0, nx = 0.0, ny = 0.0, nxx = 0.0, nxy = 0.0, nyy = 0.0;

  Vec2 velocity() const { return Vec2(ny, -nx); }
  Mat2 gradient() const { return (Mat2() << nxy, nyy, -nxx, -nxy).finished(); }
};

/// The 16 shape functions of a cell of size hx x hy at local (s, t) in
/// [0, 1]^2. Order: corners (0,0), (1,0), (1,1), (0,1); per corner psi,
/// psi_x, psi_y, psi_xy.
std::array<BasisJet, 16> cell_basis(double hx, double hy, double s, double t);

class StreamSpace {
 public:
  explicit StreamSpace(StaircaseGrid grid);

  const StaircaseGrid& grid() const { return grid_; }
  /// Number of free coefficients.
  int size() const { return free_; }
  /// Free index of DOF `kind` (0 psi, 1 psi_x, 2 psi_y, 3 psi_xy) at grid
  /// node (i, j), or -1 when fixed to zero.
  int dof(int i, int j, int kind) const;
  std::array<int, 16> cell_dofs(int i, int j) const;
  const std::vector<std::pair<int, int>>& cells() const { return cells_; }

 private:
  StaircaseGrid grid_;
  std::vector<int> index_;  // (i * (ny + 1) + j) * 4 + kind
  std::vector<std::pair<int, int>> cells_;
  int free_ = 0;
};

/// Velocity field from stream-function coefficients. Zero outside the active
/// cells; values below the axis follow the mirror rule.
class DiscreteField {
 public:
  DiscreteField() = default;
  DiscreteField(std::shared_ptr<const StreamSpace> space, Eigen::VectorXd coefficients);

  FieldSample eval(const Vec2& x) const;
  FieldFn as_function() const;
  const Eigen::VectorXd& coefficients() const { return coef_; }
  const std::shared_ptr<const StreamSpace>& space() const { return space_; }
  /// Velocity and gradient at local point (s, t) of cell (i, j).
  FieldSample eval_local(int i, int j, double s, double t) const;

 private:
  std::shared_ptr<const StreamSpace> space_;
  Eigen::VectorXd coef_;
};

/// Coefficients of `field` re-expressed on a larger grid whose node lines
/// start with those of the field's grid; the field is extended by zero.
DiscreteField extend_by_zero(const DiscreteField& field,
                             const std::shared_ptr<const StreamSpace>& target);

/// Gauss rule used for all cell integrals (5 points per direction).
const GaussRule& cell_rule();

/// Integral over the full (mirrored) part of the grid with x1 in [lo, hi]
/// of a symmetric integrand evaluated on the upper half.
double integrate_cells(const StaircaseGrid& grid, double lo, double hi,
                       const std::function<double(int, int, const Vec2&)>& integrand);

}  // namespace outflux
