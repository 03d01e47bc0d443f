// Approximate problems on truncations Omega_l: Galerkin discretization of the
// perturbation v = u - A in the stream-function space, Picard iterations
// inside a homotopy in lambda, and the invading-domains continuation.
#pragma once

#include "outflux/extension.hpp"
#include "outflux/fem.hpp"

#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace outflux {

/// Body force with f1 even and f2 odd in x2.
struct ForceField {
  std::function<Vec2(const Vec2&)> f;

  bool is_zero() const { return !f; }
  Vec2 operator()(const Vec2& x) const { return f ? f(x) : Vec2::Zero(); }

  static ForceField zero() { return {}; }
  /// amplitude1 q^2 e1 + amplitude2 (x2 / radius) q^2 e2 with
  /// q = 1 - |x - (center, 0)|^2 / radius^2 inside the disk.
  static ForceField bump(double center, double radius, double amplitude1, double amplitude2);
};

struct SolveConfig {
  double nu = 1.0;
  double epsilon = 0.1;
  std::vector<double> lambdas{0.0, 0.25, 0.5, 0.75, 1.0};
  double min_lambda_step = 1.0 / 64.0;
  double picard_tol = 1e-10;  // relative coefficient increment
  int picard_max = 200;
  GridOptions grid;
  double stop_tol = 1e-4;  // relative level difference on Omega_1 ending invade
};

/// Terms of the balance nu |grad v|^2 = lambda (aa - nu visc + force + conv)
/// obtained by testing the discrete equations with the solution itself.
struct EnergyBalance {
  double lhs = 0.0;
  double aa = 0.0;     // int (A.grad) v . A
  double visc = 0.0;   // int grad A : grad v
  double force = 0.0;  // int f . v
  double conv = 0.0;   // int (v.grad) v . A
  double lambda = 0.0;
  double nu = 0.0;

  double rhs() const { return lambda * (aa - nu * visc + force + conv); }
  double residual() const;
};

struct PicardResult {
  Eigen::VectorXd coefficients;
  int iterations = 0;
  bool converged = false;
  double increment = 0.0;
};

/// Discrete system on one truncation. The nonlinear term uses the skew form
/// b(u; w, eta) = (int (u.grad) eta . w - int (u.grad) w . eta) / 2, which
/// agrees with int (u.grad) eta . w for solenoidal u with zero trace.
class LevelSystem {
 public:
  LevelSystem(std::shared_ptr<const StreamSpace> space, FieldFn A, ForceField force, double nu);

  const std::shared_ptr<const StreamSpace>& space() const { return space_; }
  int size() const { return space_->size(); }
  double nu() const { return nu_; }

  /// Next Picard iterate: solves nu K v - lambda (B(A + v_lag) + C) v =
  /// lambda (r_AA - nu r_A + r_f). Throws NumericError when singular.
  Eigen::VectorXd picard_step(double lambda, const Eigen::VectorXd& lag);
  PicardResult picard(double lambda, Eigen::VectorXd start, double tol, int max_iterations);

  EnergyBalance balance(double lambda, const Eigen::VectorXd& c) const;
  /// Coefficients of the Riesz representer of f in the Dirichlet product.
  Eigen::VectorXd force_representer();
  const Eigen::VectorXd& force_load() const { return r_f_; }

  /// Dirichlet seminorm matrix.
  Eigen::SparseMatrix<double> stiffness() const;

 private:
  Eigen::SparseMatrix<double> with_values(const Eigen::VectorXd& values) const;
  Eigen::VectorXd convection_values(const Eigen::VectorXd& lag) const;

  struct Point {
    double weight = 0.0;
    FieldSample A;
    Vec2 f = Vec2::Zero();
  };

  std::shared_ptr<const StreamSpace> space_;
  double nu_ = 1.0;
  std::vector<std::array<BasisJet, 16>> basis_;  // per distinct cell shape and point
  std::vector<int> cell_shape_;                   // index into basis_ / 25
  std::vector<Point> points_;                     // cells x 25
  Eigen::SparseMatrix<double> pattern_;
  std::vector<int> slots_;  // cells x 256 offsets into the value array, -1 when fixed
  Eigen::VectorXd K_, C_, BA_;
  Eigen::VectorXd r_AA_, r_A_, r_f_;
  Eigen::VectorXd scale_;  // diag(K)^{-1/2}
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  bool analyzed_ = false;
};

struct LambdaRecord {
  double lambda = 0.0;
  int iterations = 0;
  double energy_residual = 0.0;
  double dirichlet = 0.0;  // int |grad v|^2
};

struct HomotopyResult {
  DiscreteField v;
  std::vector<LambdaRecord> steps;
  int halvings = 0;
};

/// Runs the lambda ladder with warm starts and step halving on Picard
/// failure. Throws NumericError with nu, lambda and h when the step falls
/// below config.min_lambda_step.
HomotopyResult homotopy_solve(LevelSystem& system, const SolveConfig& config);

/// int_{Omega_k} |grad v|^2 for every ladder radius R_k covered by the grid.
std::vector<double> dirichlet_profile(const DiscreteField& v, const TruncationLadder& ladder);
/// Discrete L^2 norm of v over the cells with x1 <= x1_hi.
double l2_norm(const DiscreteField& v, double x1_hi);

/// Dual norm ||f||_{H*(Omega_k)} on the discrete solenoidal space.
double dual_norm(const ForceField& f, const DomainSpec& spec, const TruncationLadder& ladder,
                 int k, const GridOptions& grid);

struct WeightedNorm {
  double value = 0.0;  // sup_k (1 + int_{R0}^{R_k} g^-3)^{-1/2} ||f||_{H*(Omega_k)}
  int argmax = 1;
  std::vector<double> per_level;  // index k - 1
};
WeightedNorm weighted_dual_norm(const ForceField& f, const DomainSpec& spec,
                                const TruncationLadder& ladder, int k_max,
                                const GridOptions& grid);

struct LevelReport {
  int level = 0;
  HomotopyResult solve;
  std::vector<double> y;            // y_k, k = 0..level
  std::optional<double> difference;  // ||v^(l) - v^(l-1)||_{L^2(Omega_1)}
  std::optional<double> relative_difference;
};

struct ContinuationState {
  std::vector<LevelReport> levels;
  bool stopped_early = false;
};

/// Solves levels l = first..last sequentially; each level warm-starts at
/// lambda = 1 from the zero-extended previous solution and falls back to the
/// full ladder when Picard fails.
ContinuationState invade(const DomainSpec& spec, const TruncationLadder& ladder, const FieldFn& A,
                         const ForceField& force, const SolveConfig& config, int first, int last);

}  // namespace outflux
