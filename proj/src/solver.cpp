#include "outflux/solver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace outflux {

namespace {

constexpr int kPoints = 25;  // 5 x 5 Gauss points per cell
constexpr int kLocal = 256;  // 16 x 16 local entries

double mesh_size(const StaircaseGrid& g) {
  double h = 0.0;
  for (int j = 0; j < g.ny(); ++j) h = std::max(h, g.ys[j + 1] - g.ys[j]);
  return h;
}

std::string diagnostics(double nu, double lambda, double h) {
  std::ostringstream os;
  os << "nu=" << nu << ", lambda=" << lambda << ", h=" << h;
  return os.str();
}

}  // namespace

ForceField ForceField::bump(double center, double radius, double amplitude1, double amplitude2) {
  ForceField out;
  out.f = [=](const Vec2& x) -> Vec2 {
    const double q = 1.0 - ((x(0) - center) * (x(0) - center) + x(1) * x(1)) / (radius * radius);
    if (q <= 0.0) return Vec2::Zero();
    return Vec2(amplitude1 * q * q, amplitude2 * x(1) / radius * q * q);
  };
  return out;
}

double EnergyBalance::residual() const {
  const double scale =
      std::max(std::abs(lhs), lambda * (std::abs(aa) + nu * std::abs(visc) + std::abs(force) +
                                        std::abs(conv)));
  if (scale == 0.0) return 0.0;
  return std::abs(lhs - rhs()) / scale;
}

LevelSystem::LevelSystem(std::shared_ptr<const StreamSpace> space, FieldFn A, ForceField force,
                         double nu)
    : space_(std::move(space)), nu_(nu) {
  if (!(nu > 0.0)) throw PreconditionError("viscosity must be positive");
  const auto& g = space_->grid();
  const auto& cells = space_->cells();
  const GaussRule& r = cell_rule();
  const int n = static_cast<int>(cells.size());

  // Shape functions per distinct cell size.
  std::vector<std::pair<double, double>> shapes;
  cell_shape_.resize(cells.size());
  for (int c = 0; c < n; ++c) {
    const auto [i, j] = cells[c];
    const double hx = g.xs[i + 1] - g.xs[i], hy = g.ys[j + 1] - g.ys[j];
    auto same = [&](const std::pair<double, double>& s) {
      return std::abs(s.first - hx) <= 1e-13 * hx && std::abs(s.second - hy) <= 1e-13 * hy;
    };
    auto it = std::find_if(shapes.begin(), shapes.end(), same);
    if (it == shapes.end()) {
      shapes.emplace_back(hx, hy);
      for (int p = 0; p < kPoints; ++p)
        basis_.push_back(cell_basis(hx, hy, r.nodes[p / 5], r.nodes[p % 5]));
      it = shapes.end() - 1;
    }
    cell_shape_[c] = static_cast<int>(it - shapes.begin());
  }

  points_.resize(cells.size() * kPoints);
  parallel_for(cells.size(), [&](std::size_t c) {
    const auto [i, j] = cells[c];
    const double hx = g.xs[i + 1] - g.xs[i], hy = g.ys[j + 1] - g.ys[j];
    for (int p = 0; p < kPoints; ++p) {
      const Vec2 x(g.xs[i] + hx * r.nodes[p / 5], g.ys[j] + hy * r.nodes[p % 5]);
      Point& pt = points_[c * kPoints + p];
      pt.weight = 2.0 * hx * hy * r.weights[p / 5] * r.weights[p % 5];
      if (A) pt.A = A(x);
      pt.f = force(x);
    }
  });

  // Sparsity pattern and the value slot of every local entry.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(cells.size() * kLocal);
  for (const auto& [i, j] : cells) {
    const auto d = space_->cell_dofs(i, j);
    for (int a = 0; a < 16; ++a)
      for (int b = 0; b < 16; ++b)
        if (d[a] >= 0 && d[b] >= 0) trip.emplace_back(d[a], d[b], 0.0);
  }
  const int m = space_->size();
  pattern_.resize(m, m);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();
  slots_.assign(cells.size() * kLocal, -1);
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  for (int c = 0; c < n; ++c) {
    const auto d = space_->cell_dofs(cells[c].first, cells[c].second);
    for (int a = 0; a < 16; ++a)
      for (int b = 0; b < 16; ++b) {
        if (d[a] < 0 || d[b] < 0) continue;
        const int* pos = std::lower_bound(inner + outer[d[b]], inner + outer[d[b] + 1], d[a]);
        slots_[c * kLocal + a * 16 + b] = static_cast<int>(pos - inner);
      }
  }

  // Constant matrices and load vectors.
  const int nnz = static_cast<int>(pattern_.nonZeros());
  std::vector<double> local(cells.size() * 3 * kLocal, 0.0);
  std::vector<double> load(cells.size() * 3 * 16, 0.0);
  parallel_for(cells.size(), [&](std::size_t c) {
    double* k = &local[c * 3 * kLocal];
    double* cm = k + kLocal;
    double* ba = cm + kLocal;
    double* rl = &load[c * 48];
    for (int p = 0; p < kPoints; ++p) {
      const auto& jet = basis_[cell_shape_[c] * kPoints + p];
      const Point& pt = points_[c * kPoints + p];
      std::array<Mat2, 16> G;
      std::array<Vec2, 16> phi, GA;
      for (int a = 0; a < 16; ++a) {
        G[a] = jet[a].gradient();
        phi[a] = jet[a].velocity();
        GA[a] = G[a] * pt.A.value;
      }
      for (int a = 0; a < 16; ++a) {
        rl[a] += pt.weight * GA[a].dot(pt.A.value);
        rl[16 + a] += pt.weight * (pt.A.grad.array() * G[a].array()).sum();
        rl[32 + a] += pt.weight * pt.f.dot(phi[a]);
        for (int b = 0; b < 16; ++b) {
          k[a * 16 + b] += pt.weight * (G[a].array() * G[b].array()).sum();
          cm[a * 16 + b] += pt.weight * (G[a] * phi[b]).dot(pt.A.value);
          ba[a * 16 + b] += pt.weight * 0.5 * (GA[a].dot(phi[b]) - GA[b].dot(phi[a]));
        }
      }
    }
  });
  K_ = C_ = BA_ = Eigen::VectorXd::Zero(nnz);
  r_AA_ = r_A_ = r_f_ = Eigen::VectorXd::Zero(m);
  for (int c = 0; c < n; ++c) {
    const auto d = space_->cell_dofs(cells[c].first, cells[c].second);
    const double* k = &local[c * 3 * kLocal];
    for (int e = 0; e < kLocal; ++e) {
      const int s = slots_[c * kLocal + e];
      if (s < 0) continue;
      K_[s] += k[e];
      C_[s] += k[kLocal + e];
      BA_[s] += k[2 * kLocal + e];
    }
    const double* rl = &load[c * 48];
    for (int a = 0; a < 16; ++a) {
      if (d[a] < 0) continue;
      r_AA_[d[a]] += rl[a];
      r_A_[d[a]] += rl[16 + a];
      r_f_[d[a]] += rl[32 + a];
    }
  }
  scale_ = with_values(K_).diagonal().cwiseSqrt().cwiseInverse();
}

Eigen::SparseMatrix<double> LevelSystem::with_values(const Eigen::VectorXd& values) const {
  Eigen::SparseMatrix<double> M = pattern_;
  std::copy(values.data(), values.data() + values.size(), M.valuePtr());
  return M;
}

Eigen::SparseMatrix<double> LevelSystem::stiffness() const { return with_values(K_); }

Eigen::VectorXd LevelSystem::convection_values(const Eigen::VectorXd& lag) const {
  const auto& cells = space_->cells();
  std::vector<double> local(cells.size() * kLocal, 0.0);
  parallel_for(cells.size(), [&](std::size_t c) {
    const auto d = space_->cell_dofs(cells[c].first, cells[c].second);
    double coef[16];
    bool any = false;
    for (int a = 0; a < 16; ++a) {
      coef[a] = d[a] >= 0 ? lag[d[a]] : 0.0;
      any = any || coef[a] != 0.0;
    }
    if (!any) return;
    double* out = &local[c * kLocal];
    for (int p = 0; p < kPoints; ++p) {
      const auto& jet = basis_[cell_shape_[c] * kPoints + p];
      const double w = 0.5 * points_[c * kPoints + p].weight;
      Vec2 u = Vec2::Zero();
      for (int a = 0; a < 16; ++a) u += coef[a] * jet[a].velocity();
      std::array<Vec2, 16> phi, Gu;
      for (int a = 0; a < 16; ++a) {
        phi[a] = jet[a].velocity();
        Gu[a] = jet[a].gradient() * u;
      }
      for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) out[a * 16 + b] += w * (Gu[a].dot(phi[b]) - Gu[b].dot(phi[a]));
    }
  });
  Eigen::VectorXd values = Eigen::VectorXd::Zero(K_.size());
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int e = 0; e < kLocal; ++e) {
      const int s = slots_[c * kLocal + e];
      if (s >= 0) values[s] += local[c * kLocal + e];
    }
  return values;
}

Eigen::VectorXd LevelSystem::picard_step(double lambda, const Eigen::VectorXd& lag) {
  Eigen::VectorXd values = nu_ * K_;
  if (lambda != 0.0) values -= lambda * (BA_ + C_ + convection_values(lag));
  // Symmetric diagonal equilibration: the Hermite coefficients mix values
  // and derivatives of very different scales.
  const Eigen::SparseMatrix<double> M = scale_.asDiagonal() * with_values(values) * scale_.asDiagonal();
  if (!analyzed_) {
    lu_.analyzePattern(M);
    analyzed_ = true;
  }
  lu_.factorize(M);
  if (lu_.info() != Eigen::Success)
    throw NumericError("singular discrete system (" +
                       diagnostics(nu_, lambda, mesh_size(space_->grid())) + ")");
  const Eigen::VectorXd rhs = lambda * (r_AA_ - nu_ * r_A_ + r_f_);
  Eigen::VectorXd out = scale_.cwiseProduct(lu_.solve(scale_.cwiseProduct(rhs)));
  if (!out.allFinite())
    throw NumericError("singular discrete system (" +
                       diagnostics(nu_, lambda, mesh_size(space_->grid())) + ")");
  return out;
}

PicardResult LevelSystem::picard(double lambda, Eigen::VectorXd start, double tol,
                                 int max_iterations) {
  PicardResult res;
  res.coefficients = std::move(start);
  double smallest = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd next = picard_step(lambda, res.coefficients);
    res.increment = (next - res.coefficients).norm();
    res.coefficients = std::move(next);
    res.iterations = it;
    if (!std::isfinite(res.increment)) return res;
    if (res.increment <= tol * res.coefficients.norm()) {
      res.converged = true;
      return res;
    }
    smallest = std::min(smallest, res.increment);
    if (it > 5 && res.increment > 1e4 * smallest) return res;  // diverging
  }
  return res;
}

EnergyBalance LevelSystem::balance(double lambda, const Eigen::VectorXd& c) const {
  EnergyBalance e;
  e.lambda = lambda;
  e.nu = nu_;
  e.lhs = nu_ * c.dot(with_values(K_) * c);
  e.aa = r_AA_.dot(c);
  e.visc = r_A_.dot(c);
  e.force = r_f_.dot(c);
  e.conv = c.dot(with_values(C_) * c);
  return e;
}

Eigen::VectorXd LevelSystem::force_representer() {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(with_values(K_));
  if (ldlt.info() != Eigen::Success)
    throw NumericError("singular Dirichlet matrix (" +
                       diagnostics(nu_, 0.0, mesh_size(space_->grid())) + ")");
  return ldlt.solve(r_f_);
}

HomotopyResult homotopy_solve(LevelSystem& system, const SolveConfig& config) {
  if (config.lambdas.empty()) throw PreconditionError("empty homotopy ladder");
  HomotopyResult out;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(system.size());
  auto record = [&](double lambda, const PicardResult& r) {
    LambdaRecord rec;
    rec.lambda = lambda;
    rec.iterations = r.iterations;
    const EnergyBalance e = system.balance(lambda, r.coefficients);
    rec.energy_residual = e.residual();
    rec.dirichlet = e.lhs / system.nu();
    out.steps.push_back(rec);
  };
  auto fail = [&](double lambda) {
    throw NumericError("Picard iteration did not converge (" +
                       diagnostics(system.nu(), lambda, mesh_size(system.space()->grid())) + ")");
  };
  double current = config.lambdas.front();
  {
    PicardResult r = system.picard(current, c, config.picard_tol, config.picard_max);
    if (!r.converged) fail(current);
    c = r.coefficients;
    record(current, r);
  }
  for (std::size_t t = 1; t < config.lambdas.size(); ++t) {
    const double target = config.lambdas[t];
    double step = target - current;
    while (current < target) {
      const double lambda = std::min(current + step, target);
      PicardResult r = system.picard(lambda, c, config.picard_tol, config.picard_max);
      if (r.converged) {
        c = r.coefficients;
        current = lambda;
        record(lambda, r);
        continue;
      }
      step *= 0.5;
      ++out.halvings;
      if (step < config.min_lambda_step) fail(lambda);
    }
  }
  out.v = DiscreteField(system.space(), c);
  return out;
}

namespace {

// Per-cell integrals of |grad v|^2 and |v|^2 over the full (mirrored) cell.
std::vector<std::pair<double, double>> cell_norms(const DiscreteField& v) {
  const auto& space = *v.space();
  const auto& g = space.grid();
  const auto& cells = space.cells();
  const GaussRule& r = cell_rule();
  std::vector<std::pair<double, double>> out(cells.size());
  parallel_for(cells.size(), [&](std::size_t c) {
    const auto [i, j] = cells[c];
    const double area = (g.xs[i + 1] - g.xs[i]) * (g.ys[j + 1] - g.ys[j]);
    double d = 0.0, l = 0.0;
    for (int p = 0; p < kPoints; ++p) {
      const FieldSample s = v.eval_local(i, j, r.nodes[p / 5], r.nodes[p % 5]);
      const double w = 2.0 * area * r.weights[p / 5] * r.weights[p % 5];
      d += w * s.grad.squaredNorm();
      l += w * s.value.squaredNorm();
    }
    out[c] = {d, l};
  });
  return out;
}

}  // namespace

std::vector<double> dirichlet_profile(const DiscreteField& v, const TruncationLadder& ladder) {
  const auto& g = v.space()->grid();
  const auto norms = cell_norms(v);
  const auto& cells = v.space()->cells();
  std::vector<double> y;
  for (int k = 0; k <= ladder.K() && ladder.R(k) <= g.xs.back() + 1e-12 * (1 + g.xs.back());
       ++k) {
    const double R = ladder.R(k) + 1e-12 * (1 + ladder.R(k));
    double s = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (g.xs[cells[c].first + 1] <= R) s += norms[c].first;
    y.push_back(s);
  }
  return y;
}

double l2_norm(const DiscreteField& v, double x1_hi) {
  const auto& g = v.space()->grid();
  const auto norms = cell_norms(v);
  const auto& cells = v.space()->cells();
  const double R = x1_hi + 1e-12 * (1 + std::abs(x1_hi));
  double s = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c)
    if (g.xs[cells[c].first + 1] <= R) s += norms[c].second;
  return std::sqrt(s);
}

double dual_norm(const ForceField& f, const DomainSpec& spec, const TruncationLadder& ladder,
                 int k, const GridOptions& grid) {
  if (f.is_zero()) return 0.0;
  auto space = std::make_shared<const StreamSpace>(make_grid(spec, ladder, k, grid));
  LevelSystem sys(space, FieldFn{}, f, 1.0);
  const Eigen::VectorXd c = sys.force_representer();
  return std::sqrt(std::max(c.dot(sys.force_load()), 0.0));
}

WeightedNorm weighted_dual_norm(const ForceField& f, const DomainSpec& spec,
                                const TruncationLadder& ladder, int k_max,
                                const GridOptions& grid) {
  WeightedNorm out;
  for (int k = 1; k <= k_max; ++k) {
    const double J = integral_g_minus3(spec.profile, spec.R0, ladder.R(k)).value;
    const double val = dual_norm(f, spec, ladder, k, grid) / std::sqrt(1.0 + J);
    out.per_level.push_back(val);
    if (val > out.value) {
      out.value = val;
      out.argmax = k;
    }
  }
  return out;
}

ContinuationState invade(const DomainSpec& spec, const TruncationLadder& ladder, const FieldFn& A,
                         const ForceField& force, const SolveConfig& config, int first,
                         int last) {
  if (first < 1 || last < first || last > ladder.K())
    throw PreconditionError("invade needs 1 <= first <= last <= K");
  ContinuationState state;
  std::optional<DiscreteField> prev;
  for (int l = first; l <= last; ++l) {
    auto space = std::make_shared<const StreamSpace>(make_grid(spec, ladder, l, config.grid));
    LevelSystem sys(space, A, force, config.nu);
    LevelReport rep;
    rep.level = l;
    bool done = false;
    std::optional<DiscreteField> start;
    if (prev) start = extend_by_zero(*prev, space);
    if (start) {
      const double lambda = config.lambdas.back();
      PicardResult r = sys.picard(lambda, start->coefficients(), config.picard_tol,
                                  config.picard_max);
      if (r.converged) {
        const EnergyBalance e = sys.balance(lambda, r.coefficients);
        rep.solve.steps.push_back({lambda, r.iterations, e.residual(), e.lhs / sys.nu()});
        rep.solve.v = DiscreteField(space, r.coefficients);
        done = true;
      }
    }
    if (!done) rep.solve = homotopy_solve(sys, config);
    rep.y = dirichlet_profile(rep.solve.v, ladder);
    if (start) {
      const DiscreteField diff(space, rep.solve.v.coefficients() - start->coefficients());
      const double R1 = ladder.R(1);
      rep.difference = l2_norm(diff, R1);
      const double ref = l2_norm(rep.solve.v, R1);
      rep.relative_difference = ref > 0.0 ? *rep.difference / ref : 0.0;
    }
    prev = rep.solve.v;
    state.levels.push_back(std::move(rep));
    const auto& last_rep = state.levels.back();
    if (last_rep.relative_difference && *last_rep.relative_difference < config.stop_tol &&
        l < last) {
      state.stopped_early = true;
      break;
    }
  }
  return state;
}

}  // namespace outflux
