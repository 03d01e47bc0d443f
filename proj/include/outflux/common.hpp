// Shared vocabulary: points, field samples, error categories, seeding.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace outflux {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Velocity value together with its Jacobian, grad(i, j) = d v_i / d x_j.
struct FieldSample {
  Vec2 value = Vec2::Zero();
  Mat2 grad = Mat2::Zero();

  FieldSample& operator+=(const FieldSample& o) {
    value += o.value;
    grad += o.grad;
    return *this;
  }
  double divergence() const { return grad(0, 0) + grad(1, 1); }
};

/// Gradient and Hessian of a scalar potential.
struct ScalarJet {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

/// Velocity (-dPhi/dx2, dPhi/dx1) and its Jacobian from a stream potential.
inline FieldSample curl_of(const ScalarJet& phi) {
  FieldSample s;
  s.value = Vec2(-phi.grad(1), phi.grad(0));
  s.grad << -phi.hess(1, 0), -phi.hess(1, 1), phi.hess(0, 0), phi.hess(0, 1);
  return s;
}

using FieldFn = std::function<FieldSample(const Vec2&)>;

inline Vec2 mirror(const Vec2& x) { return Vec2(x(0), -x(1)); }

// Error categories map onto the CLI exit codes.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& pointer, const std::string& what)
      : std::runtime_error(pointer + ": " + what), pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A geometric assertion or an analytic hypothesis does not hold.
class HypothesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates an operation's precondition (e.g. nonzero residual flux).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// splitmix64 step; per-trial seeds are splitmix64(root ^ (trial * golden)).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t s = root ^ (stream * 0xD1B54A32D192ED03ULL);
  return splitmix64(s);
}

/// Small deterministic generator on top of splitmix64.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return splitmix64(state_); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::uint64_t state_;
};

/// Worker count from OUTFLUX_THREADS (default 1).
int thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Each index
/// is processed exactly once; results must be written to per-index slots.
template <typename Body>
void parallel_for(std::size_t n, Body&& body);

}  // namespace outflux

#include "outflux/detail/parallel.hpp"
