#pragma once

// Unit-speed flows of parameterized vector fields.
//
// A field f(w; theta) is one of
//   CONSTANT  f = theta
//   AFFINE    f = A w + b
//   NET       an MLP with LeakyReLU hidden activations and a linear output
// and is always integrated in normalized form dw/dt = f / max(|f|, eps_norm),
// so a trajectory of duration T has arc length T.
//
// Flat parameter layout: CONSTANT is theta; AFFINE is A (row-major) then b;
// NET is, per layer in forward order, the weight matrix (row-major) then the
// bias. A depth-1 NET and an AFFINE field therefore share a layout.

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "odeflow/numerics.hpp"

namespace odeflow {

inline constexpr double kNormEpsilon = 1e-8;
inline constexpr double kLeakySlope = 0.2;

inline double leaky_relu(double x, double slope = kLeakySlope) { return x >= 0.0 ? x : slope * x; }

struct NetSpec {
  Eigen::Index dim = 0;
  int depth = 1;
  Eigen::Index width = 0;
  double slope = kLeakySlope;

  // Throws InvalidInput unless depth is 1..3 and dim, width >= 1.
  void validate() const;
  Eigen::Index param_count() const;
  // (rows, cols) of each layer's weight matrix, in forward order.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> layer_shapes() const;
};

/// MLP forward pass.
Vector net_forward(const NetSpec& spec, const Eigen::Ref<const Vector>& params, const Eigen::Ref<const Vector>& x);

struct NetVjp {
  Vector grad_x;
  Vector grad_params;
};

/// Vector-Jacobian product of net_forward at x.
NetVjp net_vjp(const NetSpec& spec, const Eigen::Ref<const Vector>& params, const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& cotangent);

enum class FieldKind { Constant, Affine, Net };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& name);

class VectorField {
 public:
  static VectorField constant(Vector theta);
  static VectorField affine(const Matrix& a, const Vector& b);
  static VectorField net(NetSpec spec, Vector params);
  // Weights ~ N(0, 1/fan_in), biases zero.
  static VectorField net_random(NetSpec spec, Rng& rng);
  // Generic constructor used by checkpoint loading.
  static VectorField from_params(FieldKind kind, NetSpec spec, Vector params);

  FieldKind kind() const noexcept { return kind_; }
  Eigen::Index dim() const noexcept { return spec_.dim; }
  // For CONSTANT, depth 0 and width 0; for AFFINE, depth 1 and width dim.
  const NetSpec& spec() const noexcept { return spec_; }
  const Vector& params() const noexcept { return params_; }
  Eigen::Index param_count() const noexcept { return params_.size(); }
  void set_params(const Eigen::Ref<const Vector>& p);

  /// Raw (unnormalized) right-hand side f(w; theta).
  Vector raw(const Eigen::Ref<const Vector>& w) const;

  /// Accumulates cotangent^T (df/dw) into grad_w and cotangent^T (df/dtheta)
  /// into grad_params.
  void raw_vjp(const Eigen::Ref<const Vector>& w, const Eigen::Ref<const Vector>& cotangent, Vector& grad_w,
               Vector& grad_params) const;

 private:
  VectorField(FieldKind kind, NetSpec spec, Vector params);

  FieldKind kind_;
  NetSpec spec_;
  Vector params_;
};

/// Number of velocity evaluations that hit the |f| < eps_norm guard since
/// process start (or the last reset).
std::uint64_t stationary_field_warnings();
void reset_stationary_field_warnings();

/// Normalized velocity f / max(|f|, eps_norm).
Vector velocity(const VectorField& field, const Eigen::Ref<const Vector>& w);

/// Trajectory samples at uniform times 0, h, ..., T. Column k of `points` is
/// the state at times(k).
struct Trajectory {
  Vector times;
  Matrix points;

  Eigen::Index size() const noexcept { return times.size(); }
  Vector endpoint() const { return points.col(points.cols() - 1); }
  // Piecewise-linear interpolation of the state at time t in [0, T].
  Vector at(double t) const;
  double polyline_length() const;
};

/// Classical RK4 with h = T / n_steps on the normalized field.
Trajectory integrate(const VectorField& field, const Eigen::Ref<const Vector>& w0, double duration, int n_steps);

/// Endpoint only; avoids storing the trajectory.
Vector flow_endpoint(const VectorField& field, const Eigen::Ref<const Vector>& w0, double duration, int n_steps);

struct FlowGradients {
  Vector params;
  Vector w0;
};

/// Reverse-mode pass through an RK4 integration. The forward pass keeps every
/// stage input; backward() returns the exact gradient of the discrete map.
class Rk4Tape {
 public:
  Rk4Tape(const VectorField& field, const Eigen::Ref<const Vector>& w0, double duration, int n_steps);

  const Vector& endpoint() const noexcept { return endpoint_; }
  // Gradient of <cotangent, w(T)> with respect to theta and w0.
  FlowGradients backward(const Eigen::Ref<const Vector>& cotangent) const;
  // Same, but adds the parameter gradient into `grad_params` and returns grad_w0.
  Vector backward_accumulate(const Eigen::Ref<const Vector>& cotangent, Vector& grad_params) const;

 private:
  const VectorField* field_;
  double step_;
  int n_steps_;
  // 4 stage inputs per step, column 4*k + s.
  Matrix stages_;
  Vector endpoint_;
};

FlowGradients adjoint_grad(const VectorField& field, const Eigen::Ref<const Vector>& w0, double duration, int n_steps,
                           const Eigen::Ref<const Vector>& endpoint_cotangent);

// Checkpoint text format:
//   odeflow-checkpoint v1
//   kind = constant|affine|net
//   dim = <d>
//   depth = <L>
//   width = <h>
//   <one parameter per line, %.17g>
void write_checkpoint(std::ostream& os, const VectorField& field);
VectorField read_checkpoint(std::istream& is);

}  // namespace odeflow
