#pragma once

// Central-difference oracle for flow gradients. A LeakyReLU kink crossed
// inside the +-h stencil makes the difference quotient meaningless, so the
// oracle reports crossings instead of a comparison in that case.

#include <algorithm>
#include <cmath>
#include <vector>

#include "odeflow/fieldflow.hpp"

namespace odeflow::testing {

// Signs of every hidden pre-activation at x, appended to `out`.
inline void hidden_signs(const VectorField& f, const Vector& x, std::vector<char>& out) {
  if (f.kind() != FieldKind::Net || f.spec().depth < 2) return;
  const auto shapes = f.spec().layer_shapes();
  const Vector& p = f.params();
  Eigen::Index offset = 0;
  Vector a = x;
  for (std::size_t l = 0; l + 1 < shapes.size(); ++l) {
    const auto [rows, cols] = shapes[l];
    const Matrix w = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        p.data() + offset, rows, cols);
    offset += rows * cols;
    const Vector z = w * a + p.segment(offset, rows);
    offset += rows;
    for (Eigen::Index i = 0; i < z.size(); ++i) out.push_back(z(i) >= 0.0 ? 1 : 0);
    a = z.unaryExpr([&](double v) { return leaky_relu(v, f.spec().slope); });
  }
}

// Activation pattern over all RK4 stage inputs of the integration.
inline std::vector<char> activation_pattern(const VectorField& f, const Vector& w0, double duration, int n_steps) {
  std::vector<char> out;
  const double h = duration / n_steps;
  Vector w = w0;
  for (int s = 0; s < n_steps; ++s) {
    hidden_signs(f, w, out);
    const Vector k1 = velocity(f, w);
    const Vector x2 = w + 0.5 * h * k1;
    hidden_signs(f, x2, out);
    const Vector k2 = velocity(f, x2);
    const Vector x3 = w + 0.5 * h * k2;
    hidden_signs(f, x3, out);
    const Vector k3 = velocity(f, x3);
    const Vector x4 = w + h * k3;
    hidden_signs(f, x4, out);
    const Vector k4 = velocity(f, x4);
    w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return out;
}

struct GradCheckResult {
  double worst_relative = 0.0;  // max_k |g_k - fd_k| / max(|fd_k|, floor)
  bool kink_crossed = false;
  Vector fd;
};

// Relative error floor: 1e-3 of the largest difference quotient, so entries
// at round-off level do not dominate.
inline GradCheckResult check_flow_gradient(const VectorField& f, const Vector& w0, double duration, int n_steps,
                                           const Vector& cotangent, double step) {
  GradCheckResult r;
  const FlowGradients g = adjoint_grad(f, w0, duration, n_steps, cotangent);
  const std::vector<char> base = activation_pattern(f, w0, duration, n_steps);
  r.fd.resize(f.param_count());
  for (Eigen::Index k = 0; k < f.param_count(); ++k) {
    Vector pp = f.params(), pm = f.params();
    pp(k) += step;
    pm(k) -= step;
    VectorField fp = f, fm = f;
    fp.set_params(pp);
    fm.set_params(pm);
    if (activation_pattern(fp, w0, duration, n_steps) != base || activation_pattern(fm, w0, duration, n_steps) != base) {
      r.kink_crossed = true;
      return r;
    }
    r.fd(k) = (cotangent.dot(flow_endpoint(fp, w0, duration, n_steps)) -
               cotangent.dot(flow_endpoint(fm, w0, duration, n_steps))) /
              (2.0 * step);
  }
  const double floor = std::max(1e-3 * r.fd.cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index k = 0; k < f.param_count(); ++k) {
    r.worst_relative = std::max(r.worst_relative, std::abs(g.params(k) - r.fd(k)) / std::max(std::abs(r.fd(k)), floor));
  }
  return r;
}

}  // namespace odeflow::testing
