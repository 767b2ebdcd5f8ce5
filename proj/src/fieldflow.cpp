#include "odeflow/fieldflow.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace odeflow {

namespace {

std::atomic<std::uint64_t> g_stationary_warnings{0};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajorMatrix>;
using Weights = Eigen::Map<RowMajorMatrix>;

}  // namespace

void NetSpec::validate() const {
  if (depth < 1 || depth > 3) throw InvalidInput("NetSpec: depth must be 1, 2 or 3");
  if (dim < 1) throw InvalidInput("NetSpec: dimension must be positive");
  if (depth > 1 && width < 1) throw InvalidInput("NetSpec: width must be positive");
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> NetSpec::layer_shapes() const {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
  if (depth == 1) {
    shapes.emplace_back(dim, dim);
    return shapes;
  }
  shapes.emplace_back(width, dim);
  for (int l = 1; l + 1 < depth; ++l) shapes.emplace_back(width, width);
  shapes.emplace_back(dim, width);
  return shapes;
}

Eigen::Index NetSpec::param_count() const {
  Eigen::Index n = 0;
  for (auto [rows, cols] : layer_shapes()) n += rows * cols + rows;
  return n;
}

Vector net_forward(const NetSpec& spec, const Eigen::Ref<const Vector>& params, const Eigen::Ref<const Vector>& x) {
  if (x.size() != spec.dim || params.size() != spec.param_count()) throw InvalidInput("net_forward: shape mismatch");
  Vector h = x;
  Eigen::Index offset = 0;
  const auto shapes = spec.layer_shapes();
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto [rows, cols] = shapes[l];
    ConstWeights weight(params.data() + offset, rows, cols);
    offset += rows * cols;
    Vector z = weight * h + params.segment(offset, rows);
    offset += rows;
    if (l + 1 < shapes.size()) z = z.unaryExpr([&](double v) { return leaky_relu(v, spec.slope); });
    h = std::move(z);
  }
  return h;
}

namespace {

// Shared reverse pass; adds into grad_params (sized param_count) and returns grad_x.
Vector net_vjp_accumulate(const NetSpec& spec, const double* params, const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& cotangent, double* grad_params) {
  const auto shapes = spec.layer_shapes();
  const std::size_t n_layers = shapes.size();
  std::vector<Vector> inputs(n_layers);
  std::vector<Vector> pre(n_layers);
  std::vector<Eigen::Index> offsets(n_layers);

  Vector h = x;
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto [rows, cols] = shapes[l];
    offsets[l] = offset;
    ConstWeights weight(params + offset, rows, cols);
    inputs[l] = h;
    pre[l] = weight * h + Eigen::Map<const Vector>(params + offset + rows * cols, rows);
    offset += rows * cols + rows;
    h = (l + 1 < n_layers) ? Vector(pre[l].unaryExpr([&](double v) { return leaky_relu(v, spec.slope); })) : pre[l];
  }

  Vector grad = cotangent;
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto [rows, cols] = shapes[li];
    if (li + 1 < n_layers) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (pre[li](r) < 0.0) grad(r) *= spec.slope;
      }
    }
    Weights gw(grad_params + offsets[li], rows, cols);
    gw.noalias() += grad * inputs[li].transpose();
    Eigen::Map<Vector>(grad_params + offsets[li] + rows * cols, rows) += grad;
    ConstWeights weight(params + offsets[li], rows, cols);
    grad = weight.transpose() * grad;
  }
  return grad;
}

}  // namespace

NetVjp net_vjp(const NetSpec& spec, const Eigen::Ref<const Vector>& params, const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& cotangent) {
  if (x.size() != spec.dim || cotangent.size() != spec.dim || params.size() != spec.param_count()) {
    throw InvalidInput("net_vjp: shape mismatch");
  }
  NetVjp out;
  out.grad_params = Vector::Zero(params.size());
  out.grad_x = net_vjp_accumulate(spec, params.data(), x, cotangent, out.grad_params.data());
  return out;
}

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Constant:
      return "constant";
    case FieldKind::Affine:
      return "affine";
    case FieldKind::Net:
      return "net";
  }
  return "unknown";
}

FieldKind field_kind_from_string(const std::string& name) {
  if (name == "constant") return FieldKind::Constant;
  if (name == "affine") return FieldKind::Affine;
  if (name == "net") return FieldKind::Net;
  throw InvalidInput("unknown field kind '" + name + "'");
}

VectorField::VectorField(FieldKind kind, NetSpec spec, Vector params)
    : kind_(kind), spec_(spec), params_(std::move(params)) {
  if (!params_.allFinite()) throw InvalidInput("VectorField: non-finite parameter");
}

VectorField VectorField::constant(Vector theta) {
  if (theta.size() < 1) throw InvalidInput("VectorField: empty direction");
  NetSpec spec{theta.size(), 0, 0, kLeakySlope};
  return VectorField(FieldKind::Constant, spec, std::move(theta));
}

VectorField VectorField::affine(const Matrix& a, const Vector& b) {
  if (a.rows() != a.cols() || a.rows() != b.size() || b.size() < 1) throw InvalidInput("VectorField: affine shape");
  const Eigen::Index d = b.size();
  Vector params(d * d + d);
  Weights(params.data(), d, d) = a;
  params.tail(d) = b;
  return VectorField(FieldKind::Affine, NetSpec{d, 1, d, kLeakySlope}, std::move(params));
}

VectorField VectorField::net(NetSpec spec, Vector params) {
  spec.validate();
  if (spec.depth == 1) spec.width = spec.dim;
  if (params.size() != spec.param_count()) throw InvalidInput("VectorField: parameter count does not match NetSpec");
  return VectorField(FieldKind::Net, spec, std::move(params));
}

VectorField VectorField::net_random(NetSpec spec, Rng& rng) {
  spec.validate();
  if (spec.depth == 1) spec.width = spec.dim;
  Vector params = Vector::Zero(spec.param_count());
  Eigen::Index offset = 0;
  for (auto [rows, cols] : spec.layer_shapes()) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(cols));
    for (Eigen::Index i = 0; i < rows * cols; ++i) params(offset + i) = rng.normal(0.0, stddev);
    offset += rows * cols + rows;
  }
  return net(spec, std::move(params));
}

VectorField VectorField::from_params(FieldKind kind, NetSpec spec, Vector params) {
  switch (kind) {
    case FieldKind::Constant:
      if (params.size() != spec.dim) throw InvalidInput("VectorField: constant parameter count");
      return constant(std::move(params));
    case FieldKind::Affine: {
      const Eigen::Index d = spec.dim;
      if (d < 1 || params.size() != d * d + d) throw InvalidInput("VectorField: affine parameter count");
      return VectorField(FieldKind::Affine, NetSpec{d, 1, d, kLeakySlope}, std::move(params));
    }
    case FieldKind::Net:
      return net(spec, std::move(params));
  }
  throw InvalidInput("VectorField: unknown kind");
}

void VectorField::set_params(const Eigen::Ref<const Vector>& p) {
  if (p.size() != params_.size()) throw InvalidInput("VectorField: parameter count mismatch");
  if (!p.allFinite()) throw InvalidInput("VectorField: non-finite parameter");
  params_ = p;
}

Vector VectorField::raw(const Eigen::Ref<const Vector>& w) const {
  if (w.size() != spec_.dim) throw InvalidInput("VectorField: dimension mismatch");
  switch (kind_) {
    case FieldKind::Constant:
      return params_;
    case FieldKind::Affine: {
      const Eigen::Index d = spec_.dim;
      return ConstWeights(params_.data(), d, d) * w + params_.tail(d);
    }
    case FieldKind::Net:
      return net_forward(spec_, params_, w);
  }
  return {};
}

void VectorField::raw_vjp(const Eigen::Ref<const Vector>& w, const Eigen::Ref<const Vector>& cotangent, Vector& grad_w,
                          Vector& grad_params) const {
  const Eigen::Index d = spec_.dim;
  switch (kind_) {
    case FieldKind::Constant:
      grad_params += cotangent;
      return;
    case FieldKind::Affine: {
      ConstWeights a(params_.data(), d, d);
      Weights(grad_params.data(), d, d).noalias() += cotangent * w.transpose();
      grad_params.tail(d) += cotangent;
      grad_w.noalias() += a.transpose() * cotangent;
      return;
    }
    case FieldKind::Net:
      grad_w += net_vjp_accumulate(spec_, params_.data(), w, cotangent, grad_params.data());
      return;
  }
}

std::uint64_t stationary_field_warnings() { return g_stationary_warnings.load(std::memory_order_relaxed); }
void reset_stationary_field_warnings() { g_stationary_warnings.store(0, std::memory_order_relaxed); }

Vector velocity(const VectorField& field, const Eigen::Ref<const Vector>& w) {
  Vector f = field.raw(w);
  const double norm = f.norm();
  if (norm < kNormEpsilon) {
    g_stationary_warnings.fetch_add(1, std::memory_order_relaxed);
    return f / kNormEpsilon;
  }
  return f / norm;
}

namespace {

// Cotangent pulled back through the normalization f -> f / max(|f|, eps).
Vector normalization_vjp(const Vector& f, const Eigen::Ref<const Vector>& cotangent) {
  const double norm = f.norm();
  if (norm < kNormEpsilon) return cotangent / kNormEpsilon;
  const Vector u = f / norm;
  return (cotangent - u * u.dot(cotangent)) / norm;
}

void check_integration_args(const VectorField& field, const Eigen::Ref<const Vector>& w0, double duration,
                            int n_steps) {
  if (w0.size() != field.dim()) throw InvalidInput("integrate: dimension mismatch");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw InvalidInput("integrate: duration must be positive");
  if (n_steps < 1) throw InvalidInput("integrate: n_steps must be >= 1");
  if (!w0.allFinite()) throw InvalidInput("integrate: non-finite start point");
}

template <typename OnStage>
Vector rk4_step(const VectorField& field, const Vector& w, double h, OnStage&& on_stage) {
  on_stage(0, w);
  const Vector k1 = velocity(field, w);
  Vector x = w + 0.5 * h * k1;
  on_stage(1, x);
  const Vector k2 = velocity(field, x);
  x = w + 0.5 * h * k2;
  on_stage(2, x);
  const Vector k3 = velocity(field, x);
  x = w + h * k3;
  on_stage(3, x);
  const Vector k4 = velocity(field, x);
  Vector next = w + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw IntegrationDiverged("integrate: non-finite state");
  return next;
}

}  // namespace

Vector Trajectory::at(double t) const {
  const Eigen::Index last = times.size() - 1;
  if (t <= times(0)) return points.col(0);
  if (t >= times(last)) return points.col(last);
  const double h = times(last) / static_cast<double>(last);
  Eigen::Index k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(t / h)), last - 1);
  const double a = (t - times(k)) / (times(k + 1) - times(k));
  if (a <= 0.0) return points.col(k);
  if (a >= 1.0) return points.col(k + 1);
  return (1.0 - a) * points.col(k) + a * points.col(k + 1);
}

double Trajectory::polyline_length() const {
  double len = 0.0;
  for (Eigen::Index k = 1; k < points.cols(); ++k) len += (points.col(k) - points.col(k - 1)).norm();
  return len;
}

Trajectory integrate(const VectorField& field, const Eigen::Ref<const Vector>& w0, double duration, int n_steps) {
  check_integration_args(field, w0, duration, n_steps);
  const double h = duration / n_steps;
  Trajectory traj;
  traj.times.resize(n_steps + 1);
  traj.points.resize(field.dim(), n_steps + 1);
  traj.points.col(0) = w0;
  traj.times(0) = 0.0;
  Vector w = w0;
  for (int k = 0; k < n_steps; ++k) {
    w = rk4_step(field, w, h, [](int, const Vector&) {});
    traj.points.col(k + 1) = w;
    traj.times(k + 1) = (k + 1 == n_steps) ? duration : h * (k + 1);
  }
  return traj;
}

Vector flow_endpoint(const VectorField& field, const Eigen::Ref<const Vector>& w0, double duration, int n_steps) {
  check_integration_args(field, w0, duration, n_steps);
  const double h = duration / n_steps;
  Vector w = w0;
  for (int k = 0; k < n_steps; ++k) w = rk4_step(field, w, h, [](int, const Vector&) {});
  return w;
}

Rk4Tape::Rk4Tape(const VectorField& field, const Eigen::Ref<const Vector>& w0, double duration, int n_steps)
    : field_(&field), step_(duration / n_steps), n_steps_(n_steps) {
  check_integration_args(field, w0, duration, n_steps);
  stages_.resize(field.dim(), 4 * static_cast<Eigen::Index>(n_steps));
  Vector w = w0;
  for (int k = 0; k < n_steps; ++k) {
    w = rk4_step(field, w, step_, [&](int s, const Vector& x) { stages_.col(4 * k + s) = x; });
  }
  endpoint_ = std::move(w);
}

Vector Rk4Tape::backward_accumulate(const Eigen::Ref<const Vector>& cotangent, Vector& grad_params) const {
  const VectorField& field = *field_;
  const Eigen::Index d = field.dim();
  if (cotangent.size() != d) throw InvalidInput("adjoint: cotangent dimension mismatch");
  const double h = step_;

  Vector adj = cotangent;
  Vector bar_k(d), gx(d), gw(d);
  // Stage weights of the RK4 combination and the offsets feeding the next stage.
  constexpr double kWeight[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
  constexpr double kOffset[4] = {0.0, 0.5, 0.5, 1.0};

  for (int k = n_steps_ - 1; k >= 0; --k) {
    gw = adj;
    Vector carry = Vector::Zero(d);  // gradient flowing into k_{s-1} through stage s's input
    for (int s = 3; s >= 0; --s) {
      const auto x = stages_.col(4 * k + s);
      bar_k = h * kWeight[s] * adj + carry;
      const Vector f = field.raw(x);
      const Vector bar_f = normalization_vjp(f, bar_k);
      gx.setZero();
      field.raw_vjp(x, bar_f, gx, grad_params);
      gw += gx;
      carry = (s > 0) ? Vector(h * kOffset[s] * gx) : Vector::Zero(d);
    }
    adj = gw;
  }
  return adj;
}

FlowGradients Rk4Tape::backward(const Eigen::Ref<const Vector>& cotangent) const {
  FlowGradients out;
  out.params = Vector::Zero(field_->param_count());
  out.w0 = backward_accumulate(cotangent, out.params);
  return out;
}

FlowGradients adjoint_grad(const VectorField& field, const Eigen::Ref<const Vector>& w0, double duration, int n_steps,
                           const Eigen::Ref<const Vector>& endpoint_cotangent) {
  Rk4Tape tape(field, w0, duration, n_steps);
  return tape.backward(endpoint_cotangent);
}

void write_checkpoint(std::ostream& os, const VectorField& field) {
  os << "odeflow-checkpoint v1\n";
  os << "kind = " << to_string(field.kind()) << "\n";
  os << "dim = " << field.dim() << "\n";
  os << "depth = " << field.spec().depth << "\n";
  os << "width = " << field.spec().width << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < field.params().size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", field.params()(i));
    os << buf;
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string header_value(std::istream& is, const std::string& key, std::size_t& line_no) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("checkpoint: missing '" + key + "' line", line_no + 1);
  ++line_no;
  const auto eq = line.find('=');
  if (eq == std::string::npos || trim(line.substr(0, eq)) != key) {
    throw ParseError("checkpoint: expected '" + key + " = ...'", line_no);
  }
  return trim(line.substr(eq + 1));
}

long parse_count(const std::string& text, std::size_t line_no) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    throw ParseError("checkpoint: malformed integer '" + text + "'", line_no);
  }
  if (used != text.size() || v < 0) throw ParseError("checkpoint: malformed integer '" + text + "'", line_no);
  return v;
}

}  // namespace

VectorField read_checkpoint(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) throw ParseError("checkpoint: empty input", 1);
  ++line_no;
  line = trim(line);
  if (line.rfind("odeflow-checkpoint", 0) != 0) throw ParseError("checkpoint: bad header", line_no);
  if (line != "odeflow-checkpoint v1") throw VersionError("checkpoint: unsupported version '" + line + "'");

  const std::string kind_name = header_value(is, "kind", line_no);
  FieldKind kind;
  try {
    kind = field_kind_from_string(kind_name);
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), line_no);
  }
  NetSpec spec;
  spec.dim = parse_count(header_value(is, "dim", line_no), line_no);
  spec.depth = static_cast<int>(parse_count(header_value(is, "depth", line_no), line_no));
  spec.width = parse_count(header_value(is, "width", line_no), line_no);

  std::vector<double> values;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line, &used);
    } catch (const std::exception&) {
      throw ParseError("checkpoint: malformed parameter '" + line + "'", line_no);
    }
    if (used != line.size()) throw ParseError("checkpoint: malformed parameter '" + line + "'", line_no);
    values.push_back(v);
  }
  Vector params = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  try {
    return VectorField::from_params(kind, spec, std::move(params));
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), line_no);
  }
}

}  // namespace odeflow
