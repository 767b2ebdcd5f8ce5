#include "odeflow/evaluation.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace odeflow {

void EvalConfig::validate() const {
  if (samples == 0 || grid < 2 || traj_samples == 0 || n_steps < 1) {
    throw InvalidInput("EvalConfig: samples, traj_samples and n_steps must be positive and grid >= 2");
  }
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InvalidInput("EvalConfig: t_max must be positive");
}

void CDCurve::validate() const {
  double prev = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const CDPoint& p = points[k];
    const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(p.control) || !unit(p.disentanglement)) throw InvalidInput("CDCurve: point outside the unit square");
    if (k == 0 ? p.tau != 0.0 : !(p.tau > prev)) throw InvalidInput("CDCurve: tau must ascend from 0");
    prev = p.tau;
  }
}

namespace {

int target_label(const World& world, std::size_t attribute) {
  if (attribute >= world.num_attributes()) throw InvalidInput("evaluation: attribute index out of range");
  return world.space().cardinality(attribute) - 1;
}

std::vector<Vector> draw_starts(const World& world, std::size_t attribute, std::size_t count, Rng& rng) {
  std::vector<Vector> starts;
  starts.reserve(count);
  for (std::size_t m = 0; m < count; ++m) starts.push_back(world.sample_latent(rng, LabelCondition{attribute, 0}));
  return starts;
}

Vector tau_grid(const EvalConfig& config) {
  return Vector::LinSpaced(static_cast<Eigen::Index>(config.grid), 0.0, config.t_max);
}

// Accumulates per-start control and disentanglement over the tau grid.
template <typename Path>
void accumulate(const World& world, const Path& position, std::size_t attribute, int target, const Vector& taus,
                std::size_t traj_samples, Vector& control, Vector& disent) {
  for (Eigen::Index g = 0; g < taus.size(); ++g) {
    const double tau = taus(g);
    if (world.hard_label(position(tau), attribute) == target) control(g) += 1.0;
    disent(g) += path_disentanglement(world, position, tau, attribute, traj_samples);
  }
}

CDCurve finish(const Vector& taus, const Vector& control, const Vector& disent, std::size_t samples) {
  CDCurve curve;
  curve.points.reserve(static_cast<std::size_t>(taus.size()));
  const double inv = 1.0 / static_cast<double>(samples);
  for (Eigen::Index g = 0; g < taus.size(); ++g) {
    curve.points.push_back(CDPoint{taus(g), control(g) * inv, disent(g) * inv, samples});
  }
  return curve;
}

}  // namespace

int control_at(const World& world, const VectorField& field, const Eigen::Ref<const Vector>& w0, double tau,
               std::size_t attribute, int target, int n_steps) {
  if (attribute >= world.num_attributes()) throw InvalidInput("control_at: attribute index out of range");
  if (tau < 0.0) throw InvalidInput("control_at: tau must be non-negative");
  const Vector end = tau == 0.0 ? Vector(w0) : flow_endpoint(field, w0, tau, n_steps);
  return world.hard_label(end, attribute) == target ? 1 : 0;
}

double disentanglement_at(const World& world, const VectorField& field, const Eigen::Ref<const Vector>& w0, double tau,
                          std::size_t attribute, std::size_t traj_samples, int n_steps) {
  if (world.num_attributes() < 2) throw UndefinedMetric("disentanglement: needs at least one non-edited attribute");
  if (tau < 0.0) throw InvalidInput("disentanglement_at: tau must be non-negative");
  if (tau == 0.0) return 0.0;
  const Trajectory tr = integrate(field, w0, tau, n_steps);
  return path_disentanglement(world, [&](double t) { return tr.at(t); }, tau, attribute, traj_samples);
}

CDCurve cd_curve(const World& world, const VectorField& field, std::size_t attribute, const EvalConfig& config,
                 Rng& rng) {
  config.validate();
  if (field.dim() != world.dim()) throw InvalidInput("cd_curve: field and world dimensions differ");
  if (world.num_attributes() < 2) throw UndefinedMetric("cd_curve: needs at least one non-edited attribute");
  const int target = target_label(world, attribute);
  const std::vector<Vector> starts = draw_starts(world, attribute, config.samples, rng);
  const Vector taus = tau_grid(config);
  Vector control = Vector::Zero(taus.size());
  Vector disent = Vector::Zero(taus.size());

  for (const Vector& w0 : starts) {
    if (field.kind() == FieldKind::Constant) {
      const Vector v = velocity(field, w0);
      accumulate(world, [&](double t) -> Vector { return w0 + t * v; }, attribute, target, taus, config.traj_samples,
                 control, disent);
    } else {
      const Trajectory tr = integrate(field, w0, config.t_max, config.n_steps);
      accumulate(world, [&](double t) { return tr.at(t); }, attribute, target, taus, config.traj_samples, control,
                 disent);
    }
  }
  return finish(taus, control, disent, config.samples);
}

CDCurve linear_cd_curve(const World& world, const Eigen::Ref<const Vector>& direction, std::size_t attribute,
                        const EvalConfig& config, Rng& rng) {
  config.validate();
  if (direction.size() != world.dim()) throw InvalidInput("linear_cd_curve: dimension mismatch");
  if (world.num_attributes() < 2) throw UndefinedMetric("linear_cd_curve: needs at least one non-edited attribute");
  const int target = target_label(world, attribute);
  const std::vector<Vector> starts = draw_starts(world, attribute, config.samples, rng);
  const Vector taus = tau_grid(config);
  Vector control = Vector::Zero(taus.size());
  Vector disent = Vector::Zero(taus.size());
  const Vector n = direction;
  for (const Vector& w0 : starts) {
    accumulate(world, [&](double t) -> Vector { return w0 + t * n; }, attribute, target, taus, config.traj_samples,
               control, disent);
  }
  return finish(taus, control, disent, config.samples);
}

LinearOracleResult best_linear_oracle(const World& world, std::size_t attribute, std::size_t directions,
                                      std::size_t alphas, const EvalConfig& config, Rng& rng) {
  config.validate();
  if (directions == 0 || alphas == 0) throw InvalidInput("best_linear_oracle: grid sizes must be positive");
  const int target = target_label(world, attribute);
  const std::vector<Vector> starts = draw_starts(world, attribute, config.samples, rng);
  const Eigen::Index g = static_cast<Eigen::Index>(directions);

  LinearOracleResult out;
  out.angles.resize(g);
  out.best_control = Vector::Zero(g);
  out.best_alpha = Vector::Zero(g);
  Vector w(world.dim());
  for (Eigen::Index k = 0; k < g; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(directions);
    out.angles(k) = angle;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (std::size_t m = 1; m <= alphas; ++m) {
      const double alpha = config.t_max * static_cast<double>(m) / static_cast<double>(alphas);
      std::size_t hits = 0;
      for (const Vector& w0 : starts) {
        w = w0;
        w(0) += alpha * c;
        w(1) += alpha * s;
        if (world.hard_label(w, attribute) == target) ++hits;
      }
      const double rate = static_cast<double>(hits) / static_cast<double>(starts.size());
      if (rate > out.best_control(k)) {
        out.best_control(k) = rate;
        out.best_alpha(k) = alpha;
      }
    }
    if (out.best_control(k) > out.best_control(out.best_index)) out.best_index = k;
  }
  out.control = out.best_control(out.best_index);
  out.best_direction = Vector::Zero(world.dim());
  out.best_direction(0) = std::cos(out.angles(out.best_index));
  out.best_direction(1) = std::sin(out.angles(out.best_index));
  return out;
}

void write_cd_csv(std::ostream& os, const CDCurve& curve) {
  os << "tau,control,disentanglement,n_samples\n";
  char buf[128];
  for (const CDPoint& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%zu\n", p.tau, p.control, p.disentanglement, p.n_samples);
    os << buf;
  }
}

namespace {

double parse_double(const std::string& s, int line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ParseError("bad number '" + s + "'", line);
  }
  return v;
}

std::size_t parse_count(const std::string& s, int line) {
  errno = 0;
  char* end = nullptr;
  if (s.empty() || s[0] == '-') throw ParseError("bad count '" + s + "'", line);
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) throw ParseError("bad count '" + s + "'", line);
  return static_cast<std::size_t>(v);
}

}  // namespace

CDCurve read_cd_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "tau,control,disentanglement,n_samples") {
    throw ParseError("expected CD curve header", 1);
  }
  CDCurve curve;
  int number = 1;
  while (std::getline(is, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4) throw ParseError("expected 4 fields", number);
    curve.points.push_back(CDPoint{parse_double(fields[0], number), parse_double(fields[1], number),
                                   parse_double(fields[2], number), parse_count(fields[3], number)});
  }
  return curve;
}

}  // namespace odeflow
