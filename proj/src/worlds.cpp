#include "odeflow/worlds.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>

namespace odeflow {

namespace {

// Smoothing constants of the XOR near-axis score and the WHEEL sector logits.
constexpr double kXorSmoothing = 1e-2;
constexpr double kWheelSmoothing = 4e-2;

struct Score {
  double value;
  Eigen::Vector2d grad;  // with respect to (w0, w1)
};

Score radius_score(const Eigen::Ref<const Vector>& w, double r) {
  const double rho = std::hypot(w(0), w(1));
  Score s{rho - r, Eigen::Vector2d::Zero()};
  if (rho > 0.0) s.grad << w(0) / rho, w(1) / rho;
  return s;
}

Score coordinate_score(const Eigen::Ref<const Vector>& w, int k) {
  Score s{w(k), Eigen::Vector2d::Zero()};
  s.grad(k) = 1.0;
  return s;
}

// band - q(w), q = sqrt(p^2 + eta^2) / sqrt(rho^2 + eta), p = w0 * w1.
Score near_axis_score(const Eigen::Ref<const Vector>& w, double band) {
  const double x = w(0);
  const double y = w(1);
  const double p = x * y;
  const double s = std::sqrt(p * p + kXorSmoothing * kXorSmoothing);
  const double m = std::sqrt(x * x + y * y + kXorSmoothing);
  const double q = s / m;
  const double m3 = m * m * m;
  Score out{band - q, Eigen::Vector2d::Zero()};
  out.grad(0) = -((p * y / s) / m - s * x / m3);
  out.grad(1) = -((p * x / s) / m - s * y / m3);
  return out;
}

double sector_center(int k, int sectors) {
  return (static_cast<double>(k) + 0.5) * 2.0 * std::numbers::pi / static_cast<double>(sectors);
}

// Logits closer than `tie` count as tied; ties resolve to the smaller index.
int argmax_smallest(const Vector& v, double tie) {
  int best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    if (v(k) > v(best) + tie) best = static_cast<int>(k);
  }
  return best;
}

}  // namespace

std::string to_string(WorldVariant v) {
  switch (v) {
    case WorldVariant::Blobs:
      return "blobs";
    case WorldVariant::Xor:
      return "xor";
    case WorldVariant::Ring:
      return "ring";
    case WorldVariant::Wheel:
      return "wheel";
  }
  return "unknown";
}

WorldVariant world_variant_from_string(const std::string& name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "blobs") return WorldVariant::Blobs;
  if (lower == "xor") return WorldVariant::Xor;
  if (lower == "ring") return WorldVariant::Ring;
  if (lower == "wheel") return WorldVariant::Wheel;
  throw InvalidInput("unknown world variant '" + name + "'");
}

AttributeSpace::AttributeSpace(std::vector<int> cardinalities) : cards_(std::move(cardinalities)) {
  if (cards_.empty()) throw ConstructionError("AttributeSpace: at least one attribute required");
  for (int c : cards_) {
    if (c < 2) throw ConstructionError("AttributeSpace: every attribute needs cardinality >= 2");
  }
}

namespace {

AttributeSpace space_for(const WorldParams& p) {
  switch (p.variant) {
    case WorldVariant::Blobs:
    case WorldVariant::Xor:
      return AttributeSpace({2, 2});
    case WorldVariant::Ring:
      return AttributeSpace({2, 2, 2});
    case WorldVariant::Wheel:
      return AttributeSpace({p.sectors, 2});
  }
  throw ConstructionError("unknown world variant");
}

const WorldParams& validated(const WorldParams& p) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (p.dim < 2) throw ConstructionError("World: dimension must be >= 2");
  if (!positive(p.beta)) throw ConstructionError("World: beta must be positive");
  switch (p.variant) {
    case WorldVariant::Blobs:
      if (!positive(p.center) || !positive(p.blob_spread)) {
        throw ConstructionError("World: BLOBS needs positive center and spread");
      }
      break;
    case WorldVariant::Xor:
      if (!positive(p.band)) throw ConstructionError("World: XOR needs a positive band");
      break;
    case WorldVariant::Ring:
      if (!positive(p.radius)) throw ConstructionError("World: RING needs a positive radius");
      break;
    case WorldVariant::Wheel:
      if (!positive(p.radius)) throw ConstructionError("World: WHEEL needs a positive radius");
      if (p.sectors < 2) throw ConstructionError("World: WHEEL needs at least 2 sectors");
      break;
  }
  return p;
}

}  // namespace

World::World(WorldParams params) : params_(validated(params)), space_(space_for(params_)) {}

World make_world(const WorldParams& params) { return World(params); }

void World::check_dim(const Eigen::Ref<const Vector>& w) const {
  if (w.size() != params_.dim) throw InvalidInput("World: latent dimension mismatch");
}

namespace {

// Score of binary attribute j (label 1 iff score > 0), or nullopt for WHEEL sectors.
std::optional<Score> binary_score(const WorldParams& p, const Eigen::Ref<const Vector>& w, std::size_t j) {
  switch (p.variant) {
    case WorldVariant::Blobs:
      return coordinate_score(w, static_cast<int>(j));
    case WorldVariant::Xor:
      return j == 0 ? near_axis_score(w, p.band) : coordinate_score(w, 1);
    case WorldVariant::Ring:
      if (j == 0) return radius_score(w, p.radius);
      return coordinate_score(w, j == 1 ? 1 : 0);
    case WorldVariant::Wheel:
      if (j == 0) return std::nullopt;
      return radius_score(w, p.radius);
  }
  return std::nullopt;
}

}  // namespace

Vector World::logits_of(const Eigen::Ref<const Vector>& w, std::size_t j) const {
  if (auto s = binary_score(params_, w, j)) {
    Vector out(2);
    out << 0.0, params_.beta * s->value;
    return out;
  }
  const int k_sectors = params_.sectors;
  Vector out(k_sectors);
  const double m = std::sqrt(w(0) * w(0) + w(1) * w(1) + kWheelSmoothing);
  for (int k = 0; k < k_sectors; ++k) {
    const double c = sector_center(k, k_sectors);
    out(k) = params_.beta * (w(0) * std::cos(c) + w(1) * std::sin(c)) / m;
  }
  return out;
}

AttributeLogits World::soft_regress(const Eigen::Ref<const Vector>& w) const {
  check_dim(w);
  AttributeLogits out;
  out.reserve(num_attributes());
  for (std::size_t j = 0; j < num_attributes(); ++j) out.push_back(logits_of(w, j));
  return out;
}

Vector World::soft_regress_vjp(const Eigen::Ref<const Vector>& w, const AttributeLogits& cotangent) const {
  check_dim(w);
  if (cotangent.size() != num_attributes()) throw InvalidInput("soft_regress_vjp: cotangent attribute count");
  Vector grad = Vector::Zero(params_.dim);
  for (std::size_t j = 0; j < num_attributes(); ++j) {
    const Vector& c = cotangent[j];
    if (c.size() != space_.cardinality(j)) throw InvalidInput("soft_regress_vjp: cotangent shape");
    if (auto s = binary_score(params_, w, j)) {
      grad.head<2>() += c(1) * params_.beta * s->grad;
      continue;
    }
    const Eigen::Vector2d x(w(0), w(1));
    const double m = std::sqrt(x.squaredNorm() + kWheelSmoothing);
    for (int k = 0; k < params_.sectors; ++k) {
      const double ck = sector_center(k, params_.sectors);
      const Eigen::Vector2d a(std::cos(ck), std::sin(ck));
      const Eigen::Vector2d g = a / m - a.dot(x) * x / (m * m * m);
      grad.head<2>() += c(k) * params_.beta * g;
    }
  }
  return grad;
}

int World::hard_label(const Eigen::Ref<const Vector>& w, std::size_t attribute) const {
  check_dim(w);
  if (attribute >= num_attributes()) throw InvalidInput("hard_label: attribute out of range");
  if (auto s = binary_score(params_, w, attribute)) return params_.beta * s->value > 0.0 ? 1 : 0;
  return argmax_smallest(logits_of(w, attribute), 1e-12 * params_.beta);
}

AttributeLabels World::hard_regress(const Eigen::Ref<const Vector>& w) const {
  check_dim(w);
  AttributeLabels out(num_attributes());
  for (std::size_t j = 0; j < num_attributes(); ++j) out[j] = hard_label(w, j);
  return out;
}

double World::boundary_score(const Eigen::Ref<const Vector>& w, std::size_t attribute) const {
  check_dim(w);
  if (attribute >= num_attributes()) throw InvalidInput("boundary_score: attribute out of range");
  if (auto s = binary_score(params_, w, attribute)) return params_.beta * s->value;
  Vector l = logits_of(w, attribute);
  std::sort(l.data(), l.data() + l.size(), std::greater<>());
  return l(0) - l(1);
}

Vector World::sample_latent(Rng& rng, std::optional<LabelCondition> condition) const {
  if (condition) {
    if (condition->attribute >= num_attributes()) throw InvalidInput("sample_latent: attribute out of range");
    if (condition->label < 0 || condition->label >= space_.cardinality(condition->attribute)) {
      throw InvalidInput("sample_latent: label out of range");
    }
  }
  for (int attempt = 0; attempt < kMaxConsecutiveRejections; ++attempt) {
    Vector w = rng.normal_vector(params_.dim);
    if (params_.variant == WorldVariant::Blobs) {
      const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
      w(0) = side * params_.center + params_.blob_spread * w(0);
    }
    if (!condition || hard_label(w, condition->attribute) == condition->label) return w;
  }
  throw UnsatisfiableCondition("sample_latent: condition not met after 10000 consecutive draws");
}

}  // namespace odeflow
