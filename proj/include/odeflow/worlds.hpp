#pragma once

// Synthetic latent worlds with closed-form, differentiable attribute
// regressors. Every binary attribute has logits (0, beta * g(w)) for a scalar
// score g; label 1 means g > 0.
//
//   BLOBS  attr0 = [w0 > 0], attr1 = [w1 > 0]; w0 drawn from the mixture
//          0.5 N(-c, s^2) + 0.5 N(+c, s^2). Linearly separable.
//   XOR    attr0 = [q(w) < band] with q = |w0 w1| / |w_(0,1)| (smoothed), i.e.
//          "close to one of the two axes"; attr1 = [w1 > 0]. The target set
//          is a cross of two strips, so no single translation moves every
//          off-axis start onto an axis.
//   RING   attr0 = [|w_(0,1)| > r], attr1 = [w1 > 0], attr2 = [w0 > 0].
//   WHEEL  attr0 = angular sector floor(K * angle / 2pi) with logits
//          beta * <w, u_k> / sqrt(|w_(0,1)|^2 + 0.04), u_k the unit vector at
//          the sector center (beta * cos(angle - center) away from the
//          origin); attr1 = [|w_(0,1)| > r].
//
// Coordinates beyond the first two carry no attribute signal.

#include <optional>
#include <string>
#include <vector>

#include "odeflow/numerics.hpp"

namespace odeflow {

enum class WorldVariant { Blobs, Xor, Ring, Wheel };

std::string to_string(WorldVariant v);
WorldVariant world_variant_from_string(const std::string& name);

struct WorldParams {
  WorldVariant variant = WorldVariant::Blobs;
  Eigen::Index dim = 8;
  double beta = 5.0;
  double center = 2.0;        // BLOBS mixture offset c
  double blob_spread = 0.7;   // BLOBS mixture standard deviation
  double radius = 1.177;      // RING / WHEEL radius band r (median radius of a 2-D standard normal)
  int sectors = 6;            // WHEEL sector count K
  double band = 0.5;          // XOR half-width of the near-axis cross

  bool operator==(const WorldParams&) const = default;
};

class AttributeSpace {
 public:
  explicit AttributeSpace(std::vector<int> cardinalities);

  std::size_t size() const noexcept { return cards_.size(); }
  int cardinality(std::size_t j) const { return cards_.at(j); }
  const std::vector<int>& cardinalities() const noexcept { return cards_; }

 private:
  std::vector<int> cards_;
};

using AttributeLogits = std::vector<Vector>;
using AttributeLabels = std::vector<int>;

struct LabelCondition {
  std::size_t attribute = 0;
  int label = 0;
};

class World {
 public:
  // Throws ConstructionError for invalid parameters.
  explicit World(WorldParams params);

  const WorldParams& params() const noexcept { return params_; }
  WorldVariant variant() const noexcept { return params_.variant; }
  Eigen::Index dim() const noexcept { return params_.dim; }
  const AttributeSpace& space() const noexcept { return space_; }
  std::size_t num_attributes() const noexcept { return space_.size(); }

  AttributeLogits soft_regress(const Eigen::Ref<const Vector>& w) const;

  /// Gradient of sum_j <cotangent_j, logits_j(w)> with respect to w.
  Vector soft_regress_vjp(const Eigen::Ref<const Vector>& w, const AttributeLogits& cotangent) const;

  /// Per-attribute argmax of the soft logits, ties to the smallest index.
  AttributeLabels hard_regress(const Eigen::Ref<const Vector>& w) const;
  int hard_label(const Eigen::Ref<const Vector>& w, std::size_t attribute) const;

  /// Signed distance-like score whose zero set is the decision boundary of a
  /// binary attribute (beta * g). For WHEEL sectors, the gap between the
  /// two largest logits.
  double boundary_score(const Eigen::Ref<const Vector>& w, std::size_t attribute) const;

  /// Draw from the base density, optionally rejection-sampled to a label.
  /// Throws UnsatisfiableCondition after 10000 consecutive rejections.
  Vector sample_latent(Rng& rng, std::optional<LabelCondition> condition = std::nullopt) const;

 private:
  void check_dim(const Eigen::Ref<const Vector>& w) const;
  Vector logits_of(const Eigen::Ref<const Vector>& w, std::size_t attribute) const;

  WorldParams params_;
  AttributeSpace space_;
};

World make_world(const WorldParams& params);

inline constexpr int kMaxConsecutiveRejections = 10000;

}  // namespace odeflow
