#pragma once

// Attribute edits as trained flows: target construction, the two-term
// cross-entropy objective, the Adam training loop and sequential composition.

#include <cstdint>
#include <span>
#include <vector>

#include "odeflow/fieldflow.hpp"
#include "odeflow/worlds.hpp"

namespace odeflow {

inline constexpr int kTrainSteps = 64;
inline constexpr int kEvalSteps = 256;

struct TrainConfig {
  std::size_t iterations = 5000;
  std::size_t batch_size = 24;
  double t_max = 12.0;
  int n_steps = kTrainSteps;
  AdamSettings adam;
  // Per-sample gradients longer than this are rescaled to it before batch
  // averaging; 0 disables. Near zeros of f the normalized flow's gradient
  // grows like 1 / |f|.
  double clip_norm = 10.0;
  // Independent initializations trained in full, drawn in sequence from the
  // same generator; the one with the lowest mean loss over its last tenth of
  // iterations is kept.
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
};

// CONSTANT trains a single direction; NET trains an MLP of the given depth
// (width 0 means width = dim).
struct FieldChoice {
  FieldKind kind = FieldKind::Net;
  int depth = 1;
  Eigen::Index width = 0;

  static FieldChoice constant() { return {FieldKind::Constant, 0, 0}; }
  static FieldChoice net(int depth, Eigen::Index width = 0) { return {FieldKind::Net, depth, width}; }
};

struct LossTerms {
  double total = 0.0;     // L = L1 + L2
  double control = 0.0;   // L1, cross entropy of the edited attribute
  double preserve = 0.0;  // L2, mean cross entropy of the others
};

struct EditModel {
  VectorField field;
  std::size_t attribute = 0;
  int source = 0;
  int target = 1;
  double t_max = 12.0;
  WorldParams world;
  std::vector<LossTerms> history;  // batch means, one per iteration
};

/// Copy of `labels` with coordinate i moved to the last label #S_i - 1.
AttributeLabels make_target(const AttributeLabels& labels, std::size_t attribute, const AttributeSpace& space);

/// Uniform draw from [t_max / 4, t_max].
double sample_time(Rng& rng, double t_max);

/// Cross entropy (natural log) of softmax(logits) against `label`.
double cross_entropy(const Eigen::Ref<const Vector>& logits, int label);

/// Two-term loss at the endpoint of the flow from w0 for time T.
LossTerms edit_loss(const World& world, const VectorField& field, const Eigen::Ref<const Vector>& w0, double duration,
                    const AttributeLabels& target, std::size_t attribute, int n_steps = kTrainSteps);

/// Loss terms at an arbitrary endpoint, without integrating.
LossTerms endpoint_loss(const World& world, const Eigen::Ref<const Vector>& endpoint, const AttributeLabels& target,
                        std::size_t attribute);

/// edit_loss plus its gradient with respect to the field parameters, added into `grad_params`.
LossTerms edit_loss_grad(const World& world, const VectorField& field, const Eigen::Ref<const Vector>& w0,
                         double duration, const AttributeLabels& target, std::size_t attribute, int n_steps,
                         Vector& grad_params);

/// Runs config.iterations Adam steps on batches of source-labelled starts,
/// config.restarts times. Throws TrainingDiverged (carrying the iteration) on
/// a non-finite loss.
EditModel train_edit(const World& world, std::size_t attribute, const TrainConfig& config, Rng& rng,
                     const FieldChoice& choice);

/// Applies each model's flow in order, feeding each endpoint to the next.
Vector compose_edits(std::span<const EditModel> models, const Eigen::Ref<const Vector>& w0,
                     std::span<const double> times, int n_steps = kEvalSteps);

}  // namespace odeflow
