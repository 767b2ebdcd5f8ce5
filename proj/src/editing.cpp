#include "odeflow/editing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace odeflow {

AttributeLabels make_target(const AttributeLabels& labels, std::size_t attribute, const AttributeSpace& space) {
  if (attribute >= space.size()) throw InvalidInput("make_target: attribute index out of range");
  if (labels.size() != space.size()) throw InvalidInput("make_target: label count does not match attribute space");
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] < 0 || labels[j] >= space.cardinality(j)) throw InvalidInput("make_target: label out of range");
  }
  AttributeLabels target = labels;
  const int last = space.cardinality(attribute) - 1;
  // Binary attributes flip (1 - s_i); wider ones map the source 0 to the last label.
  target[attribute] = (last == 1) ? 1 - labels[attribute] : last;
  return target;
}

double sample_time(Rng& rng, double t_max) { return rng.uniform(0.25 * t_max, t_max); }

namespace {

double log_sum_exp(const Eigen::Ref<const Vector>& x) {
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

Vector softmax(const Eigen::Ref<const Vector>& x) {
  Vector e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

// Per-attribute weights of L: 1 for the edited attribute, 1/(N-1) for the rest.
double term_weight(std::size_t j, std::size_t attribute, std::size_t n_attributes) {
  if (j == attribute) return 1.0;
  return 1.0 / static_cast<double>(n_attributes - 1);
}

void check_target(const World& world, const AttributeLabels& target, std::size_t attribute) {
  if (attribute >= world.num_attributes()) throw InvalidInput("edit_loss: attribute index out of range");
  if (target.size() != world.num_attributes()) throw InvalidInput("edit_loss: target size mismatch");
}

}  // namespace

double cross_entropy(const Eigen::Ref<const Vector>& logits, int label) {
  if (label < 0 || label >= logits.size()) throw InvalidInput("cross_entropy: label out of range");
  const Vector gap = logits.array() - logits(label);
  if (gap.maxCoeff() > 0.0) return log_sum_exp(gap);
  // labelled logit is the largest: log(1 + sum of the rest) without cancellation
  double rest = 0.0;
  for (Eigen::Index k = 0; k < gap.size(); ++k) {
    if (k != label) rest += std::exp(gap(k));
  }
  return std::log1p(rest);
}

LossTerms endpoint_loss(const World& world, const Eigen::Ref<const Vector>& endpoint, const AttributeLabels& target,
                        std::size_t attribute) {
  check_target(world, target, attribute);
  const AttributeLogits logits = world.soft_regress(endpoint);
  LossTerms out;
  out.control = cross_entropy(logits[attribute], target[attribute]);
  const std::size_t n = world.num_attributes();
  if (n > 1) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != attribute) sum += cross_entropy(logits[j], target[j]);
    }
    out.preserve = sum / static_cast<double>(n - 1);
  }
  out.total = out.control + out.preserve;
  return out;
}

LossTerms edit_loss(const World& world, const VectorField& field, const Eigen::Ref<const Vector>& w0, double duration,
                    const AttributeLabels& target, std::size_t attribute, int n_steps) {
  check_target(world, target, attribute);
  return endpoint_loss(world, flow_endpoint(field, w0, duration, n_steps), target, attribute);
}

LossTerms edit_loss_grad(const World& world, const VectorField& field, const Eigen::Ref<const Vector>& w0,
                         double duration, const AttributeLabels& target, std::size_t attribute, int n_steps,
                         Vector& grad_params) {
  check_target(world, target, attribute);
  Rk4Tape tape(field, w0, duration, n_steps);
  const Vector& end = tape.endpoint();
  const LossTerms loss = endpoint_loss(world, end, target, attribute);

  const AttributeLogits logits = world.soft_regress(end);
  const std::size_t n = world.num_attributes();
  AttributeLogits cotangent(n);
  for (std::size_t j = 0; j < n; ++j) {
    cotangent[j] = softmax(logits[j]);
    cotangent[j](target[j]) -= 1.0;
    cotangent[j] *= term_weight(j, attribute, n);
  }
  const Vector grad_end = world.soft_regress_vjp(end, cotangent);
  tape.backward_accumulate(grad_end, grad_params);
  return loss;
}

namespace {

VectorField initial_field(const World& world, const FieldChoice& choice, Rng& rng) {
  const Eigen::Index d = world.dim();
  switch (choice.kind) {
    case FieldKind::Constant: {
      Vector theta = rng.normal_vector(d) / std::sqrt(static_cast<double>(d));
      return VectorField::constant(std::move(theta));
    }
    case FieldKind::Affine:
    case FieldKind::Net: {
      NetSpec spec{d, choice.depth, choice.width > 0 ? choice.width : d, kLeakySlope};
      if (choice.kind == FieldKind::Affine) spec.depth = 1;
      VectorField net = VectorField::net_random(spec, rng);
      return choice.kind == FieldKind::Net ? net : VectorField::from_params(FieldKind::Affine, net.spec(), net.params());
    }
  }
  throw InvalidInput("train_edit: unknown field kind");
}

}  // namespace

namespace {

EditModel train_once(const World& world, std::size_t attribute, const TrainConfig& config, Rng& rng,
                     const FieldChoice& choice) {
  EditModel model{initial_field(world, choice, rng), attribute, 0,
                  world.space().cardinality(attribute) - 1, config.t_max, world.params(), {}};
  model.history.reserve(config.iterations);
  AdamState adam(model.field.param_count(), config.adam);
  Vector params = model.field.params();
  Vector grad(params.size());
  Vector sample_grad(params.size());
  const LabelCondition source{attribute, model.source};
  const double inv_batch = 1.0 / static_cast<double>(config.batch_size);

  for (std::size_t it = 0; it < config.iterations; ++it) {
    grad.setZero();
    LossTerms mean;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const Vector w0 = world.sample_latent(rng, source);
      const double duration = sample_time(rng, config.t_max);
      const AttributeLabels target = make_target(world.hard_regress(w0), attribute, world.space());
      LossTerms l;
      try {
        sample_grad.setZero();
        l = edit_loss_grad(world, model.field, w0, duration, target, attribute, config.n_steps, sample_grad);
      } catch (const IntegrationDiverged& e) {
        throw TrainingDiverged(std::string("train_edit: ") + e.what() + " at iteration " + std::to_string(it), it);
      }
      const double len = sample_grad.norm();
      if (config.clip_norm > 0.0 && len > config.clip_norm) sample_grad *= config.clip_norm / len;
      grad += sample_grad;
      mean.total += l.total * inv_batch;
      mean.control += l.control * inv_batch;
      mean.preserve += l.preserve * inv_batch;
    }
    if (!std::isfinite(mean.total)) {
      throw TrainingDiverged("train_edit: non-finite loss at iteration " + std::to_string(it), it);
    }
    model.history.push_back(mean);
    grad *= inv_batch;
    try {
      adam_step(adam, params, grad);
      model.field.set_params(params);
    } catch (const TrainingDiverged&) {
      throw TrainingDiverged("train_edit: non-finite gradient at iteration " + std::to_string(it), it);
    } catch (const InvalidInput&) {
      throw TrainingDiverged("train_edit: non-finite parameters at iteration " + std::to_string(it), it);
    }
  }
  return model;
}

double final_loss(const std::vector<LossTerms>& history) {
  const std::size_t n = std::max<std::size_t>(1, history.size() / 10);
  double sum = 0.0;
  for (std::size_t i = history.size() - n; i < history.size(); ++i) sum += history[i].total;
  return sum / static_cast<double>(n);
}

}  // namespace

EditModel train_edit(const World& world, std::size_t attribute, const TrainConfig& config, Rng& rng,
                     const FieldChoice& choice) {
  if (attribute >= world.num_attributes()) throw InvalidInput("train_edit: attribute index out of range");
  if (world.num_attributes() < 2) throw InvalidInput("train_edit: world needs at least two attributes");
  if (config.iterations == 0 || config.batch_size == 0 || config.n_steps < 1 || !(config.t_max > 0.0) ||
      config.restarts == 0) {
    throw InvalidInput("train_edit: counts and t_max must be positive");
  }
  if (!(config.clip_norm >= 0.0)) {
    throw InvalidInput("train_edit: clip_norm must be non-negative");
  }
  EditModel best = train_once(world, attribute, config, rng, choice);
  double best_loss = final_loss(best.history);
  for (std::size_t r = 1; r < config.restarts; ++r) {
    EditModel next = train_once(world, attribute, config, rng, choice);
    const double loss = final_loss(next.history);
    if (loss < best_loss) {
      best = std::move(next);
      best_loss = loss;
    }
  }
  return best;
}

Vector compose_edits(std::span<const EditModel> models, const Eigen::Ref<const Vector>& w0,
                     std::span<const double> times, int n_steps) {
  if (models.size() != times.size()) throw InvalidInput("compose_edits: one time per model required");
  for (std::size_t k = 1; k < models.size(); ++k) {
    if (!(models[k].world == models[0].world)) throw InvalidInput("compose_edits: models belong to different worlds");
  }
  Vector w = w0;
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (times[k] < 0.0 || times[k] > models[k].t_max) throw InvalidInput("compose_edits: time outside [0, t_max]");
    if (times[k] == 0.0) continue;
    w = flow_endpoint(models[k].field, w, times[k], n_steps);
  }
  return w;
}

}  // namespace odeflow
