#include "odeflow/numerics.hpp"

namespace odeflow {

void adam_step(AdamState& state, Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw InvalidInput("adam_step: dimension mismatch");
  }
  if (!grads.allFinite()) throw TrainingDiverged("adam_step: non-finite gradient", state.step);

  const auto& s = state.settings;
  ++state.step;
  state.first_moment = s.beta1 * state.first_moment + (1.0 - s.beta1) * grads;
  state.second_moment = s.beta2 * state.second_moment + (1.0 - s.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(s.beta1, t);
  const double correction2 = 1.0 - std::pow(s.beta2, t);
  params.array() -= s.learning_rate * (state.first_moment.array() / correction1) /
                    ((state.second_moment.array() / correction2).sqrt() + s.epsilon);
}

}  // namespace odeflow
