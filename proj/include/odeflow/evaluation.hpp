#pragma once

// Control / disentanglement metrics along edit trajectories, CD curves, and a
// brute-force search over translations in the active attribute plane.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "odeflow/editing.hpp"
#include "odeflow/fieldflow.hpp"
#include "odeflow/worlds.hpp"

namespace odeflow {

struct EvalConfig {
  std::size_t samples = 1024;      // M
  std::size_t grid = 48;           // tau grid points, uniform on [0, t_max]
  std::size_t traj_samples = 64;   // K_traj
  int n_steps = kEvalSteps;        // RK4 steps over [0, t_max]
  double t_max = 12.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CDPoint {
  double tau = 0.0;
  double control = 0.0;
  double disentanglement = 0.0;
  std::size_t n_samples = 0;
};

struct CDCurve {
  std::vector<CDPoint> points;

  /// Throws InvalidInput if a point leaves the unit square or tau is not
  /// ascending from 0.
  void validate() const;
};

/// 1 iff the hard label of `attribute` at w(tau) equals `target`.
int control_at(const World& world, const VectorField& field, const Eigen::Ref<const Vector>& w0, double tau,
               std::size_t attribute, int target, int n_steps = kEvalSteps);

/// Mean over j != attribute of the normalized label entropy of K_traj + 1
/// evenly spaced points of the trajectory on [0, tau]. Zero at tau = 0.
/// Throws UndefinedMetric when the world has a single attribute.
double disentanglement_at(const World& world, const VectorField& field, const Eigen::Ref<const Vector>& w0, double tau,
                          std::size_t attribute, std::size_t traj_samples = 64, int n_steps = kEvalSteps);

/// Same metric on an already computed path; `position(t)` returns w(t).
template <typename Path>
double path_disentanglement(const World& world, const Path& position, double tau, std::size_t attribute,
                            std::size_t traj_samples);

/// Draws M source-conditioned starts, integrates each once to t_max and reads
/// prefixes for every tau on the grid. CONSTANT fields are evaluated as exact
/// translations.
CDCurve cd_curve(const World& world, const VectorField& field, std::size_t attribute, const EvalConfig& config,
                 Rng& rng);

/// CD curve of the translation w0 + tau * n (n need not be unit length).
CDCurve linear_cd_curve(const World& world, const Eigen::Ref<const Vector>& direction, std::size_t attribute,
                        const EvalConfig& config, Rng& rng);

struct LinearOracleResult {
  Vector angles;          // direction k is (cos a_k, sin a_k) in the (w0, w1) plane
  Vector best_control;    // per direction, max over alpha of mean control
  Vector best_alpha;      // per direction, the maximizing alpha
  Eigen::Index best_index = 0;
  Vector best_direction;  // unit d-vector
  double control = 0.0;   // best_control(best_index)
};

/// Sweeps `directions` unit vectors in the active plane and `alphas` values
/// alpha_m = t_max * m / alphas, m = 1..alphas, scoring mean control over
/// config.samples source-conditioned starts.
LinearOracleResult best_linear_oracle(const World& world, std::size_t attribute, std::size_t directions,
                                      std::size_t alphas, const EvalConfig& config, Rng& rng);

inline constexpr std::size_t kOracleDirections = 360;
inline constexpr std::size_t kOracleAlphas = 64;

// CSV: header `tau,control,disentanglement,n_samples`, %.9g values.
void write_cd_csv(std::ostream& os, const CDCurve& curve);
CDCurve read_cd_csv(std::istream& is);

template <typename Path>
double path_disentanglement(const World& world, const Path& position, double tau, std::size_t attribute,
                            std::size_t traj_samples) {
  const std::size_t n = world.num_attributes();
  if (n < 2) throw UndefinedMetric("disentanglement: needs at least one non-edited attribute");
  if (attribute >= n) throw InvalidInput("disentanglement: attribute index out of range");
  if (traj_samples == 0) throw InvalidInput("disentanglement: traj_samples must be positive");
  if (tau <= 0.0) return 0.0;

  std::vector<std::vector<std::size_t>> counts(n);
  for (std::size_t j = 0; j < n; ++j) counts[j].assign(static_cast<std::size_t>(world.space().cardinality(j)), 0);
  for (std::size_t k = 0; k <= traj_samples; ++k) {
    const double t = tau * static_cast<double>(k) / static_cast<double>(traj_samples);
    const Vector w = position(t);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != attribute) ++counts[j][static_cast<std::size_t>(world.hard_label(w, j))];
    }
  }
  const double total = static_cast<double>(traj_samples + 1);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == attribute) continue;
    double h = 0.0;
    for (std::size_t c : counts[j]) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / total;
      h -= p * std::log(p);
    }
    sum += h / std::log(static_cast<double>(counts[j].size()));
  }
  return sum / static_cast<double>(n - 1);
}


}  // namespace odeflow
