#pragma once

// Experiment configuration: `[section]` headers, `key = value` lines, `#`
// comments. Missing keys keep the defaults below.
//
//   [world]     variant, dim, beta, center, blob_spread, radius, sectors, band
//   [train]     field (constant|affine|net), depth, width, iterations,
//               batch_size, t_max, n_steps, learning_rate, beta1, beta2,
//               epsilon, clip_norm, restarts
//   [eval]      samples, grid, traj_samples, n_steps
//   [svm]       codes, lambda, epochs, conditioned (true|false)
//   [spectral]  k (0 = ceil(dim / 4)), fast_threshold
//   [run]       seed, out, attributes (all | comma-separated indices)

#include <cstdint>
#include <string>
#include <vector>

#include "odeflow/baselines.hpp"
#include "odeflow/editing.hpp"
#include "odeflow/evaluation.hpp"
#include "odeflow/worlds.hpp"

namespace odeflow {

struct SpectralSettings {
  Eigen::Index k = 0;
  double fast_threshold = 5.0;
};

struct ExperimentConfig {
  WorldParams world;
  FieldChoice field = FieldChoice::net(1);
  TrainConfig train;
  EvalConfig eval;
  SvmConfig svm;
  bool svm_conditioned = false;
  SpectralSettings spectral;
  std::uint64_t seed = 0;
  std::string out = "run";
  std::vector<std::size_t> attributes;  // empty = all

  /// Attribute indices to process, validated against the world.
  std::vector<std::size_t> attribute_list() const;
  /// Throws InvalidInput for out-of-range values.
  void validate() const;
};

/// Throws ParseError (with line number) for malformed lines, unknown
/// sections or keys, duplicates and bad values.
ExperimentConfig parse_config(const std::string& text);

/// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& config);

/// World descriptor block (the `[world]` section only).
std::string world_config_text(const WorldParams& world);

/// Deterministic per-stage seed derived from the run seed (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t seed, const std::string& stage, std::size_t attribute);

}  // namespace odeflow
