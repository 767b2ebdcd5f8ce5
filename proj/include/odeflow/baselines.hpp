#pragma once

// Supervised linear edit directions: pseudo-label latents with the world's
// regressor, fit a linear soft-margin SVM, and translate along its normal.

#include <cstdint>
#include <span>

#include "odeflow/fieldflow.hpp"
#include "odeflow/worlds.hpp"

namespace odeflow {

struct LinearDirection {
  Vector normal;  // unit length
  std::size_t attribute = 0;
  double train_accuracy = 0.0;
  double heldout_accuracy = 0.0;
  // Geometric margin 1 / |v| of the fitted separator (v excludes the bias).
  double margin = 0.0;
};

struct SvmConfig {
  std::size_t codes = 20000;
  double lambda = 1e-3;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SvmFit {
  Vector weights;  // feature weights
  double bias = 0.0;
};

/// Hinge loss + (lambda/2)|v|^2 by subgradient descent with step 1/(lambda t),
/// visiting samples in index order every epoch. The bias is fit as the weight
/// of a constant feature. Labels must be +1 or -1.
SvmFit fit_linear_svm(const Matrix& x, std::span<const int> labels, double lambda, std::size_t epochs);

double svm_accuracy(const SvmFit& fit, const Matrix& x, std::span<const int> labels);

/// Throws InsufficientData when fewer than 10 codes per class survive label
/// filtering. Uses `rng` for the latent codes; config.seed is informational.
LinearDirection fit_interfacegan(const World& world, std::size_t attribute, const SvmConfig& config, Rng& rng);

/// Gram-Schmidt of n against the span of `others`. Throws DegenerateProjection
/// if the residual norm falls below 1e-10.
LinearDirection condition_direction(const LinearDirection& n, std::span<const LinearDirection> others);

Vector linear_shift(const Eigen::Ref<const Vector>& w0, const LinearDirection& n, double alpha);

VectorField to_constant_field(const LinearDirection& n);

inline constexpr std::size_t kMinSamplesPerClass = 10;
inline constexpr double kDegenerateResidual = 1e-10;

}  // namespace odeflow
