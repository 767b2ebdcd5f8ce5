#include "odeflow/baselines.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace odeflow {

void SvmConfig::validate() const {
  if (codes == 0 || epochs == 0) throw InvalidInput("SvmConfig: codes and epochs must be positive");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("SvmConfig: lambda must be positive");
}

SvmFit fit_linear_svm(const Matrix& x, std::span<const int> labels, double lambda, std::size_t epochs) {
  const Eigen::Index n = x.cols();
  const Eigen::Index d = x.rows();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size()) throw InvalidInput("fit_linear_svm: label count mismatch");
  if (!(lambda > 0.0)) throw InvalidInput("fit_linear_svm: lambda must be positive");
  for (int y : labels) {
    if (y != 1 && y != -1) throw InvalidInput("fit_linear_svm: labels must be +1 or -1");
  }

  // Augmented weight vector (v, b); the constant feature is 1.
  Vector v = Vector::Zero(d + 1);
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (Eigen::Index k = 0; k < n; ++k) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double y = labels[static_cast<std::size_t>(k)];
      const double score = v.head(d).dot(x.col(k)) + v(d);
      v *= 1.0 - eta * lambda;
      if (y * score < 1.0) {
        v.head(d) += eta * y * x.col(k);
        v(d) += eta * y;
      }
    }
  }
  return SvmFit{v.head(d), v(d)};
}

double svm_accuracy(const SvmFit& fit, const Matrix& x, std::span<const int> labels) {
  if (static_cast<std::size_t>(x.cols()) != labels.size()) throw InvalidInput("svm_accuracy: label count mismatch");
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double score = fit.weights.dot(x.col(k)) + fit.bias;
    const int predicted = score > 0.0 ? 1 : -1;
    if (predicted == labels[static_cast<std::size_t>(k)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

LinearDirection fit_interfacegan(const World& world, std::size_t attribute, const SvmConfig& config, Rng& rng) {
  config.validate();
  if (attribute >= world.num_attributes()) throw InvalidInput("fit_interfacegan: attribute index out of range");
  const int target = world.space().cardinality(attribute) - 1;

  std::vector<Vector> codes;
  std::vector<int> labels;
  codes.reserve(config.codes);
  labels.reserve(config.codes);
  std::size_t positives = 0;
  for (std::size_t k = 0; k < config.codes; ++k) {
    Vector w = world.sample_latent(rng);
    const int label = world.hard_label(w, attribute);
    if (label != 0 && label != target) continue;  // intermediate sector
    labels.push_back(label == target ? 1 : -1);
    if (label == target) ++positives;
    codes.push_back(std::move(w));
  }
  const std::size_t negatives = codes.size() - positives;
  if (positives < kMinSamplesPerClass || negatives < kMinSamplesPerClass) {
    throw InsufficientData("fit_interfacegan: fewer than 10 codes in a class (" + std::to_string(negatives) +
                           " source, " + std::to_string(positives) + " target)");
  }

  const std::size_t n_train = codes.size() - codes.size() / 5;
  Matrix train(world.dim(), static_cast<Eigen::Index>(n_train));
  Matrix heldout(world.dim(), static_cast<Eigen::Index>(codes.size() - n_train));
  for (std::size_t k = 0; k < codes.size(); ++k) {
    if (k < n_train) {
      train.col(static_cast<Eigen::Index>(k)) = codes[k];
    } else {
      heldout.col(static_cast<Eigen::Index>(k - n_train)) = codes[k];
    }
  }
  const std::span<const int> all(labels);
  const auto train_labels = all.first(n_train);
  const auto heldout_labels = all.subspan(n_train);

  const SvmFit fit = fit_linear_svm(train, train_labels, config.lambda, config.epochs);
  const double norm = fit.weights.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateProjection("fit_interfacegan: SVM weights vanished");

  LinearDirection out;
  out.normal = fit.weights / norm;
  out.attribute = attribute;
  out.train_accuracy = svm_accuracy(fit, train, train_labels);
  out.heldout_accuracy = svm_accuracy(fit, heldout, heldout_labels);
  out.margin = 1.0 / norm;
  return out;
}

LinearDirection condition_direction(const LinearDirection& n, std::span<const LinearDirection> others) {
  const Eigen::Index d = n.normal.size();
  std::vector<Vector> basis;
  for (const LinearDirection& o : others) {
    if (o.normal.size() != d) throw InvalidInput("condition_direction: dimension mismatch");
    Vector u = o.normal;
    for (const Vector& b : basis) u -= b.dot(u) * b;
    const double len = u.norm();
    if (len < kDegenerateResidual) continue;  // already spanned
    basis.push_back(u / len);
  }
  Vector r = n.normal;
  for (const Vector& b : basis) r -= b.dot(r) * b;
  const double len = r.norm();
  if (len < kDegenerateResidual) {
    throw DegenerateProjection("condition_direction: direction lies in the span of the conditioning directions");
  }
  LinearDirection out = n;
  out.normal = r / len;
  return out;
}

Vector linear_shift(const Eigen::Ref<const Vector>& w0, const LinearDirection& n, double alpha) {
  if (w0.size() != n.normal.size()) throw InvalidInput("linear_shift: dimension mismatch");
  return w0 + alpha * n.normal;
}

VectorField to_constant_field(const LinearDirection& n) { return VectorField::constant(n.normal); }

}  // namespace odeflow
