#pragma once

// Spectral summaries of depth-1 (affine) fields f(w) = A w + b.

#include <iosfwd>
#include <span>
#include <vector>

#include "odeflow/fieldflow.hpp"

namespace odeflow {

struct AffineParts {
  Matrix a;
  Vector b;
};

/// Raw affine parameters of an AFFINE or depth-1 NET field. Throws
/// UnsupportedAnalysis otherwise.
AffineParts affine_of(const VectorField& field);

/// Entropy of the normalized top-k singular values. Throws InvalidInput
/// unless 1 <= k <= min(rows, cols), UndefinedMetric for a zero matrix.
double singular_entropy(const Matrix& a, Eigen::Index k);

/// Default truncation ceil(d / 4).
Eigen::Index default_truncation(Eigen::Index d);

inline constexpr double kFastThreshold = 5.0;

struct EigenSummary {
  Vector magnitudes;  // |lambda|, descending
  Eigen::Index fast = 0;  // |lambda| > threshold
  Eigen::Index slow = 0;  // |lambda| < 1 / threshold
};

EigenSummary eigen_report(const Matrix& a, double fast_threshold = kFastThreshold);

struct SpectralReport {
  std::size_t attribute = 0;
  Vector eigen_magnitudes;
  Eigen::Index fast = 0;
  Eigen::Index slow = 0;
  double h_svd = 0.0;
  Eigen::Index k = 0;
  Vector singular_values;  // the k used
};

SpectralReport analyze_field(const VectorField& field, std::size_t attribute, Eigen::Index k,
                             double fast_threshold = kFastThreshold);

/// Average ranks (1-based); ties share the mean of their positions.
Vector average_ranks(std::span<const double> xs);

/// Pearson correlation of average ranks. Throws InvalidInput for mismatched
/// or too short inputs, UndefinedMetric when either ranking is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

// CSV `attribute,h_svd,k,top_eig_1..top_eig_8`; missing magnitudes are empty.
void write_spectral_csv(std::ostream& os, const std::vector<SpectralReport>& reports);

inline constexpr int kReportedEigenvalues = 8;

}  // namespace odeflow
