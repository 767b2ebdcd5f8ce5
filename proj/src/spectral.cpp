#include "odeflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace odeflow {

AffineParts affine_of(const VectorField& field) {
  const NetSpec& spec = field.spec();
  if (field.kind() == FieldKind::Constant) throw UnsupportedAnalysis("affine_of: CONSTANT field has no matrix");
  if (spec.depth != 1) throw UnsupportedAnalysis("affine_of: only depth-1 fields are affine");
  const Eigen::Index d = spec.dim;
  const Vector& p = field.params();
  AffineParts out;
  out.a = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(p.data(), d, d);
  out.b = p.segment(d * d, d);
  return out;
}

Eigen::Index default_truncation(Eigen::Index d) { return (d + 3) / 4; }

double singular_entropy(const Matrix& a, Eigen::Index k) {
  if (k < 1 || k > std::min(a.rows(), a.cols())) throw InvalidInput("singular_entropy: k out of range");
  const Vector s = svd(a).singular_values.head(k);
  const double total = s.sum();
  if (!(total > 0.0)) throw UndefinedMetric("singular_entropy: zero matrix");
  double h = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double p = s(i) / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

EigenSummary eigen_report(const Matrix& a, double fast_threshold) {
  if (!(fast_threshold > 1.0)) throw InvalidInput("eigen_report: threshold must exceed 1");
  const auto values = eig(a);
  EigenSummary out;
  out.magnitudes.resize(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) out.magnitudes(static_cast<Eigen::Index>(i)) = std::abs(values[i]);
  std::sort(out.magnitudes.data(), out.magnitudes.data() + out.magnitudes.size(), std::greater<>());
  for (double m : out.magnitudes) {
    if (m > fast_threshold) ++out.fast;
    if (m < 1.0 / fast_threshold) ++out.slow;
  }
  return out;
}

SpectralReport analyze_field(const VectorField& field, std::size_t attribute, Eigen::Index k, double fast_threshold) {
  const AffineParts parts = affine_of(field);
  const EigenSummary e = eigen_report(parts.a, fast_threshold);
  SpectralReport r;
  r.attribute = attribute;
  r.eigen_magnitudes = e.magnitudes;
  r.fast = e.fast;
  r.slow = e.slow;
  r.k = k;
  r.h_svd = singular_entropy(parts.a, k);
  r.singular_values = svd(parts.a).singular_values.head(k);
  return r;
}

Vector average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  Vector ranks(static_cast<Eigen::Index>(n));
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks(static_cast<Eigen::Index>(order[k])) = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidInput("spearman: length mismatch");
  if (xs.size() < 2) throw InvalidInput("spearman: need at least two values");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw InvalidInput("spearman: non-finite value");
  }
  const Vector rx = average_ranks(xs);
  const Vector ry = average_ranks(ys);
  const Vector cx = rx.array() - rx.mean();
  const Vector cy = ry.array() - ry.mean();
  const double sx = cx.squaredNorm();
  const double sy = cy.squaredNorm();
  if (sx == 0.0 || sy == 0.0) throw UndefinedMetric("spearman: constant ranking");
  return cx.dot(cy) / std::sqrt(sx * sy);
}

void write_spectral_csv(std::ostream& os, const std::vector<SpectralReport>& reports) {
  os << "attribute,h_svd,k";
  for (int i = 1; i <= kReportedEigenvalues; ++i) os << ",top_eig_" << i;
  os << '\n';
  char buf[64];
  for (const SpectralReport& r : reports) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%ld", r.attribute, r.h_svd, static_cast<long>(r.k));
    os << buf;
    for (int i = 0; i < kReportedEigenvalues; ++i) {
      os << ',';
      if (i < r.eigen_magnitudes.size()) {
        std::snprintf(buf, sizeof buf, "%.9g", r.eigen_magnitudes(i));
        os << buf;
      }
    }
    os << '\n';
  }
}

}  // namespace odeflow
