#pragma once

// Dense numerical substrate: SVD, eigenvalues, matrix exponential action,
// seeded random streams and the Adam update. Everything is fp64 by default;
// the decompositions are templated on the scalar so they accept any real
// Eigen expression.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "odeflow/errors.hpp"

namespace odeflow {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

template <typename Scalar>
struct SvdResult {
  MatrixX<Scalar> u;                // rows x k, orthonormal columns
  VectorX<Scalar> singular_values;  // k values, descending
  MatrixX<Scalar> v;                // cols x k, orthonormal columns
};

namespace detail {

// Completes zero columns of `q` (marked in `filled`) to an orthonormal set.
template <typename Scalar>
void complete_orthonormal(MatrixX<Scalar>& q, std::vector<bool> filled) {
  const Eigen::Index m = q.rows();
  Eigen::Index next_basis = 0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (filled[static_cast<std::size_t>(j)]) continue;
    while (next_basis < m) {
      VectorX<Scalar> cand = VectorX<Scalar>::Unit(m, next_basis++);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index k = 0; k < q.cols(); ++k) {
          if (!filled[static_cast<std::size_t>(k)]) continue;
          cand -= q.col(k).dot(cand) * q.col(k);
        }
      }
      const Scalar n = cand.norm();
      if (n > Scalar(1e-6)) {
        q.col(j) = cand / n;
        filled[static_cast<std::size_t>(j)] = true;
        break;
      }
    }
  }
}

// One-sided (Hestenes) Jacobi on a tall matrix (rows >= cols).
template <typename Scalar>
SvdResult<Scalar> jacobi_svd_tall(MatrixX<Scalar> work) {
  const Eigen::Index m = work.rows();
  const Eigen::Index n = work.cols();
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);
  const Scalar tol = Scalar(1e-12);
  constexpr int kMaxSweeps = 100;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar alpha = work.col(p).squaredNorm();
        const Scalar beta = work.col(q).squaredNorm();
        const Scalar gamma = work.col(p).dot(work.col(q));
        if (gamma == Scalar(0) || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const Scalar zeta = (beta - alpha) / (Scalar(2) * gamma);
        const Scalar t = std::copysign(Scalar(1), zeta) / (std::abs(zeta) + std::sqrt(Scalar(1) + zeta * zeta));
        const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar s = c * t;
        for (Eigen::Index i = 0; i < m; ++i) {
          const Scalar a = work(i, p);
          const Scalar b = work(i, q);
          work(i, p) = c * a - s * b;
          work(i, q) = s * a + c * b;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const Scalar a = v(i, p);
          const Scalar b = v(i, q);
          v(i, p) = c * a - s * b;
          v(i, q) = s * a + c * b;
        }
      }
    }
    if (!rotated) break;
  }

  VectorX<Scalar> sigma(n);
  for (Eigen::Index j = 0; j < n; ++j) sigma(j) = work.col(j).norm();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return sigma(a) > sigma(b); });

  SvdResult<Scalar> out;
  out.u = MatrixX<Scalar>::Zero(m, n);
  out.v.resize(n, n);
  out.singular_values.resize(n);
  const Scalar cutoff = std::numeric_limits<Scalar>::epsilon() * std::max<Scalar>(sigma.maxCoeff(), Scalar(1e-300)) *
                        static_cast<Scalar>(std::max(m, n));
  std::vector<bool> filled(static_cast<std::size_t>(n), false);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[static_cast<std::size_t>(k)];
    out.singular_values(k) = sigma(j);
    out.v.col(k) = v.col(j);
    if (sigma(j) > cutoff) {
      out.u.col(k) = work.col(j) / sigma(j);
      filled[static_cast<std::size_t>(k)] = true;
    } else {
      out.singular_values(k) = Scalar(0);
    }
  }
  complete_orthonormal(out.u, filled);
  return out;
}

}  // namespace detail

/// Thin singular value decomposition A = U diag(s) V^T via one-sided Jacobi
/// with a fixed cyclic sweep order. Throws InvalidInput on empty or non-finite input.
template <typename Derived>
SvdResult<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() < 1 || a.cols() < 1) throw InvalidInput("svd: empty matrix");
  if (!a.allFinite()) throw InvalidInput("svd: non-finite entry");
  if (a.rows() >= a.cols()) return detail::jacobi_svd_tall<Scalar>(a.eval());
  auto t = detail::jacobi_svd_tall<Scalar>(a.transpose().eval());
  std::swap(t.u, t.v);
  return t;
}

/// Eigenvalues of a square real matrix, with multiplicity. Hessenberg
/// reduction followed by shifted QR; complex pairs come out as conjugates.
template <typename Derived>
std::vector<std::complex<typename Derived::Scalar>> eig(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) throw InvalidInput("eig: matrix is not square");
  if (a.rows() == 0) return {};
  if (!a.allFinite()) throw InvalidInput("eig: non-finite entry");
  Eigen::EigenSolver<MatrixX<Scalar>> solver(a.eval(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw InvalidInput("eig: QR iteration did not converge");
  const auto& values = solver.eigenvalues();
  return {values.data(), values.data() + values.size()};
}

/// exp(t*A) * w by scaling and squaring around a truncated Taylor series.
template <typename DerivedA, typename DerivedW>
VectorX<typename DerivedA::Scalar> mat_exp_apply(const Eigen::MatrixBase<DerivedA>& a, typename DerivedA::Scalar t,
                                                 const Eigen::MatrixBase<DerivedW>& w) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != a.cols()) throw InvalidInput("mat_exp_apply: matrix is not square");
  if (a.cols() != w.size()) throw InvalidInput("mat_exp_apply: dimension mismatch");
  const Eigen::Index n = a.rows();
  MatrixX<Scalar> b = t * a;
  const Scalar norm1 = b.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > Scalar(0.5)) squarings = static_cast<int>(std::ceil(std::log2(norm1 / Scalar(0.5))));
  b /= std::ldexp(Scalar(1), squarings);

  // ||b|| <= 1/2, so 20 terms put the truncation error far below fp64 round-off.
  MatrixX<Scalar> term = MatrixX<Scalar>::Identity(n, n);
  MatrixX<Scalar> sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = (term * b) / static_cast<Scalar>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = (sum * sum).eval();
  return sum * w;
}

/// Seeded pseudorandom stream: std::mt19937_64 feeding the standard library
/// uniform and normal distributions. Streams are reproducible for a given
/// seed on a given standard library; no cross-platform guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return normal_(engine_); }
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  std::uint64_t next_u64() { return engine_(); }

  Vector normal_vector(Eigen::Index n) {
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = normal();
    return out;
  }

  // Child stream with a seed drawn from this one.
  Rng split() { return Rng(engine_()); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamSettings settings;
  std::uint64_t step = 0;
  Vector first_moment;
  Vector second_moment;

  AdamState() = default;
  AdamState(Eigen::Index dim, AdamSettings s)
      : settings(s), first_moment(Vector::Zero(dim)), second_moment(Vector::Zero(dim)) {}
};

/// Bias-corrected Adam update, applied in place to `params` and `state`.
/// Throws TrainingDiverged on a non-finite gradient.
void adam_step(AdamState& state, Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads);

}  // namespace odeflow
