#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "loram/errors.hpp"
#include "loram/sparse.hpp"

namespace loram {

inline constexpr std::size_t kDefaultOracleCap = 512;

// Degree of the truncated Taylor series used after scaling. With the scaled
// 1-norm at most 1/2 the remainder is below 0.5^19/19! ≈ 1.6e-23.
inline constexpr int kExpmTaylorDegree = 18;
inline constexpr double kExpmScaledNorm = 0.5;

inline void require_within_cap(std::size_t d, std::size_t cap) {
  if (d > cap) {
    throw OracleTooLarge("dense oracle requested for d=" + std::to_string(d) +
                         " above cap " + std::to_string(cap));
  }
}

inline Eigen::MatrixXd densify(const SparseGraphMatrix& a) {
  const auto d = static_cast<Eigen::Index>(a.dim());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    m(static_cast<Eigen::Index>(a.row(k)), static_cast<Eigen::Index>(a.col(k))) += a.value(k);
  }
  return m;
}

/// exp(A) by scaling and squaring: A is divided by 2^s so its 1-norm is at
/// most 1/2, the fixed-degree Taylor polynomial is evaluated by Horner's rule,
/// and the result is squared s times.
inline Eigen::MatrixXd dense_expm(const Eigen::MatrixXd& a, std::size_t cap = kDefaultOracleCap) {
  if (a.rows() != a.cols()) throw ShapeError("dense_expm needs a square matrix");
  require_within_cap(static_cast<std::size_t>(a.rows()), cap);
  if (!a.allFinite()) throw InvalidArgument("dense_expm: non-finite entries");
  const Eigen::Index d = a.rows();
  if (d == 0) return a;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > kExpmScaledNorm) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / kExpmScaledNorm)));
  }
  const Eigen::MatrixXd scaled = a * std::ldexp(1.0, -squarings);

  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd tmp(d, d);
  for (int k = kExpmTaylorDegree; k >= 1; --k) {
    tmp.noalias() = scaled * e;
    e = tmp / static_cast<double>(k);
    e.diagonal().array() += 1.0;
  }
  for (int s = 0; s < squarings; ++s) {
    tmp.noalias() = e * e;
    e.swap(tmp);
  }
  return e;
}

/// exp(A) − I without forming I + (small): Horner on A(I + A/2(I + A/3(…)))
/// after scaling, then F ← 2F + F² per squaring. Keeps full relative accuracy
/// in the off-identity part when ‖A‖ is tiny.
inline Eigen::MatrixXd dense_expm_minus_identity(const Eigen::MatrixXd& a,
                                                 std::size_t cap = kDefaultOracleCap) {
  if (a.rows() != a.cols()) throw ShapeError("dense_expm_minus_identity needs a square matrix");
  require_within_cap(static_cast<std::size_t>(a.rows()), cap);
  if (!a.allFinite()) throw InvalidArgument("dense_expm_minus_identity: non-finite entries");
  const Eigen::Index d = a.rows();
  if (d == 0) return a;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > kExpmScaledNorm) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / kExpmScaledNorm)));
  }
  const Eigen::MatrixXd scaled = a * std::ldexp(1.0, -squarings);

  // p = I + A/2 + A²/6 + … evaluated so that F = A·p.
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd tmp(d, d);
  for (int k = kExpmTaylorDegree; k >= 2; --k) {
    tmp.noalias() = scaled * p;
    p = tmp / static_cast<double>(k);
    p.diagonal().array() += 1.0;
  }
  Eigen::MatrixXd f = scaled * p;
  for (int s = 0; s < squarings; ++s) {
    tmp.noalias() = f * f;
    f = 2.0 * f + tmp;
  }
  return f;
}

/// h(A) − d = trace(exp(σ(A)) − I), accurate even when the gap is far below
/// machine precision relative to d.
inline double h_gap_exact(const SparseGraphMatrix& a, SigmaMode mode,
                          std::size_t cap = kDefaultOracleCap) {
  require_within_cap(a.dim(), cap);
  return dense_expm_minus_identity(densify(apply_sigma(a, mode)), cap).trace();
}

/// h(A) = trace(exp(σ(A))). Always ≥ d; equal to d exactly on DAG supports.
inline double h_exact(const SparseGraphMatrix& a, SigmaMode mode,
                      std::size_t cap = kDefaultOracleCap) {
  require_within_cap(a.dim(), cap);
  return dense_expm(densify(apply_sigma(a, mode)), cap).trace();
}

}  // namespace loram
