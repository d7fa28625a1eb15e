#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "loram/dense.hpp"
#include "loram/errors.hpp"
#include "loram/expm.hpp"
#include "loram/sparse.hpp"

namespace loram {

enum class KernelVariant {
  // Σ_k (1/k!)·(A⊙C)^k B, each power applied to the previous term.
  TaylorSum,
  // Literal recurrence: B ← (A⊙C)B/(k+1); F ← F + B; B ← F.
  Verbatim,
};

struct KernelConfig {
  double tol = 1e-8;
  KernelVariant variant = KernelVariant::TaylorSum;
  int m_cap = 55;

  void validate() const {
    if (!(tol > 0.0)) throw InvalidArgument("kernel tolerance must be positive");
    if (m_cap < 1) throw InvalidArgument("kernel m_cap must be at least 1");
  }
};

/// Smallest m with ‖A‖₁^{m+1}/(m+1)! ≤ tol, clamped to [1, m_cap].
inline int taylor_order(const SparseGraphMatrix& a, double tol, int m_cap) {
  if (!(tol > 0.0)) throw InvalidArgument("taylor_order: tol must be positive");
  if (m_cap < 1) throw InvalidArgument("taylor_order: m_cap must be at least 1");
  const double norm = a.one_norm();
  if (norm == 0.0) return 1;
  double term = norm;  // ‖A‖^{m+1}/(m+1)! at m = 0
  for (int m = 1; m <= m_cap; ++m) {
    term *= norm / static_cast<double>(m + 1);
    if (term <= tol) return m;
  }
  return m_cap;
}

/// Approximates (exp(A)⊙C)·B without forming any d×d dense matrix. Work is
/// O(m*·|supp(A)∩supp(C)|·r) plus the two pattern merges.
inline DenseThin masked_expm_action(const SparseGraphMatrix& a, const SparseGraphMatrix& c,
                                    const DenseThin& b, const KernelConfig& cfg = {}) {
  if (a.dim() != c.dim()) throw ShapeError("masked_expm_action: A and C differ in dimension");
  if (b.rows() != a.dim()) throw ShapeError("masked_expm_action: B rows do not match A");
  cfg.validate();
  const int m = taylor_order(a, cfg.tol, cfg.m_cap);
  const SparseGraphMatrix ac = hadamard(a, c);

  // (I⊙C)B scales row i by C_ii; a missing diagonal entry counts as zero.
  DenseThin f(b.rows(), b.cols());
  const auto& pc = c.pattern();
  for (std::size_t i = 0; i < c.dim(); ++i) {
    if (auto k = pc.find(i, i)) {
      const double cii = c.value(*k);
      auto src = b.row(i);
      auto dst = f.row(i);
      for (std::size_t q = 0; q < b.cols(); ++q) dst[q] = cii * src[q];
    }
  }

  DenseThin term = b;
  for (int k = 1; k <= m; ++k) {
    if (cfg.variant == KernelVariant::TaylorSum) {
      term = spmm(ac, term);
      term *= 1.0 / static_cast<double>(k);
      f.axpy(1.0, term);
    } else {
      term = spmm(ac, term);
      term *= 1.0 / static_cast<double>(k + 1);
      f.axpy(1.0, term);
      term = f;
    }
  }
  return f;
}

/// ∇h(X, Y) = (S·Y, Sᵀ·X) with S = exp(σ(A_Ω))ᵀ ⊙ Dσ(A_Ω), computed through
/// the dense exponential. O(d³); bounded by the oracle cap.
inline GradPair grad_h_exact(const SparseGraphMatrix& a_omega, const FactorPair& f,
                             SigmaMode mode, std::size_t cap = kDefaultOracleCap) {
  require_within_cap(a_omega.dim(), cap);
  const Eigen::MatrixXd e = dense_expm(densify(apply_sigma(a_omega, mode)), cap);
  const SparseGraphMatrix mask = sigma_derivative_mask(a_omega, mode);
  std::vector<double> s(mask.nnz());
  for (std::size_t k = 0; k < mask.nnz(); ++k) {
    s[k] = e(static_cast<Eigen::Index>(mask.col(k)), static_cast<Eigen::Index>(mask.row(k))) *
           mask.value(k);
  }
  const SparseGraphMatrix sm = mask.with_values(std::move(s));
  return {spmm(sm, f.y), spmm_transposed(sm, f.x)};
}

inline GradPair grad_h_exact(const FactorPair& f, const PatternPtr& omega, SigmaMode mode,
                             std::size_t cap = kDefaultOracleCap) {
  return grad_h_exact(loram_assemble(f, omega), f, mode, cap);
}

/// ∇h(X, Y) through the masked action kernel, using exp(Aᵀ) = exp(A)ᵀ:
///   S·Y  ≈ (exp(σ(A_Ω)ᵀ) ⊙ Dσ) · Y
///   Sᵀ·X ≈ (exp(σ(A_Ω)) ⊙ Dσᵀ) · X
inline GradPair grad_h_approx(const SparseGraphMatrix& a_omega, const FactorPair& f,
                              SigmaMode mode, const KernelConfig& cfg = {}) {
  if (a_omega.dim() != f.dim()) throw ShapeError("grad_h_approx: factor rows do not match A_Ω");
  const SparseGraphMatrix sa = apply_sigma(a_omega, mode);
  const SparseGraphMatrix mask = sigma_derivative_mask(a_omega, mode);
  return {masked_expm_action(sa.transposed(), mask, f.y, cfg),
          masked_expm_action(sa, mask.transposed(), f.x, cfg)};
}

inline GradPair grad_h_approx(const FactorPair& f, const PatternPtr& omega, SigmaMode mode,
                              const KernelConfig& cfg = {}) {
  return grad_h_approx(loram_assemble(f, omega), f, mode, cfg);
}

/// ⟨g1, g2⟩ / (‖g1‖‖g2‖) in the product-space metric. Two zero operands are
/// treated as identical.
inline double cosine_similarity(const GradPair& g1, const GradPair& g2) {
  if (!g1.same_shape(g2)) throw ShapeError("cosine_similarity: shapes differ");
  const double n1 = g1.norm();
  const double n2 = g2.norm();
  if (n1 == 0.0 && n2 == 0.0) return 1.0;
  if (n1 == 0.0 || n2 == 0.0) {
    throw UndefinedSimilarity("cosine similarity with exactly one zero operand");
  }
  return std::clamp(g1.dot(g2) / (n1 * n2), -1.0, 1.0);
}

/// ‖approx − exact‖ / ‖exact‖; zero when both vanish, +inf when only exact does.
inline double relative_error(const GradPair& approx, const GradPair& exact) {
  const double denom = exact.norm();
  const double num = (approx - exact).norm();
  if (denom == 0.0) return num == 0.0 ? 0.0 : INFINITY;
  return num / denom;
}

/// Estimate of trace(exp(A)) truncated at the Taylor order of A. trace(A) and
/// trace(A²) are exact; higher powers use Rademacher probes zᵀA^k z.
inline double trace_exp_estimate(const SparseGraphMatrix& a, int probes = 32,
                                 std::uint64_t seed = 20240917, const KernelConfig& cfg = {}) {
  const std::size_t d = a.dim();
  const int m = taylor_order(a, cfg.tol, cfg.m_cap);
  double tr1 = 0.0, tr2 = 0.0;
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    if (a.row(k) == a.col(k)) tr1 += a.value(k);
    tr2 += a.value(k) * a.at(a.col(k), a.row(k));
  }
  double total = static_cast<double>(d) + tr1 + 0.5 * tr2;
  if (m < 3 || d == 0 || probes <= 0) return total;

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  DenseThin z(d, static_cast<std::size_t>(probes));
  for (auto& v : z.data()) v = coin(rng) ? 1.0 : -1.0;
  DenseThin power = spmm(a, spmm(a, z));
  double factorial = 2.0;
  for (int k = 3; k <= m; ++k) {
    power = spmm(a, power);
    factorial *= k;
    double quad = 0.0;
    const auto zd = z.data();
    const auto pd = power.data();
    for (std::size_t q = 0; q < zd.size(); ++q) quad += zd[q] * pd[q];
    total += quad / static_cast<double>(probes) / factorial;
  }
  return total;
}

}  // namespace loram
