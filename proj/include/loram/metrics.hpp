#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <utility>

#include <Eigen/SVD>

#include "loram/errors.hpp"
#include "loram/expm.hpp"
#include "loram/sparse.hpp"

namespace loram {

struct StructScores {
  double fdr = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  std::size_t shd = 0;
  std::size_t nnz_pred = 0;
  std::size_t nnz_true = 0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;  // predicted, absent in both directions
  std::size_t reversed = 0;        // predicted, absent as such but true reversed
};

/// Directed-edge comparison with the NOTEARS counting rules:
///   FDR = (FP + reversed)/#pred,  TPR = TP/#true,
///   FPR = (FP + reversed)/(d(d−1)/2 − #true),
///   SHD = extra + missing skeleton edges + reversed.
/// Weights are ignored; only nonzero positions count.
inline StructScores score(const SparseGraphMatrix& pred, const SparseGraphMatrix& truth) {
  if (pred.dim() != truth.dim()) {
    throw ShapeError("score: predicted d=" + std::to_string(pred.dim()) + " vs true d=" +
                     std::to_string(truth.dim()));
  }
  using Edge = std::pair<std::size_t, std::size_t>;
  auto edges = [](const SparseGraphMatrix& m) {
    std::set<Edge> out;
    for (std::size_t k = 0; k < m.nnz(); ++k) {
      if (m.value(k) != 0.0) out.emplace(m.row(k), m.col(k));
    }
    return out;
  };
  auto skeleton = [](const std::set<Edge>& e) {
    std::set<Edge> out;
    for (auto [i, j] : e) out.emplace(std::max(i, j), std::min(i, j));
    return out;
  };
  const std::set<Edge> p = edges(pred);
  const std::set<Edge> t = edges(truth);

  StructScores s;
  s.nnz_pred = p.size();
  s.nnz_true = t.size();
  for (auto [i, j] : p) {
    if (t.count({i, j})) {
      ++s.true_positive;
    } else if (t.count({j, i})) {
      ++s.reversed;
    } else {
      ++s.false_positive;
    }
  }
  const auto sp = skeleton(p);
  const auto st = skeleton(t);
  std::size_t extra = 0, missing = 0;
  for (const auto& e : sp) extra += st.count(e) ? 0 : 1;
  for (const auto& e : st) missing += sp.count(e) ? 0 : 1;
  s.shd = extra + missing + s.reversed;

  const double d = static_cast<double>(pred.dim());
  const double negatives = 0.5 * d * (d - 1.0) - static_cast<double>(t.size());
  const double wrong = static_cast<double>(s.false_positive + s.reversed);
  s.fdr = wrong / std::max<double>(1.0, static_cast<double>(p.size()));
  s.tpr = static_cast<double>(s.true_positive) / std::max<double>(1.0, static_cast<double>(t.size()));
  s.fpr = wrong / std::max(1.0, negatives);
  return s;
}

/// Number of singular values above rel_tol·σ_max of the densified matrix.
inline std::size_t numerical_rank(const SparseGraphMatrix& a, double rel_tol = 1e-6,
                                  std::size_t cap = kDefaultOracleCap) {
  require_within_cap(a.dim(), cap);
  if (a.dim() == 0 || a.nnz() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(densify(a));
  const auto& sv = svd.singularValues();
  const double smax = sv.maxCoeff();
  if (smax == 0.0) return 0;
  return static_cast<std::size_t>((sv.array() > rel_tol * smax).count());
}

}  // namespace loram
