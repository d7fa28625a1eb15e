#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "loram/dense.hpp"
#include "loram/errors.hpp"

namespace loram {

struct Entry {
  std::size_t row;
  std::size_t col;
  double value;

  friend bool operator==(const Entry&, const Entry&) = default;
};

enum class DiagonalPolicy { Allow, Reject };

/// The candidate set Ω: distinct (row, col) positions of a d×d matrix, kept in
/// row-major order with a compressed row index.
class CandidateSet {
 public:
  CandidateSet() = default;

  explicit CandidateSet(std::size_t d) : dim_(d), row_ptr_(d + 1, 0) {}

  CandidateSet(std::size_t d, std::vector<std::pair<std::size_t, std::size_t>> pairs,
               DiagonalPolicy diag = DiagonalPolicy::Allow)
      : dim_(d) {
    for (const auto& [i, j] : pairs) {
      if (i >= d || j >= d) {
        throw InvalidArgument("candidate pair (" + std::to_string(i) + "," + std::to_string(j) +
                              ") out of range for d=" + std::to_string(d));
      }
      if (diag == DiagonalPolicy::Reject && i == j) {
        throw InvalidArgument("candidate set may not contain diagonal entry (" +
                              std::to_string(i) + "," + std::to_string(i) + ")");
      }
    }
    std::sort(pairs.begin(), pairs.end());
    if (std::adjacent_find(pairs.begin(), pairs.end()) != pairs.end()) {
      throw InvalidArgument("candidate set contains duplicate pairs");
    }
    rows_.reserve(pairs.size());
    cols_.reserve(pairs.size());
    for (const auto& [i, j] : pairs) {
      rows_.push_back(i);
      cols_.push_back(j);
    }
    build_row_ptr();
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  std::size_t row(std::size_t k) const noexcept { return rows_[k]; }
  std::size_t col(std::size_t k) const noexcept { return cols_[k]; }
  std::span<const std::size_t> rows() const noexcept { return rows_; }
  std::span<const std::size_t> cols() const noexcept { return cols_; }

  // Storage positions [row_begin(i), row_end(i)) hold row i, sorted by column.
  std::size_t row_begin(std::size_t i) const noexcept { return row_ptr_[i]; }
  std::size_t row_end(std::size_t i) const noexcept { return row_ptr_[i + 1]; }

  std::optional<std::size_t> find(std::size_t i, std::size_t j) const noexcept {
    if (i >= dim_) return std::nullopt;
    auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return std::nullopt;
    return static_cast<std::size_t>(it - cols_.begin());
  }

  bool contains(std::size_t i, std::size_t j) const noexcept { return find(i, j).has_value(); }

  bool has_diagonal() const noexcept {
    for (std::size_t k = 0; k < size(); ++k) {
      if (rows_[k] == cols_[k]) return true;
    }
    return false;
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(size());
    for (std::size_t k = 0; k < size(); ++k) out.emplace_back(rows_[k], cols_[k]);
    return out;
  }

  /// Transposed set Ωᵀ, plus for each of its storage positions the position
  /// of the same entry in *this.
  std::pair<CandidateSet, std::vector<std::size_t>> transposed() const {
    CandidateSet t(dim_);
    t.rows_.resize(size());
    t.cols_.resize(size());
    std::vector<std::size_t> source(size());
    // Counting sort by column keeps rows ascending inside each new row.
    std::vector<std::size_t> count(dim_ + 1, 0);
    for (std::size_t c : cols_) ++count[c + 1];
    std::partial_sum(count.begin(), count.end(), count.begin());
    t.row_ptr_ = count;
    for (std::size_t k = 0; k < size(); ++k) {
      std::size_t dst = count[cols_[k]]++;
      t.rows_[dst] = cols_[k];
      t.cols_[dst] = rows_[k];
      source[dst] = k;
    }
    return {std::move(t), std::move(source)};
  }

  friend bool operator==(const CandidateSet& a, const CandidateSet& b) {
    return a.dim_ == b.dim_ && a.rows_ == b.rows_ && a.cols_ == b.cols_;
  }

 private:
  void build_row_ptr() {
    row_ptr_.assign(dim_ + 1, 0);
    for (std::size_t i : rows_) ++row_ptr_[i + 1];
    std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  }

  std::size_t dim_ = 0;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> cols_;
  std::vector<std::size_t> row_ptr_{0};
};

using PatternPtr = std::shared_ptr<const CandidateSet>;

enum class SigmaMode { Square, Abs };

/// A d×d real matrix stored on an immutable sparsity pattern. Entries outside
/// the pattern are structural zeros; stored entries may hold an explicit zero
/// until normalized().
class SparseGraphMatrix {
 public:
  SparseGraphMatrix() : pattern_(std::make_shared<CandidateSet>(0)) {}

  explicit SparseGraphMatrix(std::size_t d) : pattern_(std::make_shared<CandidateSet>(d)) {}

  SparseGraphMatrix(PatternPtr pattern, std::vector<double> values)
      : pattern_(std::move(pattern)), values_(std::move(values)) {
    if (!pattern_) throw InvalidArgument("null sparsity pattern");
    if (values_.size() != pattern_->size()) {
      throw ShapeError("value count " + std::to_string(values_.size()) +
                       " does not match pattern size " + std::to_string(pattern_->size()));
    }
  }

  /// Builds from coordinate triples. Duplicate coordinates are summed, then
  /// exact zeros are dropped.
  static SparseGraphMatrix from_triples(std::size_t d, std::vector<Entry> triples) {
    for (const auto& e : triples) {
      if (e.row >= d || e.col >= d) {
        throw InvalidArgument("entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                              ") out of range for d=" + std::to_string(d));
      }
      if (!std::isfinite(e.value)) throw InvalidArgument("non-finite matrix entry");
    }
    std::stable_sort(triples.begin(), triples.end(), [](const Entry& a, const Entry& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<double> values;
    for (const auto& e : triples) {
      if (!pairs.empty() && pairs.back().first == e.row && pairs.back().second == e.col) {
        values.back() += e.value;
      } else {
        pairs.emplace_back(e.row, e.col);
        values.push_back(e.value);
      }
    }
    SparseGraphMatrix m(std::make_shared<CandidateSet>(d, std::move(pairs)), std::move(values));
    return m.normalized();
  }

  std::size_t dim() const noexcept { return pattern_->dim(); }
  std::size_t nnz() const noexcept { return values_.size(); }
  const CandidateSet& pattern() const noexcept { return *pattern_; }
  const PatternPtr& pattern_ptr() const noexcept { return pattern_; }
  std::span<const double> values() const noexcept { return values_; }

  std::size_t row(std::size_t k) const noexcept { return pattern_->row(k); }
  std::size_t col(std::size_t k) const noexcept { return pattern_->col(k); }
  double value(std::size_t k) const noexcept { return values_[k]; }

  /// Value at (i, j), zero when (i, j) is not stored.
  double at(std::size_t i, std::size_t j) const noexcept {
    auto k = pattern_->find(i, j);
    return k ? values_[*k] : 0.0;
  }

  std::vector<Entry> triples() const {
    std::vector<Entry> out;
    out.reserve(nnz());
    for (std::size_t k = 0; k < nnz(); ++k) out.push_back({row(k), col(k), values_[k]});
    return out;
  }

  /// Drops stored exact zeros. Returns *this unchanged when there are none.
  SparseGraphMatrix normalized() const {
    if (std::none_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; })) {
      return *this;
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<double> values;
    for (std::size_t k = 0; k < nnz(); ++k) {
      if (values_[k] != 0.0) {
        pairs.emplace_back(row(k), col(k));
        values.push_back(values_[k]);
      }
    }
    return {std::make_shared<CandidateSet>(dim(), std::move(pairs)), std::move(values)};
  }

  SparseGraphMatrix transposed() const {
    auto [t, source] = pattern_->transposed();
    std::vector<double> values(nnz());
    for (std::size_t k = 0; k < nnz(); ++k) values[k] = values_[source[k]];
    return {std::make_shared<CandidateSet>(std::move(t)), std::move(values)};
  }

  SparseGraphMatrix scaled(double s) const {
    std::vector<double> values(values_);
    for (auto& v : values) v *= s;
    return {pattern_, std::move(values)};
  }

  /// Same pattern, values replaced.
  SparseGraphMatrix with_values(std::vector<double> values) const {
    return {pattern_, std::move(values)};
  }

  double frobenius_norm() const noexcept {
    double acc = 0.0;
    for (double v : values_) acc += v * v;
    return std::sqrt(acc);
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Induced 1-norm: maximum absolute column sum.
  double one_norm() const {
    std::vector<double> colsum(dim(), 0.0);
    for (std::size_t k = 0; k < nnz(); ++k) colsum[col(k)] += std::abs(values_[k]);
    double m = 0.0;
    for (double v : colsum) m = std::max(m, v);
    return m;
  }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Support equality: same set of stored positions with nonzero value.
  bool same_support(const SparseGraphMatrix& other) const {
    return normalized().pattern() == other.normalized().pattern();
  }

  friend bool operator==(const SparseGraphMatrix& a, const SparseGraphMatrix& b) {
    return a.pattern() == b.pattern() && a.values_ == b.values_;
  }

 private:
  PatternPtr pattern_;
  std::vector<double> values_;
};

/// Ω built from the support of a graph matrix. Diagonal positions are dropped
/// since a self-loop can never belong to a DAG.
inline CandidateSet candidate_set_from_support(const SparseGraphMatrix& g) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k < g.nnz(); ++k) {
    if (g.value(k) != 0.0 && g.row(k) != g.col(k)) pairs.emplace_back(g.row(k), g.col(k));
  }
  return CandidateSet(g.dim(), std::move(pairs), DiagonalPolicy::Reject);
}

/// A_Ω(X, Y) = P_Ω(XYᵀ): Σ_k X[i,k]·Y[j,k] at every (i, j) ∈ Ω. Cost O(|Ω|·r).
/// Values that happen to be exactly zero are kept, so the result always lives
/// on Ω.
inline SparseGraphMatrix loram_assemble(const DenseThin& x, const DenseThin& y,
                                        const PatternPtr& omega) {
  if (!x.same_shape(y)) throw ShapeError("factors X and Y differ in shape");
  if (x.rows() != omega->dim()) {
    throw ShapeError("factor rows " + std::to_string(x.rows()) +
                     " do not match candidate set dimension " + std::to_string(omega->dim()));
  }
  const std::size_t r = x.cols();
  std::vector<double> values(omega->size());
  for (std::size_t s = 0; s < omega->size(); ++s) {
    auto xi = x.row(omega->row(s));
    auto yj = y.row(omega->col(s));
    double acc = 0.0;
    for (std::size_t k = 0; k < r; ++k) acc += xi[k] * yj[k];
    values[s] = acc;
  }
  return {omega, std::move(values)};
}

inline SparseGraphMatrix loram_assemble(const FactorPair& f, const PatternPtr& omega) {
  return loram_assemble(f.x, f.y, omega);
}

inline SparseGraphMatrix apply_sigma(const SparseGraphMatrix& a, SigmaMode mode) {
  std::vector<double> values(a.values().begin(), a.values().end());
  for (auto& v : values) v = mode == SigmaMode::Square ? v * v : std::abs(v);
  return a.with_values(std::move(values));
}

/// Dσ(A) as an elementwise mask: 2A for Square, sign(A) for Abs. Explicit
/// zeros are dropped first so the mask support equals the support of A.
inline SparseGraphMatrix sigma_derivative_mask(const SparseGraphMatrix& a, SigmaMode mode) {
  SparseGraphMatrix n = a.normalized();
  std::vector<double> values(n.values().begin(), n.values().end());
  for (auto& v : values) {
    if (mode == SigmaMode::Square) {
      v *= 2.0;
    } else {
      v = v > 0.0 ? 1.0 : -1.0;
    }
  }
  return n.with_values(std::move(values));
}

/// Elementwise product of two sparse matrices; the result lives on the
/// intersection of both patterns.
inline SparseGraphMatrix hadamard(const SparseGraphMatrix& a, const SparseGraphMatrix& b) {
  if (a.dim() != b.dim()) throw ShapeError("hadamard: dimension mismatch");
  const auto& pa = a.pattern();
  const auto& pb = b.pattern();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> values;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    std::size_t ka = pa.row_begin(i), kb = pb.row_begin(i);
    const std::size_t ea = pa.row_end(i), eb = pb.row_end(i);
    while (ka < ea && kb < eb) {
      if (pa.col(ka) < pb.col(kb)) {
        ++ka;
      } else if (pb.col(kb) < pa.col(ka)) {
        ++kb;
      } else {
        pairs.emplace_back(i, pa.col(ka));
        values.push_back(a.value(ka) * b.value(kb));
        ++ka;
        ++kb;
      }
    }
  }
  return {std::make_shared<CandidateSet>(a.dim(), std::move(pairs)), std::move(values)};
}

/// out = A·B. Row i of the output accumulates A's row i in column order.
inline DenseThin spmm(const SparseGraphMatrix& a, const DenseThin& b) {
  if (b.rows() != a.dim()) {
    throw ShapeError("spmm: sparse dim " + std::to_string(a.dim()) + " vs dense rows " +
                     std::to_string(b.rows()));
  }
  DenseThin out(b.rows(), b.cols());
  const auto& p = a.pattern();
  const std::size_t r = b.cols();
  for (std::size_t i = 0; i < a.dim(); ++i) {
    auto oi = out.row(i);
    for (std::size_t k = p.row_begin(i); k < p.row_end(i); ++k) {
      const double v = a.value(k);
      auto bj = b.row(p.col(k));
      for (std::size_t c = 0; c < r; ++c) oi[c] += v * bj[c];
    }
  }
  return out;
}

/// out = Aᵀ·B, scattering A's rows in storage order.
inline DenseThin spmm_transposed(const SparseGraphMatrix& a, const DenseThin& b) {
  if (b.rows() != a.dim()) {
    throw ShapeError("spmm_transposed: sparse dim " + std::to_string(a.dim()) +
                     " vs dense rows " + std::to_string(b.rows()));
  }
  DenseThin out(b.rows(), b.cols());
  const std::size_t r = b.cols();
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    const double v = a.value(k);
    auto bi = b.row(a.row(k));
    auto oj = out.row(a.col(k));
    for (std::size_t c = 0; c < r; ++c) oj[c] += v * bi[c];
  }
  return out;
}

}  // namespace loram
