#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "loram/sparse.hpp"

namespace loram {

/// Kahn's algorithm over the nonzero support. Returns a topological order of
/// the nodes, or nullopt when the support contains a directed cycle
/// (self-loops included).
inline std::optional<std::vector<std::size_t>> topological_order(const SparseGraphMatrix& a) {
  const std::size_t d = a.dim();
  std::vector<std::size_t> indegree(d, 0);
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    if (a.value(k) != 0.0) ++indegree[a.col(k)];
  }
  std::vector<std::size_t> order;
  order.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (indegree[i] == 0) order.push_back(i);
  }
  const auto& p = a.pattern();
  for (std::size_t head = 0; head < order.size(); ++head) {
    const std::size_t i = order[head];
    for (std::size_t k = p.row_begin(i); k < p.row_end(i); ++k) {
      if (a.value(k) == 0.0) continue;
      if (--indegree[p.col(k)] == 0) order.push_back(p.col(k));
    }
  }
  if (order.size() != d) return std::nullopt;
  return order;
}

inline bool is_acyclic(const SparseGraphMatrix& a) { return topological_order(a).has_value(); }

}  // namespace loram
