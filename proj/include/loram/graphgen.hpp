#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "loram/errors.hpp"
#include "loram/sparse.hpp"

namespace loram {

struct WeightRange {
  double low = 0.5;
  double high = 2.0;
};

struct GroundTruth {
  SparseGraphMatrix a_star;
  std::vector<std::size_t> order;  // topological order used for sampling
  double density = 0.0;            // requested ρ*
  WeightRange weights;
};

/// Acyclic Erdős–Rényi graph: nodes are randomly ordered, each forward pair
/// is an edge with probability 2ρ*d/(d−1) so that E[nnz]/d² = ρ*, and weights
/// are uniform on [−high, −low] ∪ [low, high].
inline GroundTruth er_dag(std::size_t d, double density, WeightRange weights,
                          std::uint64_t seed) {
  if (!(density > 0.0 && density < 1.0)) {
    throw InvalidArgument("er_dag: density must lie in (0, 1), got " + std::to_string(density));
  }
  if (!(weights.low > 0.0 && weights.high >= weights.low)) {
    throw InvalidArgument("er_dag: weight range needs 0 < low <= high");
  }
  if (d == 0) throw InvalidArgument("er_dag: d must be positive");
  const double edge_prob = d > 1 ? 2.0 * density * static_cast<double>(d) / static_cast<double>(d - 1) : 0.0;
  if (edge_prob > 1.0) {
    throw InvalidArgument("er_dag: density " + std::to_string(density) +
                          " exceeds what an acyclic graph on d nodes can hold");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::bernoulli_distribution edge(edge_prob);
  std::bernoulli_distribution negative(0.5);
  std::uniform_real_distribution<double> magnitude(weights.low, weights.high);
  std::vector<Entry> triples;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      if (!edge(rng)) continue;
      double w = magnitude(rng);
      if (negative(rng)) w = -w;
      triples.push_back({order[a], order[b], w});
    }
  }
  return {SparseGraphMatrix::from_triples(d, std::move(triples)), std::move(order), density,
          weights};
}

/// Case (a): each off-diagonal position carries an N(0, σ_E²) value with
/// probability p.
struct BernoulliGaussian {
  double sigma_e = 0.1;
  double p = 5e-4;
};

/// Case (b): every edge gains a reversed copy scaled by σ_E, E = σ_E·A*ᵀ.
struct Reversal {
  double sigma_e = 0.4;
};

using NoiseModel = std::variant<BernoulliGaussian, Reversal>;

/// Z₀ = A* + E. Colliding positions add.
inline SparseGraphMatrix add_noise(const GroundTruth& gt, const NoiseModel& noise,
                                   std::uint64_t seed) {
  const SparseGraphMatrix& a = gt.a_star;
  std::vector<Entry> triples = a.triples();
  if (const auto* bg = std::get_if<BernoulliGaussian>(&noise)) {
    if (bg->sigma_e < 0.0 || bg->p < 0.0 || bg->p > 1.0) {
      throw InvalidArgument("add_noise: need sigma_e >= 0 and p in [0, 1]");
    }
    if (bg->sigma_e == 0.0 || bg->p == 0.0) return a;
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution on(bg->p);
    std::normal_distribution<double> value(0.0, bg->sigma_e);
    const std::size_t d = a.dim();
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (i == j || !on(rng)) continue;
        triples.push_back({i, j, value(rng)});
      }
    }
  } else {
    const double s = std::get<Reversal>(noise).sigma_e;
    if (s < 0.0) throw InvalidArgument("add_noise: sigma_e must be nonnegative");
    if (s == 0.0) return a;
    for (std::size_t k = 0; k < a.nnz(); ++k) triples.push_back({a.col(k), a.row(k), s * a.value(k)});
  }
  return SparseGraphMatrix::from_triples(a.dim(), std::move(triples));
}

inline std::string describe(const NoiseModel& noise) {
  if (const auto* bg = std::get_if<BernoulliGaussian>(&noise)) {
    return "a sigma_e=" + std::to_string(bg->sigma_e) + " p=" + std::to_string(bg->p);
  }
  return "b sigma_e=" + std::to_string(std::get<Reversal>(noise).sigma_e);
}

}  // namespace loram
