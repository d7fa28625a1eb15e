#pragma once

#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "loram/loram.hpp"

namespace testutil {

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

// Off-diagonal positions, each kept with probability `density`.
inline Pairs random_pairs(std::size_t d, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution on(density);
  Pairs out;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j && on(rng)) out.emplace_back(i, j);
  return out;
}

// Symmetric off-diagonal support with |Ω| close to density·d².
inline Pairs symmetric_pairs(std::size_t d, double density, std::mt19937_64& rng) {
  const auto target = static_cast<std::size_t>(std::llround(density * double(d) * double(d)));
  std::uniform_int_distribution<std::size_t> pick(0, d - 1);
  std::set<std::pair<std::size_t, std::size_t>> s;
  while (s.size() < target) {
    auto i = pick(rng), j = pick(rng);
    if (i == j) continue;
    s.emplace(i, j);
    s.emplace(j, i);
  }
  return {s.begin(), s.end()};
}

inline loram::PatternPtr make_omega(std::size_t d, Pairs p) {
  return std::make_shared<loram::CandidateSet>(d, std::move(p));
}

inline loram::SparseGraphMatrix random_matrix(std::size_t d, double density, std::mt19937_64& rng) {
  auto om = make_omega(d, random_pairs(d, density, rng));
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(om->size());
  for (auto& x : v) x = n(rng);
  return {om, std::move(v)};
}

// Gaussian factors scaled so that ‖A_Ω(X,Y)‖_F = target.
inline loram::LoramFactors scaled_factors(std::size_t d, std::size_t r,
                                          const loram::PatternPtr& om, double target,
                                          std::mt19937_64& rng) {
  loram::LoramFactors f{loram::DenseThin::gaussian(d, r, rng),
                        loram::DenseThin::gaussian(d, r, rng)};
  const double n = loram::loram_assemble(f, om).frobenius_norm();
  if (n > 0.0) f *= std::sqrt(target / n);
  return f;
}

inline Eigen::MatrixXd to_eigen(const loram::DenseThin& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = 0; k < m.cols(); ++k) e(i, k) = m(i, k);
  return e;
}

}  // namespace testutil
