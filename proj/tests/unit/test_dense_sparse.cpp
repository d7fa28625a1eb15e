#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace loram;
using testutil::make_omega;

TEST(DenseThin, RejectsEmptyShapeAndBadLength) {
  EXPECT_THROW(DenseThin(0, 3), ShapeError);
  EXPECT_THROW(DenseThin(2, 0), ShapeError);
  EXPECT_THROW(DenseThin(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(DenseThin, ArithmeticAndNorms) {
  DenseThin a(2, 2, std::vector<double>{1, 2, 3, 4});
  DenseThin b(2, 2, 1.0);
  EXPECT_DOUBLE_EQ(a.dot(b), 10.0);
  EXPECT_DOUBLE_EQ(a.squared_norm(), 30.0);
  a.axpy(-1.0, b);
  EXPECT_EQ(a, DenseThin(2, 2, std::vector<double>{0, 1, 2, 3}));
  EXPECT_THROW(a.axpy(1.0, DenseThin(3, 2)), ShapeError);
}

TEST(CandidateSet, SortsAndIndexesRows) {
  CandidateSet c(4, {{2, 1}, {0, 3}, {0, 1}, {3, 0}});
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c.row(0), 0u);
  EXPECT_EQ(c.col(0), 1u);
  EXPECT_EQ(c.row_end(0) - c.row_begin(0), 2u);
  EXPECT_EQ(c.row_end(1) - c.row_begin(1), 0u);
  EXPECT_TRUE(c.find(2, 1).has_value());
  EXPECT_FALSE(c.find(1, 2).has_value());
}

TEST(CandidateSet, RejectsDuplicatesRangeAndDiagonal) {
  EXPECT_THROW(CandidateSet(3, {{0, 1}, {0, 1}}), InvalidArgument);
  EXPECT_THROW(CandidateSet(3, {{0, 3}}), InvalidArgument);
  EXPECT_THROW(CandidateSet(3, {{1, 1}}, DiagonalPolicy::Reject), InvalidArgument);
  EXPECT_NO_THROW(CandidateSet(3, {{1, 1}}, DiagonalPolicy::Allow));
}

TEST(CandidateSet, TransposeCarriesSourcePermutation) {
  CandidateSet c(3, {{0, 1}, {0, 2}, {2, 1}});
  auto [t, src] = c.transposed();
  ASSERT_EQ(t.size(), 3u);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_EQ(t.row(k), c.col(src[k]));
    EXPECT_EQ(t.col(k), c.row(src[k]));
  }
}

TEST(SupportToCandidates, DropsDiagonalAndZeros) {
  auto g = SparseGraphMatrix::from_triples(3, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 2, 0.0}});
  CandidateSet c = candidate_set_from_support(g);
  EXPECT_EQ(c.pairs(), (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}}));
}

TEST(Assemble, AllOnesFactorsGiveAdjacency) {
  const std::size_t d = 6;
  testutil::Pairs edges{{0, 1}, {1, 2}, {3, 5}, {4, 0}};
  auto om = make_omega(d, edges);
  DenseThin ones(d, 1, 1.0);
  auto a = loram_assemble(ones, ones, om);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      EXPECT_EQ(a.at(i, j), om->contains(i, j) ? 1.0 : 0.0);
}

TEST(Assemble, EmptyMaskGivesEmptyMatrix) {
  auto om = make_omega(4, {});
  DenseThin x(4, 2, 1.0);
  auto a = loram_assemble(x, x, om);
  EXPECT_EQ(a.nnz(), 0u);
  EXPECT_EQ(a.frobenius_norm(), 0.0);
}

TEST(Assemble, MatchesDenseProduct) {
  DenseThin x(3, 2, std::vector<double>{1, 0, 0, 1, 1, 1});
  DenseThin y(3, 2, std::vector<double>{2, 0, 0, 3, 1, 1});
  auto om = make_omega(3, {{0, 1}, {2, 0}});
  auto a = loram_assemble(x, y, om);
  Eigen::MatrixXd full = testutil::to_eigen(x) * testutil::to_eigen(y).transpose();
  EXPECT_EQ(a.nnz(), 2u);
  EXPECT_DOUBLE_EQ(a.at(0, 1), full(0, 1));
  EXPECT_DOUBLE_EQ(a.at(2, 0), full(2, 0));
  EXPECT_DOUBLE_EQ(a.at(0, 1), 0.0);  // explicit zero kept on Ω
  EXPECT_DOUBLE_EQ(a.at(2, 0), 2.0);
}

TEST(Assemble, ShapeMismatchThrows) {
  auto om = make_omega(3, {{0, 1}});
  EXPECT_THROW(loram_assemble(DenseThin(3, 2), DenseThin(3, 3), om), ShapeError);
  EXPECT_THROW(loram_assemble(DenseThin(4, 2), DenseThin(4, 2), om), ShapeError);
}

TEST(Sigma, ElementwiseMaps) {
  auto a = SparseGraphMatrix::from_triples(2, {{0, 1, -2.0}});
  EXPECT_EQ(apply_sigma(a, SigmaMode::Square).at(0, 1), 4.0);
  EXPECT_EQ(apply_sigma(a, SigmaMode::Abs).at(0, 1), 2.0);
  EXPECT_EQ(sigma_derivative_mask(a, SigmaMode::Square).at(0, 1), -4.0);
  EXPECT_EQ(sigma_derivative_mask(a, SigmaMode::Abs).at(0, 1), -1.0);
}

TEST(Sigma, PreservesSupportAndIsNonnegative) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    auto a = testutil::random_matrix(12, 0.3, rng);
    for (auto mode : {SigmaMode::Square, SigmaMode::Abs}) {
      auto s = apply_sigma(a, mode);
      EXPECT_TRUE(s.same_support(a));
      for (double v : s.values()) EXPECT_GE(v, 0.0);
    }
  }
}

TEST(Sigma, DerivativeMaskDropsStoredZeros) {
  auto om = make_omega(3, {{0, 1}, {1, 2}});
  SparseGraphMatrix a(om, {0.0, 3.0});
  auto m = sigma_derivative_mask(a, SigmaMode::Abs);
  EXPECT_EQ(m.nnz(), 1u);
  EXPECT_FALSE(m.pattern().contains(0, 1));
}

TEST(Sigma, AbsTimesSignRecoversMatrix) {
  std::mt19937_64 rng(5);
  auto a = testutil::random_matrix(15, 0.2, rng);
  auto prod = hadamard(apply_sigma(a, SigmaMode::Abs), sigma_derivative_mask(a, SigmaMode::Abs));
  EXPECT_EQ(prod, a.normalized());
}

TEST(Mask, Idempotent) {
  std::mt19937_64 rng(3);
  auto m = testutil::random_matrix(10, 0.5, rng);
  auto om = make_omega(10, testutil::random_pairs(10, 0.3, rng));
  SparseGraphMatrix ones(om, std::vector<double>(om->size(), 1.0));
  auto once = hadamard(m, ones);
  auto twice = hadamard(once, ones);
  EXPECT_EQ(once, twice);
}

TEST(Spmm, IdentityAndZero) {
  std::mt19937_64 rng(1);
  auto b = DenseThin::gaussian(5, 2, rng);
  auto eye = SparseGraphMatrix::from_triples(
      5, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}, {3, 3, 1.0}, {4, 4, 1.0}});
  EXPECT_EQ(spmm(eye, b), b);
  auto zero = SparseGraphMatrix(5);
  EXPECT_EQ(spmm(zero, b), DenseThin(5, 2));
}

TEST(Spmm, MatchesDenseOracle) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 10; ++t) {
    auto a = testutil::random_matrix(5, 0.4, rng);
    auto b = DenseThin::gaussian(5, 2, rng);
    Eigen::MatrixXd ad = densify(a);
    Eigen::MatrixXd want = ad * testutil::to_eigen(b);
    Eigen::MatrixXd want_t = ad.transpose() * testutil::to_eigen(b);
    Eigen::MatrixXd got = testutil::to_eigen(spmm(a, b));
    Eigen::MatrixXd got_t = testutil::to_eigen(spmm_transposed(a, b));
    EXPECT_LE((got - want).norm(), 1e-13 * std::max(1.0, want.norm()));
    EXPECT_LE((got_t - want_t).norm(), 1e-13 * std::max(1.0, want_t.norm()));
  }
}

TEST(Spmm, ShapeMismatchThrows) {
  EXPECT_THROW(spmm(SparseGraphMatrix(4), DenseThin(3, 2)), ShapeError);
  EXPECT_THROW(spmm_transposed(SparseGraphMatrix(4), DenseThin(3, 2)), ShapeError);
}

TEST(SparseGraphMatrix, FromTriplesSumsDuplicatesAndDropsZeros) {
  auto m = SparseGraphMatrix::from_triples(3, {{0, 1, 1.0}, {0, 1, -1.0}, {2, 0, 0.5}, {2, 0, 0.25}});
  EXPECT_EQ(m.nnz(), 1u);
  EXPECT_DOUBLE_EQ(m.at(2, 0), 0.75);
}

TEST(SparseGraphMatrix, OneNormIsMaxColumnSum) {
  auto m = SparseGraphMatrix::from_triples(3, {{0, 1, -1.0}, {2, 1, 2.0}, {1, 0, 0.5}});
  EXPECT_DOUBLE_EQ(m.one_norm(), 3.0);
}
