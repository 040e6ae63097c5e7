#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "emd/error.hpp"
#include "emd/linalg.hpp"
#include "test_support.hpp"

namespace emd {
namespace {

using testing::gaussian_matrix;
using testing::gaussian_vector;

TEST(DenseMatrix, RejectsBadShapes) {
  EXPECT_THROW(DenseMatrix(2, 2, Vector{1.0, 2.0, 3.0}), Error);
  EXPECT_THROW(DenseMatrix(0, 2, Vector{}), Error);
  EXPECT_THROW(DenseMatrix(1, 2, Vector{1.0, NAN}), Error);
}

TEST(Matvec, Examples) {
  EXPECT_EQ(matvec(DenseMatrix::identity(2), Vector{3, 4}), (Vector{3, 4}));
  EXPECT_EQ(matvec(DenseMatrix(1, 2, {1, 1}), Vector{2, 5}), (Vector{7}));
  EXPECT_EQ(matvec(DenseMatrix(2, 2), Vector{1, 1}), (Vector{0, 0}));
  EXPECT_THROW(matvec(DenseMatrix(2, 2), Vector{1, 1, 1}), Error);
}

TEST(MatvecTranspose, Examples) {
  EXPECT_EQ(matvec_transpose(DenseMatrix::identity(2), Vector{3, 4}), (Vector{3, 4}));
  EXPECT_EQ(matvec_transpose(DenseMatrix(1, 2, {1, 2}), Vector{3}), (Vector{3, 6}));
  EXPECT_EQ(matvec_transpose(DenseMatrix(2, 1, {1, 1}), Vector{2, 5}), (Vector{7}));
  EXPECT_THROW(matvec_transpose(DenseMatrix(2, 2), Vector{1}), Error);
}

TEST(MaxColNormSq, Examples) {
  EXPECT_EQ(max_col_norm_sq(DenseMatrix(2, 2, {3, 0, 4, 0})), 25.0);
  EXPECT_EQ(max_col_norm_sq(DenseMatrix::identity(2)), 1.0);
  EXPECT_EQ(max_col_norm_sq(DenseMatrix(1, 2, {1, 2})), 4.0);
}

TEST(SmallestPositiveEigenvalue, Examples) {
  EXPECT_NEAR(smallest_positive_eigenvalue(DenseMatrix(2, 2, {4, 0, 0, 0})), 4.0, 1e-14);
  EXPECT_NEAR(smallest_positive_eigenvalue(DenseMatrix::identity(3)), 1.0, 1e-14);
  EXPECT_NEAR(smallest_positive_eigenvalue(DenseMatrix(2, 2, {2, 1, 1, 2})), 1.0, 1e-14);
}

TEST(SmallestPositiveEigenvalue, Errors) {
  EXPECT_THROW(smallest_positive_eigenvalue(DenseMatrix(2, 2, {1, 2, 0, 1})), Error);
  try {
    smallest_positive_eigenvalue(DenseMatrix(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankZero);
  }
}

TEST(SymmetricEigen, ReconstructsRandomGram) {
  RngState rng(7);
  const DenseMatrix a = gaussian_matrix(6, 9, rng);
  const DenseMatrix g = gram(a);
  const SymmetricEigen eig = symmetric_eigen(g);
  ASSERT_TRUE(std::is_sorted(eig.values.begin(), eig.values.end()));
  double scale = 0.0;
  for (double v : g.entries()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 9; ++k) s += eig.vectors(i, k) * eig.values[k] * eig.vectors(j, k);
      EXPECT_NEAR(s, g(i, j), 1e-11 * scale);
    }
  // Rank 6: three eigenvalues vanish.
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LT(std::abs(eig.values[k]), 1e-10 * eig.values.back());
}

TEST(LambdaMaxScaledGram, Examples) {
  EXPECT_NEAR(lambda_max_scaled_gram(DenseMatrix(1, 1, {1}), Vector{2}), 2.0, 1e-12);
  EXPECT_EQ(lambda_max_scaled_gram(DenseMatrix::identity(2), Vector{0, 0}), 0.0);
  EXPECT_NEAR(lambda_max_scaled_gram(DenseMatrix::identity(2), Vector{1, 3}), 3.0, 1e-11);
  EXPECT_THROW(lambda_max_scaled_gram(DenseMatrix::identity(2), Vector{1, -1}), Error);
}

TEST(LambdaMaxScaledGram, MatchesJacobi) {
  RngState rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const DenseMatrix a = gaussian_matrix(4, 7, rng);
    Vector x(7);
    for (double& v : x) v = rng.uniform();
    const DenseMatrix g = gram(a);
    DenseMatrix s(7, 7);
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 7; ++j) s(i, j) = std::sqrt(x[i]) * g(i, j) * std::sqrt(x[j]);
    const double jacobi = symmetric_eigen(s).values.back();
    EXPECT_LT(testing::rel_diff(lambda_max_scaled_gram(a, x), jacobi), 1e-9);
  }
}

TEST(RandomOrthogonal, Examples) {
  RngState rng(3);
  const DenseMatrix q1 = random_orthogonal(1, rng);
  EXPECT_EQ(std::abs(q1(0, 0)), 1.0);

  RngState r1(42), r2(42);
  const DenseMatrix q = random_orthogonal(3, r1);
  EXPECT_EQ(q, random_orthogonal(3, r2));
  const DenseMatrix qtq = matmul(q.transpose(), q);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(qtq(i, j), i == j ? 1.0 : 0.0, 1e-10);
}

TEST(RowSpaceBasis, DropsDependentRows) {
  const DenseMatrix a(3, 3, {1, 0, 0, 2, 0, 0, 0, 1, 1});
  const DenseMatrix q = row_space_basis(a);
  EXPECT_EQ(q.rows(), 2u);
  const Vector v = project_out(q, Vector{1, 1, 1});
  EXPECT_NEAR(v[0], 0.0, 1e-15);
  EXPECT_NEAR(v[1], 0.0, 1e-15);
  EXPECT_NEAR(v[2], 0.0, 1e-15);
}

TEST(OrthogonalComplement, IsOrthonormalAndOrthogonal) {
  RngState rng(5);
  const DenseMatrix dirs = gaussian_matrix(2, 6, rng);
  const DenseMatrix c = orthogonal_complement(dirs, 6);
  ASSERT_EQ(c.rows(), 4u);
  const DenseMatrix cct = matmul(c, c.transpose());
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(cct(i, j), i == j ? 1.0 : 0.0, 1e-12);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t d = 0; d < 2; ++d) EXPECT_NEAR(dot(c.row(i), dirs.row(d)), 0.0, 1e-12);
}

// Properties over hand-rolled random inputs.

TEST(LinalgProperty, AdjointIdentity) {
  RngState rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 1 + rng.index_below(12);
    const std::size_t n = 1 + rng.index_below(12);
    const DenseMatrix a = gaussian_matrix(m, n, rng);
    const Vector x = gaussian_vector(n, rng);
    const Vector y = gaussian_vector(m, rng);
    const double lhs = dot(matvec(a, x), y);
    const double rhs = dot(x, matvec_transpose(a, y));
    const double scale = norm2(a.entries()) * norm2(x) * norm2(y);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * scale);
  }
}

TEST(LinalgProperty, PositiveEigenvalueBoundedByTrace) {
  RngState rng(102);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.index_below(8);
    const std::size_t n = 1 + rng.index_below(8);
    const DenseMatrix a = gaussian_matrix(m, n, rng);
    EXPECT_LE(smallest_positive_eigenvalue(gram(a)), max_col_norm_sq(a) * static_cast<double>(n));
  }
}

TEST(LinalgProperty, ScaledGramIsHomogeneous) {
  RngState rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const DenseMatrix a = gaussian_matrix(5, 8, rng);
    Vector x(8);
    for (double& v : x) v = rng.uniform();
    const double t = std::pow(10.0, -3.0 + 6.0 * rng.uniform());
    const double base = lambda_max_scaled_gram(a, x);
    EXPECT_LE(testing::rel_diff(lambda_max_scaled_gram(a, scaled(t, x)) / t, base), 1e-10);
  }
}

TEST(LinalgProperty, OrthogonalPreservesNorms) {
  RngState rng(104);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 1 + rng.index_below(30);
    const DenseMatrix q = random_orthogonal(dim, rng);
    const Vector v = gaussian_vector(dim, rng);
    EXPECT_LE(std::abs(norm2(matvec(q, v)) - norm2(v)), 1e-10 * norm2(v));
  }
}

}  // namespace
}  // namespace emd
