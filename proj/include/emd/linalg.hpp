#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace emd {

using Vector = std::vector<double>;
using ConstSpan = std::span<const double>;

/// Seeded generator owned by whoever draws from it. Never shared between
/// threads; copy it to fork an independent but reproducible stream.
struct RngState {
  explicit RngState(std::uint64_t seed) : engine(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine); }
  std::size_t index_below(std::size_t bound) {
    return std::uniform_int_distribution<std::size_t>(0, bound - 1)(engine);
  }

  std::mt19937_64 engine;
};

/// Dense row-major real matrix with finite entries.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, Vector entries);

  static DenseMatrix identity(std::size_t dim);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  ConstSpan row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
  const Vector& entries() const noexcept { return data_; }

  DenseMatrix transpose() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

// Vector helpers. All reductions accumulate left to right.
double dot(ConstSpan x, ConstSpan y);
double norm1(ConstSpan x);
double norm2(ConstSpan x);
double norm_inf(ConstSpan x);
double sum(ConstSpan x);
double min_entry(ConstSpan x);
bool all_finite(ConstSpan x);
Vector axpy(double alpha, ConstSpan x, ConstSpan y);  // alpha*x + y
Vector scaled(double alpha, ConstSpan x);
Vector subtract(ConstSpan x, ConstSpan y);

Vector matvec(const DenseMatrix& a, ConstSpan x);
Vector matvec_transpose(const DenseMatrix& a, ConstSpan y);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// AᵀA, symmetric by construction.
DenseMatrix gram(const DenseMatrix& a);

/// max_j Σ_i A(i,j)².
double max_col_norm_sq(const DenseMatrix& a);

struct SymmetricEigen {
  Vector values;        // ascending
  DenseMatrix vectors;  // column k pairs with values[k]
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Off-diagonal
/// Frobenius mass is driven below 1e-13·‖G‖_F within at most 100 sweeps.
SymmetricEigen symmetric_eigen(const DenseMatrix& g);

/// Smallest eigenvalue of the symmetric matrix G exceeding 1e-10·λ_max.
double smallest_positive_eigenvalue(const DenseMatrix& g);

/// λ_max(diag(x)·AᵀA) for x ≥ 0, by power iteration on the similar symmetric
/// matrix diag(√x)·AᵀA·diag(√x).
double lambda_max_scaled_gram(const DenseMatrix& a, ConstSpan x);

/// Haar-distributed orthogonal matrix (Householder QR of a Gaussian matrix
/// with the signs of R's diagonal folded into Q).
DenseMatrix random_orthogonal(std::size_t dim, RngState& rng);

/// Orthonormal basis (as rows) of span{rows of A}, modified Gram–Schmidt with
/// reorthogonalization; rows whose residual falls below rel_tol·‖row‖ are dropped.
DenseMatrix row_space_basis(const DenseMatrix& a, double rel_tol = 1e-10);

/// Removes from v its component in span of the orthonormal rows of q.
Vector project_out(const DenseMatrix& q, ConstSpan v);

/// Orthonormal basis (as rows) of the orthogonal complement of span{dirs} in ℝⁿ.
DenseMatrix orthogonal_complement(const DenseMatrix& dirs, std::size_t n);

}  // namespace emd
