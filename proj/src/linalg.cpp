#include "emd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emd/error.hpp"

namespace emd {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::NonFinite: return "non-finite value";
    case ErrorKind::InfiniteDivergence: return "infinite divergence";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::RankZero: return "rank zero";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::BudgetExhausted: return "budget exhausted";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Parse: return "parse error";
  }
  return "unknown";
}

namespace {

void require_same_length(ConstSpan x, ConstSpan y, const char* where) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, std::string(where) + ": lengths " +
                                                  std::to_string(x.size()) + " and " +
                                                  std::to_string(y.size()));
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, Vector entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (rows == 0 || cols == 0) {
    throw Error(ErrorKind::InvalidArgument, "matrix dimensions must be positive");
  }
  if (data_.size() != rows * cols) {
    throw Error(ErrorKind::DimensionMismatch,
                "matrix has " + std::to_string(data_.size()) + " entries, expected " +
                    std::to_string(rows * cols));
  }
  if (!all_finite(data_)) throw Error(ErrorKind::NonFinite, "matrix entries must be finite");
}

DenseMatrix DenseMatrix::identity(std::size_t dim) {
  DenseMatrix id(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) id(i, i) = 1.0;
  return id;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double dot(ConstSpan x, ConstSpan y) {
  require_same_length(x, y, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm1(ConstSpan x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

double norm2(ConstSpan x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double norm_inf(ConstSpan x) {
  double s = 0.0;
  for (double v : x) s = std::max(s, std::abs(v));
  return s;
}

double sum(ConstSpan x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

double min_entry(ConstSpan x) {
  if (x.empty()) throw Error(ErrorKind::InvalidArgument, "min_entry of empty vector");
  return *std::min_element(x.begin(), x.end());
}

bool all_finite(ConstSpan x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

Vector axpy(double alpha, ConstSpan x, ConstSpan y) {
  require_same_length(x, y, "axpy");
  Vector out(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

Vector scaled(double alpha, ConstSpan x) {
  Vector out(x.begin(), x.end());
  for (double& v : out) v *= alpha;
  return out;
}

Vector subtract(ConstSpan x, ConstSpan y) {
  require_same_length(x, y, "subtract");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return out;
}

Vector matvec(const DenseMatrix& a, ConstSpan x) {
  if (x.size() != a.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "matvec: vector length " + std::to_string(x.size()) +
                                                  ", matrix has " + std::to_string(a.cols()) +
                                                  " columns");
  }
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    ConstSpan r = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    out[i] = s;
  }
  return out;
}

Vector matvec_transpose(const DenseMatrix& a, ConstSpan y) {
  if (y.size() != a.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "matvec_transpose: vector length " + std::to_string(y.size()) + ", matrix has " +
                    std::to_string(a.rows()) + " rows");
  }
  Vector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    ConstSpan r = a.row(i);
    const double yi = y[i];
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j] * yi;
  }
  return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "matmul: inner dimensions");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

DenseMatrix gram(const DenseMatrix& a) {
  const std::size_t n = a.cols();
  DenseMatrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * a(k, j);
      g(i, j) = s;
      g(j, i) = s;
    }
  return g;
}

double max_col_norm_sq(const DenseMatrix& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * a(i, j);
    best = std::max(best, s);
  }
  return best;
}

namespace {

void require_symmetric(const DenseMatrix& g) {
  if (g.rows() != g.cols()) throw Error(ErrorKind::DimensionMismatch, "matrix is not square");
  const double scale = std::max(norm_inf(g.entries()), 1e-300);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = i + 1; j < g.cols(); ++j)
      if (std::abs(g(i, j) - g(j, i)) > 1e-10 * scale) {
        throw Error(ErrorKind::InvalidArgument, "matrix is not symmetric");
      }
}

double off_diagonal_norm(const DenseMatrix& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      if (i != j) s += g(i, j) * g(i, j);
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen symmetric_eigen(const DenseMatrix& g) {
  require_symmetric(g);
  const std::size_t n = g.rows();
  DenseMatrix a = g;
  DenseMatrix v = DenseMatrix::identity(n);
  const double target = 1e-13 * norm2(g.entries());
  constexpr int kMaxSweeps = 100;

  int sweep = 0;
  while (off_diagonal_norm(a) > target) {
    if (sweep == kMaxSweeps) {
      throw Error(ErrorKind::NonConvergence, "Jacobi eigensolver did not converge in 100 sweeps");
    }
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors = DenseMatrix(n, n);
  out.sweeps = sweep;
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

double smallest_positive_eigenvalue(const DenseMatrix& g) {
  const SymmetricEigen eig = symmetric_eigen(g);
  const double lambda_max = eig.values.back();
  const double threshold = 1e-10 * lambda_max;
  if (lambda_max <= 0.0) {
    throw Error(ErrorKind::RankZero, "no positive eigenvalue (matrix is zero or negative)");
  }
  for (double lambda : eig.values)
    if (lambda > threshold) return lambda;
  throw Error(ErrorKind::RankZero, "no eigenvalue above the positivity threshold");
}

double lambda_max_scaled_gram(const DenseMatrix& a, ConstSpan x) {
  if (x.size() != a.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "lambda_max_scaled_gram: length of x");
  }
  Vector root(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0) throw Error(ErrorKind::Domain, "lambda_max_scaled_gram: negative scaling");
    root[i] = std::sqrt(x[i]);
  }
  const DenseMatrix g = gram(a);
  const std::size_t n = x.size();

  auto apply = [&](const Vector& v) {
    Vector dv(n);
    for (std::size_t i = 0; i < n; ++i) dv[i] = root[i] * v[i];
    Vector out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += g(i, j) * dv[j];
      out[i] = root[i] * s;
    }
    return out;
  };

  Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  constexpr int kMaxIters = 100000;
  for (int it = 0; it < kMaxIters; ++it) {
    Vector w = apply(v);
    const double rayleigh = dot(v, w);
    const double wn = norm2(w);
    if (wn == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
    if (it > 0 && std::abs(rayleigh - lambda) <= 1e-12 * std::abs(rayleigh)) return rayleigh;
    lambda = rayleigh;
  }
  return lambda;
}

DenseMatrix random_orthogonal(std::size_t dim, RngState& rng) {
  if (dim == 0) throw Error(ErrorKind::InvalidArgument, "random_orthogonal: dim must be >= 1");
  DenseMatrix r(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) r(i, j) = rng.normal();

  DenseMatrix q = DenseMatrix::identity(dim);
  Vector v(dim);
  for (std::size_t k = 0; k + 1 < dim; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k; i < dim; ++i) alpha += r(i, k) * r(i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    const double sign = r(k, k) >= 0.0 ? 1.0 : -1.0;
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < dim; ++i) {
      v[i] = r(i, k) + (i == k ? sign * alpha : 0.0);
      vnorm2 += v[i] * v[i];
    }
    for (std::size_t j = k; j < dim; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < dim; ++i) s += v[i] * r(i, j);
      const double tau = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < dim; ++i) r(i, j) -= tau * v[i];
    }
    for (std::size_t row = 0; row < dim; ++row) {
      double s = 0.0;
      for (std::size_t i = k; i < dim; ++i) s += q(row, i) * v[i];
      const double tau = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < dim; ++i) q(row, i) -= tau * v[i];
    }
  }
  for (std::size_t k = 0; k < dim; ++k)
    if (r(k, k) < 0.0)
      for (std::size_t row = 0; row < dim; ++row) q(row, k) = -q(row, k);
  return q;
}

Vector project_out(const DenseMatrix& q, ConstSpan v) {
  Vector out(v.begin(), v.end());
  if (q.rows() == 0) return out;
  // Two passes of modified Gram–Schmidt keep the result orthogonal to working precision.
  for (int pass = 0; pass < 2; ++pass)
    for (std::size_t k = 0; k < q.rows(); ++k) {
      const double c = dot(q.row(k), out);
      ConstSpan qk = q.row(k);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] -= c * qk[i];
    }
  return out;
}

namespace {

DenseMatrix stack_rows(const std::vector<Vector>& rows, std::size_t n) {
  if (rows.empty()) return DenseMatrix();
  Vector flat;
  flat.reserve(rows.size() * n);
  for (const Vector& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return DenseMatrix(rows.size(), n, std::move(flat));
}

}  // namespace

DenseMatrix row_space_basis(const DenseMatrix& a, double rel_tol) {
  std::vector<Vector> basis;
  const std::size_t n = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    ConstSpan row = a.row(i);
    const double row_norm = norm2(row);
    if (row_norm == 0.0) continue;
    Vector v = project_out(stack_rows(basis, n), row);
    const double vn = norm2(v);
    if (vn <= rel_tol * row_norm) continue;
    for (double& x : v) x /= vn;
    basis.push_back(std::move(v));
  }
  return stack_rows(basis, n);
}

DenseMatrix orthogonal_complement(const DenseMatrix& dirs, std::size_t n) {
  DenseMatrix span = dirs.rows() == 0 ? DenseMatrix() : row_space_basis(dirs);
  std::vector<Vector> all;
  for (std::size_t k = 0; k < span.rows(); ++k) all.emplace_back(span.row(k).begin(), span.row(k).end());
  const std::size_t rank = all.size();
  for (std::size_t i = 0; i < n && all.size() < n; ++i) {
    Vector e(n, 0.0);
    e[i] = 1.0;
    Vector v = project_out(stack_rows(all, n), e);
    const double vn = norm2(v);
    if (vn <= 1e-8) continue;
    for (double& x : v) x /= vn;
    all.push_back(std::move(v));
  }
  std::vector<Vector> complement(all.begin() + static_cast<std::ptrdiff_t>(rank), all.end());
  return stack_rows(complement, n);
}

}  // namespace emd
