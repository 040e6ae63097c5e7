#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "emd/analysis.hpp"
#include "emd/error.hpp"

namespace emd {

namespace {

constexpr std::size_t kEnumerationLimit = 12;

// Solves the square-or-tall system A_S x = b in the least-squares sense by
// modified Gram-Schmidt; returns nullopt when the columns are dependent.
std::optional<Vector> solve_on_support(const DenseMatrix& a, ConstSpan b, const std::vector<std::size_t>& cols) {
  const std::size_t m = a.rows();
  const std::size_t k = cols.size();
  std::vector<Vector> q(k, Vector(m));
  std::vector<Vector> r(k, Vector(k, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    Vector v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = a(i, cols[c]);
    const double vnorm = norm2(v);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < c; ++j) {
        const double proj = dot(q[j], v);
        r[j][c] += proj;
        v = axpy(-proj, q[j], v);
      }
    }
    const double rn = norm2(v);
    if (rn <= 1e-10 * vnorm || rn == 0.0) return std::nullopt;
    r[c][c] = rn;
    for (std::size_t i = 0; i < m; ++i) q[c][i] = v[i] / rn;
  }
  Vector rhs(k);
  for (std::size_t c = 0; c < k; ++c) rhs[c] = dot(q[c], b);
  Vector x(k);
  for (std::size_t c = k; c-- > 0;) {
    double s = rhs[c];
    for (std::size_t j = c + 1; j < k; ++j) s -= r[c][j] * x[j];
    x[c] = s / r[c][c];
  }
  return x;
}

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * (cols + 1), 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data_[i * (cols_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * (cols_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, cols_); }
  double rhs(std::size_t i) const { return at(i, cols_); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double piv = at(pr, pc);
    for (std::size_t j = 0; j <= cols_; ++j) at(pr, j) /= piv;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (i == pr) continue;
      const double factor = at(i, pc);
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= factor * at(pr, j);
      at(i, pc) = 0.0;
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

constexpr double kPivotTol = 1e-9;

// Minimizes cᵀx over the current basis with Bland's rule. Columns with
// allowed[j] == false never enter.
void run_simplex(Tableau& t, std::vector<std::size_t>& basis, const Vector& cost,
                 const std::vector<bool>& allowed) {
  constexpr int kMaxPivots = 50000;
  for (int it = 0; it < kMaxPivots; ++it) {
    std::size_t enter = t.cols();
    for (std::size_t j = 0; j < t.cols(); ++j) {
      if (!allowed[j]) continue;
      double reduced = cost[j];
      for (std::size_t i = 0; i < t.rows(); ++i) reduced -= cost[basis[i]] * t.at(i, j);
      if (reduced < -kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter == t.cols()) return;

    std::size_t leave = t.rows();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.rows(); ++i) {
      const double coef = t.at(i, enter);
      if (coef <= kPivotTol) continue;
      const double ratio = std::max(t.rhs(i), 0.0) / coef;
      const bool tie = leave < t.rows() && std::abs(ratio - best) <= 1e-14 * (1.0 + best);
      if (leave == t.rows() || (!tie && ratio < best) || (tie && basis[i] < basis[leave])) {
        if (!tie) best = ratio;
        leave = i;
      }
    }
    if (leave == t.rows()) throw Error(ErrorKind::NonConvergence, "min_l1_by_simplex: unbounded direction");
    t.pivot(leave, enter);
    basis[leave] = enter;
  }
  throw Error(ErrorKind::NonConvergence, "min_l1_by_simplex: pivot budget exhausted");
}

}  // namespace

std::optional<Vector> min_l1_by_enumeration(const ProblemInstance& p) {
  p.validate();
  const std::size_t m = p.rows();
  const std::size_t n = p.cols();
  if (n > kEnumerationLimit) {
    throw Error(ErrorKind::InvalidArgument, "min_l1_by_enumeration: n must be at most 12");
  }
  const double b_scale = 1.0 + norm2(p.b);
  std::optional<Vector> best;
  double best_l1 = std::numeric_limits<double>::infinity();

  if (norm2(p.b) <= 1e-12 * b_scale) return Vector(n, 0.0);

  const std::size_t max_support = std::min(m, n);
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > max_support) continue;
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < n; ++j)
      if (mask & (1u << j)) cols.push_back(j);
    const auto xs = solve_on_support(p.a, p.b, cols);
    if (!xs) continue;
    double l1 = 0.0;
    bool nonneg = true;
    for (double v : *xs) {
      if (v < -1e-12 * b_scale) {
        nonneg = false;
        break;
      }
      l1 += std::max(v, 0.0);
    }
    if (!nonneg || !(l1 < best_l1 - 1e-14 * (1.0 + l1))) continue;
    Vector x(n, 0.0);
    for (std::size_t c = 0; c < cols.size(); ++c) x[cols[c]] = std::max((*xs)[c], 0.0);
    if (norm2(subtract(matvec(p.a, x), p.b)) > 1e-9 * b_scale) continue;
    best = std::move(x);
    best_l1 = l1;
  }
  return best;
}

std::optional<Vector> min_l1_by_simplex(const ProblemInstance& p) {
  p.validate();
  const std::size_t m = p.rows();
  const std::size_t n = p.cols();
  Tableau t(m, n + m);
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = p.b[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) = sign * p.a(i, j);
    t.at(i, n + i) = 1.0;
    t.rhs(i) = sign * p.b[i];
    basis[i] = n + i;
  }

  Vector phase1(n + m, 0.0);
  for (std::size_t i = 0; i < m; ++i) phase1[n + i] = 1.0;
  run_simplex(t, basis, phase1, std::vector<bool>(n + m, true));

  double infeasibility = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] >= n) infeasibility += std::abs(t.rhs(i));
  if (infeasibility > 1e-9 * (1.0 + norm1(p.b))) return std::nullopt;

  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(t.at(i, j)) > kPivotTol) {
        t.pivot(i, j);
        basis[i] = j;
        break;
      }
    }
  }

  Vector phase2(n + m, 0.0);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = 1.0;
  std::vector<bool> allowed(n + m, false);
  for (std::size_t j = 0; j < n; ++j) allowed[j] = true;
  run_simplex(t, basis, phase2, allowed);

  Vector x(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) x[basis[i]] = std::max(t.rhs(i), 0.0);
  if (norm2(subtract(matvec(p.a, x), p.b)) > 1e-8 * (1.0 + norm2(p.b))) {
    throw Error(ErrorKind::NonConvergence, "min_l1_by_simplex: basic solution lost feasibility");
  }
  return x;
}

Vector min_l1_nonnegative(const ProblemInstance& p) {
  auto x = p.cols() <= kEnumerationLimit ? min_l1_by_enumeration(p) : min_l1_by_simplex(p);
  if (!x) throw Error(ErrorKind::Infeasible, "min_l1_nonnegative: no nonnegative solution");
  return std::move(*x);
}

}  // namespace emd
