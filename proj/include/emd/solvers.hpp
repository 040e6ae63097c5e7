#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "emd/linalg.hpp"

namespace emd {

/// Nonnegative linear system A x = b, x ≥ 0, with objective f(x) = ½‖Ax − b‖².
struct ProblemInstance {
  DenseMatrix a;
  Vector b;
  std::optional<Vector> planted;  // a known member of the solution set, when available

  std::size_t rows() const noexcept { return a.rows(); }
  std::size_t cols() const noexcept { return a.cols(); }

  /// Checks dimensions, finiteness, and that `planted` (if any) is a
  /// nonnegative solution to within 1e-10·(1 + ‖b‖₂).
  void validate() const;
};

/// Returns ‖Az − b‖₂ ≤ 1e-10·(1 + ‖b‖₂) and z ≥ 0.
bool is_feasible(const ProblemInstance& p, ConstSpan z);

namespace method {
struct MdPolyak {};
struct HdPlusPolyak {};
/// Squared-Hadamard gradient descent with the Polyak stepsize. No convergence
/// guarantee; results are flagged heuristic.
struct HdPolyak {};
/// Exponentiated gradient ± for signed systems; x = u − v.
struct EgPm {};
struct MdConstant {
  double alpha;
};
struct MdBacktracking {
  double alpha0;
  double shrink = 0.5;
};
}  // namespace method

using Method = std::variant<method::MdPolyak, method::HdPlusPolyak, method::HdPolyak, method::EgPm,
                            method::MdConstant, method::MdBacktracking>;

std::string method_label(const Method& m);

/// Parses md-polyak, hd-plus-polyak, hd-polyak, eg-pm, md-const:<alpha>,
/// md-backtracking[:<alpha0>[:<shrink>]]. A backtracking method without alpha0
/// gets alpha0 = 0, meaning "use default_backtracking_alpha0 at solve time".
Method parse_method(std::string_view text);

/// 1.79 / ‖∇f(x0)‖∞, the default first trial of the backtracking search.
double default_backtracking_alpha0(const ProblemInstance& p, ConstSpan x0);

enum class SolveStatus { Converged, MaxIters, NumericalBreakdown };
std::string_view to_string(SolveStatus status);

struct SolveConfig {
  Method method = method::MdPolyak{};
  Vector x0;  // strictly positive; for EgPm this is u0
  Vector v0;  // EgPm only, strictly positive
  int max_iters = 1000;
  double f_tol = 1e-20;
  /// When set, every trace record carries D_h(reference, x_k). For EgPm the
  /// reference lives in the lifted space (u, v) of length 2n.
  std::optional<Vector> trace_reference;
  /// Check the per-step descent certificate for MdPolyak / HdPlusPolyak
  /// whenever the reference is a nonnegative solution.
  bool certify_descent = true;
  /// Keep every iterate (lifted (u, v) for EgPm) in SolveResult::iterates.
  bool record_iterates = false;
};

struct TraceRecord {
  int iter = 0;
  double f_value = 0.0;
  double stepsize = 0.0;  // step taken from this iterate; 0 on the last record
  double l1_norm = 0.0;   // ‖u + v‖₁ for EgPm
  std::optional<double> d_h_to_ref;
};
using Trace = std::vector<TraceRecord>;

struct SolveResult {
  Vector x_final;
  Vector lifted_final;  // (u, v) for EgPm, empty otherwise
  SolveStatus status = SolveStatus::MaxIters;
  int iters_run = 0;  // number of updates performed
  Trace trace;        // iters_run + 1 records, one per visited iterate
  std::vector<Vector> iterates;
  bool heuristic = false;
  std::string breakdown_reason;
};

/// Convex objective on ℝⁿ₊ with known optimal value.
struct ConvexObjective {
  std::function<double(ConstSpan)> value;
  std::function<Vector(ConstSpan)> gradient;
  double f_star = 0.0;
  std::optional<double> l_smooth;
};

double objective(const ProblemInstance& p, ConstSpan x);
Vector gradient(const ProblemInstance& p, ConstSpan x);

/// min{ f_gap / (c·‖g‖²_x), 1.79/‖g‖∞ } with c = 1, or c = 2 in convex mode.
/// Exact-zero entries of x (underflowed coordinates) are permitted.
double polyak_stepsize(ConstSpan x, ConstSpan g, double f_gap, bool convex_mode);

Vector md_step(ConstSpan x, ConstSpan g, double alpha);
Vector hd_plus_step(ConstSpan x, ConstSpan g, double alpha);
/// x ∘ (1 − αg)²; alpha here is the composite 2α of the squared parametrization.
Vector hd_step(ConstSpan x, ConstSpan g, double alpha);
std::pair<Vector, Vector> egpm_step(ConstSpan u, ConstSpan v, ConstSpan g, double alpha);

/// Largest α₀·shrinkʲ (j ≤ 200) with α·D_f(x, x⁺) < D_h(x, x⁺), x⁺ = md_step(x, g, α).
double backtracking_stepsize(const ProblemInstance& p, ConstSpan x, ConstSpan g, double alpha0,
                             double shrink);

SolveResult solve(const ProblemInstance& p, const SolveConfig& cfg);

/// Mirror descent (or HD+) on a general convex objective with the halved
/// Polyak stepsize. Trace f_value holds the gap value(x) − f_star.
SolveResult solve_convex(const ConvexObjective& obj, const SolveConfig& cfg);

/// e^{−η}·𝟙.
Vector exp_init(std::size_t n, double eta);

}  // namespace emd
