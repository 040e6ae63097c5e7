#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "emd/linalg.hpp"
#include "emd/solvers.hpp"

namespace emd {

// ---------------------------------------------------------------------------
// Implicit bias
// ---------------------------------------------------------------------------

/// Limit of MD-Polyak started at x0, i.e. the Bregman projection of x0 onto the
/// nonnegative solution set. Runs until f ≤ f_tol; throws BudgetExhausted if
/// max_iters is reached first (which is also how an empty solution set shows up).
Vector bregman_projection(const ProblemInstance& p, ConstSpan x0, double f_tol = 1e-24,
                          int max_iters = 200000);

struct OrthogonalityCheck {
  double residual = 0.0;
  bool kernel_trivial = false;
  int directions = 0;
};

/// Worst-case |cos| between ∇h(x*) − ∇h(x0) and feasible displacements
/// z − x* along random kernel directions supported on supp(x*).
OrthogonalityCheck orthogonality_residual(const ProblemInstance& p, ConstSpan x0, ConstSpan x_star,
                                          int samples, RngState& rng);

/// |LHS − RHS| of the exact ℓ1-gap identity for x0 = e^{−η}𝟙.
double l1_gap_identity_residual(ConstSpan x_star, ConstSpan z, double eta);

double slow_bound(std::size_t n, double z_l1, double eta);
double improved_bound(std::size_t n, double x_l1, double eta, double z_l1);
/// The worst-case lower bound ‖z‖₁·W₀((n−1)/e) / (η + log(‖x‖₁/n) + 1).
double near_sharp_lower_bound(std::size_t n, double x_l1, double eta, double z_l1);

struct WorstCaseInstance {
  ProblemInstance instance;  // planted = z
  Vector x_star;
  Vector z;
  double lambda = 0.0;
  double t_star = 0.0;
  double expected_gap = 0.0;  // ‖x*‖₁ − ‖z‖₁ = 1 − λ
};

/// (n−1)×n system whose solution set is the line through z = λe₁ and
/// x* = (t*, (1−t*)/(n−1), …), with x* the projection of e^{−η}𝟙.
WorstCaseInstance worst_case_construction(std::size_t n, double eta);

struct BiasReport {
  double eta = 0.0;
  Vector limit;
  double orthogonality_residual = 0.0;
  bool kernel_trivial = false;
  double limit_l1 = 0.0;
  double z_l1 = 0.0;
  double exact_gap = 0.0;
  std::optional<double> slow_bound;
  std::optional<double> improved_bound;
  std::optional<double> identity_residual;
};

/// Projects e^{−η}𝟙, checks orthogonality, and evaluates the ℓ1-gap bounds
/// against `l1_minimal` (computed with min_l1_nonnegative when absent).
BiasReport bias_report(const ProblemInstance& p, double eta, int samples, RngState& rng,
                       std::optional<Vector> l1_minimal = std::nullopt);

// ---------------------------------------------------------------------------
// Nonnegative basis pursuit oracle: min ‖x‖₁ s.t. Ax = b, x ≥ 0
// ---------------------------------------------------------------------------

/// Exhaustive search over basic solutions; n ≤ 12.
std::optional<Vector> min_l1_by_enumeration(const ProblemInstance& p);
/// Two-phase dense simplex with Bland's rule.
std::optional<Vector> min_l1_by_simplex(const ProblemInstance& p);
/// Enumeration for n ≤ 12, simplex otherwise; throws Infeasible if none.
Vector min_l1_nonnegative(const ProblemInstance& p);

// ---------------------------------------------------------------------------
// Rates
// ---------------------------------------------------------------------------

struct RateCertificate {
  double lambda_min_plus = 0.0;
  double z_min = 0.0;
  double max_col_sq = 0.0;
  double z_l1 = 0.0;
  double local_factor = 0.0;

  /// Contraction bound on D_h(z, x_{k+1}) / D_h(z, x_k) given d = D_h(z, x_k).
  double global_factor(double d) const;
};

RateCertificate rate_certificate(const ProblemInstance& p, ConstSpan z);

/// (k, 4R(R + ‖x*‖₁)·max_col_sq / (k+1)) for every record of the trace, R = D_h(x*, x0).
std::vector<std::pair<int, double>> sublinear_bound_curve(const Trace& trace, ConstSpan x_star,
                                                          ConstSpan x0, double max_col_sq);

/// Smallest stepsize the Polyak rule can produce along an MD run towards z:
/// 1 / (4(D_h(z, x0) + ‖z‖₁)·max_col_sq).
double polyak_stepsize_floor(const ProblemInstance& p, ConstSpan z, ConstSpan x0);

// ---------------------------------------------------------------------------
// Instability of constant stepsizes
// ---------------------------------------------------------------------------

struct InstabilityInstance {
  ProblemInstance base;
  double alpha = 0.0;
  double lambda_max = 0.0;  // λ_max(diag(x*)AᵀA) on the base instance
  double t_scale = 0.0;
  ProblemInstance scaled;  // b̃ = t·b, planted = t·x*
  double jacobian_spectrum_bound = 0.0;  // spectral radius of I − α·diag(t·x*)AᵀA
};

/// Rescales b so that the planted solution becomes an unstable fixed point of
/// MD with constant stepsize alpha.
InstabilityInstance instability_construction(const ProblemInstance& p, double alpha);

struct InstabilityRun {
  double max_distance = 0.0;  // max_k ‖x_k − x̃*‖₂
  double solution_norm = 0.0;
  int iters = 0;
  SolveStatus status = SolveStatus::MaxIters;
};

/// Constant-α MD on the scaled instance from (1 + perturbation)·x̃*.
InstabilityRun run_perturbed_constant_md(const InstabilityInstance& inst, int iters,
                                         double perturbation = 1e-6);

}  // namespace emd
