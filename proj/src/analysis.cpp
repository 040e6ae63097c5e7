#include "emd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "emd/bregman.hpp"
#include "emd/error.hpp"

namespace emd {

Vector bregman_projection(const ProblemInstance& p, ConstSpan x0, double f_tol, int max_iters) {
  SolveConfig cfg;
  cfg.method = method::MdPolyak{};
  cfg.x0.assign(x0.begin(), x0.end());
  cfg.f_tol = f_tol;
  cfg.max_iters = max_iters;
  SolveResult res = solve(p, cfg);
  if (res.status == SolveStatus::Converged) return res.x_final;
  if (res.status == SolveStatus::NumericalBreakdown) {
    throw Error(ErrorKind::NonFinite, "bregman_projection: " + res.breakdown_reason);
  }
  throw Error(ErrorKind::BudgetExhausted, fmt::format("bregman_projection: f = {:.3g} after {} iterations",
                                                     res.trace.back().f_value, max_iters));
}

OrthogonalityCheck orthogonality_residual(const ProblemInstance& p, ConstSpan x0, ConstSpan x_star,
                                          int samples, RngState& rng) {
  if (samples < 1) throw Error(ErrorKind::InvalidArgument, "orthogonality_residual: samples must be >= 1");
  if (x0.size() != p.cols() || x_star.size() != p.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "orthogonality_residual: vector lengths");
  }
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < x_star.size(); ++i) {
    if (x_star[i] < 0.0) throw Error(ErrorKind::Domain, "orthogonality_residual: x_star is negative");
    if (x_star[i] > 0.0) support.push_back(i);
  }
  OrthogonalityCheck out;
  if (support.empty()) {
    out.kernel_trivial = true;
    return out;
  }

  // Kernel directions of A restricted to supp(x*), so z = x* + εv stays feasible.
  const std::size_t k = support.size();
  DenseMatrix a_s(p.rows(), k);
  Vector dlog(k);
  double min_pos = x_star[support[0]];
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t j = support[c];
    for (std::size_t i = 0; i < p.rows(); ++i) a_s(i, c) = p.a(i, j);
    dlog[c] = std::log(x_star[j]) - std::log(x0[j]);
    min_pos = std::min(min_pos, x_star[j]);
  }
  const DenseMatrix rows = row_space_basis(a_s);
  if (rows.rows() >= k) {
    out.kernel_trivial = true;
    return out;
  }
  const double dnorm = norm2(dlog);

  for (int s = 0; s < samples; ++s) {
    Vector draw(k);
    for (double& v : draw) v = rng.normal();
    Vector dir = project_out(rows, draw);
    const double vn = norm2(dir);
    if (vn <= 1e-12 * norm2(draw)) continue;
    for (double& v : dir) v /= vn;

    double eps = 0.1 * min_pos;
    auto feasible = [&]() {
      for (std::size_t c = 0; c < k; ++c)
        if (x_star[support[c]] + eps * dir[c] < 0.0) return false;
      return true;
    };
    int halvings = 0;
    while (!feasible() && halvings < 64) {
      eps *= 0.5;
      ++halvings;
    }
    if (!feasible()) continue;

    Vector delta = scaled(eps, dir);
    const double denom = dnorm * norm2(delta);
    const double value = denom > 0.0 ? std::abs(dot(dlog, delta)) / denom : 0.0;
    out.residual = std::max(out.residual, value);
    ++out.directions;
  }
  return out;
}

double l1_gap_identity_residual(ConstSpan x_star, ConstSpan z, double eta) {
  if (x_star.size() != z.size()) throw Error(ErrorKind::DimensionMismatch, "l1_gap_identity_residual: lengths");
  const std::size_t n = x_star.size();
  for (std::size_t i = 0; i < n; ++i)
    if (x_star[i] < 0.0 || z[i] < 0.0) throw Error(ErrorKind::Domain, "l1_gap_identity_residual: negative entry");
  const double x_l1 = sum(x_star);
  const double z_l1 = sum(z);
  if (!(x_l1 > static_cast<double>(n) * std::exp(-eta))) {
    throw Error(ErrorKind::Domain, "l1_gap_identity_residual: needs ‖x*‖₁ > ‖x0‖₁");
  }
  double log_x_dot_z = 0.0;
  double log_x_dot_x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xt = x_star[i] / x_l1;
    if (xt > 0.0) {
      const double lx = std::log(xt);
      log_x_dot_x += lx * xt;
      if (z_l1 > 0.0) log_x_dot_z += lx * (z[i] / z_l1);
    } else if (z[i] > 0.0) {
      throw Error(ErrorKind::Domain, "l1_gap_identity_residual: z is supported where x* vanishes");
    }
  }
  const double denom = eta + std::log(x_l1) + log_x_dot_x;
  if (std::abs(denom) <= 1e-12) throw Error(ErrorKind::Domain, "l1_gap_identity_residual: zero denominator");
  const double rhs = z_l1 > 0.0 ? z_l1 * (log_x_dot_z - log_x_dot_x) / denom : 0.0;
  return std::abs((x_l1 - z_l1) - rhs);
}

double slow_bound(std::size_t n, double z_l1, double eta) {
  if (n == 0 || !(z_l1 > 0.0)) throw Error(ErrorKind::Domain, "slow_bound: n >= 1 and z_l1 > 0 required");
  const double denom = eta + std::log(z_l1 / static_cast<double>(n));
  if (!(denom > 0.0)) throw Error(ErrorKind::Domain, "slow_bound: needs ‖x0‖₁ < ‖z‖₁");
  return z_l1 * std::log(static_cast<double>(n)) / denom;
}

namespace {

double lambert_of_dimension(std::size_t n) {
  return lambert_w((static_cast<double>(n) - 1.0) / std::exp(1.0), WBranch::Principal);
}

}  // namespace

double improved_bound(std::size_t n, double x_l1, double eta, double z_l1) {
  if (n == 0 || !(x_l1 > 0.0)) throw Error(ErrorKind::Domain, "improved_bound: n >= 1 and x_l1 > 0 required");
  const double denom = eta + std::log(x_l1 / static_cast<double>(n));
  if (!(denom > 0.0)) throw Error(ErrorKind::Domain, "improved_bound: needs ‖x‖₁ > ‖x0‖₁");
  return z_l1 * lambert_of_dimension(n) / denom;
}

double near_sharp_lower_bound(std::size_t n, double x_l1, double eta, double z_l1) {
  if (n == 0 || !(x_l1 > 0.0)) throw Error(ErrorKind::Domain, "near_sharp_lower_bound: bad arguments");
  const double denom = eta + std::log(x_l1 / static_cast<double>(n)) + 1.0;
  if (!(denom > 0.0)) throw Error(ErrorKind::Domain, "near_sharp_lower_bound: nonpositive denominator");
  return z_l1 * lambert_of_dimension(n) / denom;
}

WorstCaseInstance worst_case_construction(std::size_t n, double eta) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "worst_case_construction: n must be >= 2");
  WorstCaseInstance out;
  const double w = lambert_of_dimension(n);
  out.t_star = 1.0 / (1.0 + w);
  out.x_star.assign(n, (1.0 - out.t_star) / static_cast<double>(n - 1));
  out.x_star[0] = out.t_star;

  double xlogx = 0.0;
  for (double v : out.x_star) xlogx += v * std::log(v);
  out.lambda = (eta + xlogx) / (eta + std::log(out.t_star));
  if (!(out.lambda > 0.0 && out.lambda < 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "worst_case_construction: eta too small (lambda = " + std::to_string(out.lambda) + ")");
  }
  out.z.assign(n, 0.0);
  out.z[0] = out.lambda;

  DenseMatrix dir(1, n);
  for (std::size_t j = 0; j < n; ++j) dir(0, j) = out.x_star[j] - out.z[j];
  DenseMatrix a = orthogonal_complement(dir, n);
  if (a.rows() != n - 1) throw Error(ErrorKind::NonConvergence, "worst_case_construction: complement rank");
  Vector b = matvec(a, out.z);

  // The line z + s(x* − z) must pass through x* and be orthogonal to ∇h(x*) − ∇h(x0).
  const Vector ax = matvec(a, out.x_star);
  if (norm2(subtract(ax, b)) > 1e-12 * (1.0 + norm2(b))) {
    throw Error(ErrorKind::Infeasible, "worst_case_construction: x* does not solve the system");
  }
  double orth = 0.0;
  for (std::size_t j = 0; j < n; ++j) orth += (std::log(out.x_star[j]) + eta) * (out.z[j] - out.x_star[j]);
  if (std::abs(orth) > 1e-10 * (1.0 + eta)) {
    throw Error(ErrorKind::Infeasible, "worst_case_construction: x* is not the projection");
  }

  out.instance = ProblemInstance{std::move(a), std::move(b), out.z};
  out.expected_gap = 1.0 - out.lambda;
  return out;
}

BiasReport bias_report(const ProblemInstance& p, double eta, int samples, RngState& rng,
                       std::optional<Vector> l1_minimal) {
  BiasReport rep;
  rep.eta = eta;
  const std::size_t n = p.cols();
  const Vector x0 = exp_init(n, eta);
  rep.limit = bregman_projection(p, x0);
  const OrthogonalityCheck orth = orthogonality_residual(p, x0, rep.limit, samples, rng);
  rep.orthogonality_residual = orth.residual;
  rep.kernel_trivial = orth.kernel_trivial;

  const Vector z = l1_minimal ? std::move(*l1_minimal) : min_l1_nonnegative(p);
  rep.limit_l1 = sum(rep.limit);
  rep.z_l1 = sum(z);
  rep.exact_gap = rep.limit_l1 - rep.z_l1;
  const double nd = static_cast<double>(n);
  if (rep.z_l1 > 0.0 && eta + std::log(rep.z_l1 / nd) > 0.0) rep.slow_bound = slow_bound(n, rep.z_l1, eta);
  if (eta + std::log(rep.limit_l1 / nd) > 0.0) {
    rep.improved_bound = improved_bound(n, rep.limit_l1, eta, rep.z_l1);
    rep.identity_residual = l1_gap_identity_residual(rep.limit, z, eta);
  }
  return rep;
}

double RateCertificate::global_factor(double d) const {
  if (!(d >= 0.0)) throw Error(ErrorKind::Domain, "global_factor: divergence must be nonnegative");
  return 1.0 - lambda_min_plus * ymin_lower_bound(z_min, d) / (8.0 * max_col_sq * (z_l1 + d));
}

RateCertificate rate_certificate(const ProblemInstance& p, ConstSpan z) {
  if (z.size() != p.cols()) throw Error(ErrorKind::DimensionMismatch, "rate_certificate: z length");
  RateCertificate c;
  c.z_min = min_entry(z);
  if (!(c.z_min > 0.0)) throw Error(ErrorKind::Domain, "rate_certificate: z must be strictly positive");
  if (!is_feasible(p, z)) throw Error(ErrorKind::Infeasible, "rate_certificate: z does not solve Ax = b");
  c.lambda_min_plus = smallest_positive_eigenvalue(gram(p.a));
  c.max_col_sq = max_col_norm_sq(p.a);
  c.z_l1 = sum(z);
  c.local_factor = 1.0 - c.lambda_min_plus * c.z_min / (8.0 * c.max_col_sq * c.z_l1);
  return c;
}

std::vector<std::pair<int, double>> sublinear_bound_curve(const Trace& trace, ConstSpan x_star,
                                                          ConstSpan x0, double max_col_sq) {
  double r = 0.0;
  try {
    r = bregman_divergence(x_star, x0);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InfiniteDivergence) {
      throw Error(ErrorKind::Domain, "sublinear_bound_curve: D_h(x*, x0) is infinite");
    }
    throw;
  }
  const double numerator = 4.0 * r * (r + norm1(x_star)) * max_col_sq;
  std::vector<std::pair<int, double>> curve;
  curve.reserve(trace.size());
  for (const TraceRecord& rec : trace) curve.emplace_back(rec.iter, numerator / (rec.iter + 1.0));
  return curve;
}

double polyak_stepsize_floor(const ProblemInstance& p, ConstSpan z, ConstSpan x0) {
  return 1.0 / (4.0 * (bregman_divergence(z, x0) + norm1(z)) * max_col_norm_sq(p.a));
}

InstabilityInstance instability_construction(const ProblemInstance& p, double alpha) {
  if (!p.planted) throw Error(ErrorKind::InvalidArgument, "instability_construction: instance needs a planted solution");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::InvalidArgument, "instability_construction: alpha must be positive");
  }
  p.validate();
  InstabilityInstance out;
  out.base = p;
  out.alpha = alpha;
  out.lambda_max = lambda_max_scaled_gram(p.a, *p.planted);
  if (!(out.lambda_max > 0.0)) {
    throw Error(ErrorKind::RankZero, "instability_construction: λ_max(diag(x*)AᵀA) is zero");
  }
  out.t_scale = 3.0 / (alpha * out.lambda_max);
  const Vector x_scaled = scaled(out.t_scale, *p.planted);
  out.scaled = ProblemInstance{p.a, scaled(out.t_scale, p.b), x_scaled};

  // Spectrum of I − α·diag(x̃)G via the similar symmetric matrix I − α·D^{1/2} G D^{1/2}.
  const DenseMatrix g = gram(p.a);
  const std::size_t n = p.cols();
  DenseMatrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      sym(i, j) = alpha * std::sqrt(x_scaled[i]) * g(i, j) * std::sqrt(x_scaled[j]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sym(j, i) = sym(i, j);
  const SymmetricEigen eig = symmetric_eigen(sym);
  double radius = 0.0;
  for (double mu : eig.values) radius = std::max(radius, std::abs(1.0 - mu));
  out.jacobian_spectrum_bound = radius;
  return out;
}

InstabilityRun run_perturbed_constant_md(const InstabilityInstance& inst, int iters, double perturbation) {
  if (iters < 1) throw Error(ErrorKind::InvalidArgument, "run_perturbed_constant_md: iters must be >= 1");
  const Vector& target = *inst.scaled.planted;
  InstabilityRun run;
  run.solution_norm = norm2(target);
  Vector x = scaled(1.0 + perturbation, target);
  run.max_distance = norm2(subtract(x, target));
  for (int k = 0; k < iters; ++k) {
    try {
      x = md_step(x, gradient(inst.scaled, x), inst.alpha);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonFinite) throw;
      run.status = SolveStatus::NumericalBreakdown;
      run.iters = k;
      return run;
    }
    run.max_distance = std::max(run.max_distance, norm2(subtract(x, target)));
    run.iters = k + 1;
  }
  return run;
}

}  // namespace emd
