#include "emd/solvers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "emd/bregman.hpp"
#include "emd/error.hpp"

namespace emd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kCapSlack = 1e-12;
constexpr double kDescentSlack = 1e-9;

double parse_double(std::string_view s, std::string_view what) {
  double value = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(ErrorKind::Parse, "cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return value;
}

void require_positive(ConstSpan x, const char* what) {
  for (double v : x)
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be strictly positive and finite");
    }
}

void require_nonnegative(ConstSpan x, const char* what) {
  for (double v : x)
    if (!(v >= 0.0)) throw Error(ErrorKind::Domain, std::string(what) + " has a negative entry");
}

Vector residual(const ProblemInstance& p, ConstSpan x) {
  Vector r = matvec(p.a, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= p.b[i];
  return r;
}

// A·u − A·v accumulated as the single row sum of (A, −A)·(u, v).
Vector lifted_residual(const ProblemInstance& p, ConstSpan u, ConstSpan v) {
  const std::size_t n = p.cols();
  Vector r(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += p.a(i, j) * u[j];
    for (std::size_t j = 0; j < n; ++j) s += -p.a(i, j) * v[j];
    r[i] = s - p.b[i];
  }
  return r;
}

double half_sq(ConstSpan r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return 0.5 * s;
}

Vector concat(ConstSpan u, ConstSpan v) {
  Vector w(u.begin(), u.end());
  w.insert(w.end(), v.begin(), v.end());
  return w;
}

Vector sum_parts(ConstSpan u, ConstSpan v) {
  Vector s(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) s[i] = u[i] + v[i];
  return s;
}

void validate_method(const Method& m) {
  std::visit(overloaded{
                 [](const method::MdConstant& c) {
                   if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) {
                     throw Error(ErrorKind::InvalidArgument, "constant stepsize must be positive and finite");
                   }
                 },
                 [](const method::MdBacktracking& b) {
                   if (!(b.alpha0 >= 0.0) || !std::isfinite(b.alpha0)) {
                     throw Error(ErrorKind::InvalidArgument, "backtracking alpha0 must be positive");
                   }
                   if (!(b.shrink > 0.0 && b.shrink < 1.0)) {
                     throw Error(ErrorKind::InvalidArgument, "backtracking shrink must lie in (0, 1)");
                   }
                 },
                 [](const auto&) {},
             },
             m);
}

bool certifiable(const Method& m) {
  return std::holds_alternative<method::MdPolyak>(m) || std::holds_alternative<method::HdPlusPolyak>(m);
}

std::optional<double> divergence_or_none(ConstSpan ref, ConstSpan x) {
  try {
    return bregman_divergence(ref, x);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InfiniteDivergence) return std::nullopt;
    throw;
  }
}

}  // namespace

void ProblemInstance::validate() const {
  if (a.rows() == 0 || a.cols() == 0) throw Error(ErrorKind::InvalidArgument, "empty matrix");
  if (b.size() != a.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "b has length " + std::to_string(b.size()) + ", expected " +
                                                  std::to_string(a.rows()));
  }
  if (!all_finite(a.entries()) || !all_finite(b)) throw Error(ErrorKind::NonFinite, "instance has non-finite data");
  if (planted) {
    if (planted->size() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "planted solution length");
    if (!is_feasible(*this, *planted)) {
      throw Error(ErrorKind::Infeasible, "planted vector is not a nonnegative solution of Ax = b");
    }
  }
}

bool is_feasible(const ProblemInstance& p, ConstSpan z) {
  if (z.size() != p.cols()) return false;
  for (double v : z)
    if (!(v >= 0.0)) return false;
  return norm2(residual(p, z)) <= 1e-10 * (1.0 + norm2(p.b));
}

std::string method_label(const Method& m) {
  return std::visit(overloaded{
                        [](const method::MdPolyak&) -> std::string { return "md-polyak"; },
                        [](const method::HdPlusPolyak&) -> std::string { return "hd-plus-polyak"; },
                        [](const method::HdPolyak&) -> std::string { return "hd-polyak"; },
                        [](const method::EgPm&) -> std::string { return "eg-pm"; },
                        [](const method::MdConstant&) -> std::string { return "md-const"; },
                        [](const method::MdBacktracking&) -> std::string { return "md-backtracking"; },
                    },
                    m);
}

Method parse_method(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (head == "md-polyak" && rest.empty()) return method::MdPolyak{};
  if (head == "hd-plus-polyak" && rest.empty()) return method::HdPlusPolyak{};
  if (head == "hd-polyak" && rest.empty()) return method::HdPolyak{};
  if (head == "eg-pm" && rest.empty()) return method::EgPm{};
  if (head == "md-const") {
    if (rest.empty()) throw Error(ErrorKind::Parse, "md-const needs a stepsize, e.g. md-const:0.1");
    Method m = method::MdConstant{parse_double(rest, "constant stepsize")};
    validate_method(m);
    return m;
  }
  if (head == "md-backtracking") {
    method::MdBacktracking bt{0.0, 0.5};
    if (!rest.empty()) {
      const auto c2 = rest.find(':');
      bt.alpha0 = parse_double(rest.substr(0, c2), "backtracking alpha0");
      if (c2 != std::string_view::npos) bt.shrink = parse_double(rest.substr(c2 + 1), "backtracking shrink");
    }
    Method m = bt;
    validate_method(m);
    return m;
  }
  throw Error(ErrorKind::Parse, "unknown method '" + std::string(text) + "'");
}

double default_backtracking_alpha0(const ProblemInstance& p, ConstSpan x0) {
  const double ginf = norm_inf(gradient(p, x0));
  return ginf > 0.0 ? kExpQuadBound / ginf : 1.0;
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::NumericalBreakdown: return "NumericalBreakdown";
  }
  return "Unknown";
}

double objective(const ProblemInstance& p, ConstSpan x) { return half_sq(residual(p, x)); }

Vector gradient(const ProblemInstance& p, ConstSpan x) { return matvec_transpose(p.a, residual(p, x)); }

double polyak_stepsize(ConstSpan x, ConstSpan g, double f_gap, bool convex_mode) {
  if (x.size() != g.size()) throw Error(ErrorKind::DimensionMismatch, "polyak_stepsize: lengths");
  require_nonnegative(x, "polyak_stepsize: iterate");
  if (!(f_gap > 0.0)) return 0.0;
  const double ginf = norm_inf(g);
  if (ginf == 0.0) return 0.0;
  const double cap = kExpQuadBound / ginf;
  const double wn = weighted_norm_sq(x, g);
  if (wn == 0.0) return cap;
  const double c = convex_mode ? 2.0 : 1.0;
  return std::min(f_gap / (c * wn), cap);
}

Vector md_step(ConstSpan x, ConstSpan g, double alpha) {
  if (x.size() != g.size()) throw Error(ErrorKind::DimensionMismatch, "md_step: lengths");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] == 0.0 ? 0.0 : x[i] * std::exp(-alpha * g[i]);
    if (!std::isfinite(out[i])) throw Error(ErrorKind::NonFinite, "md_step overflowed");
  }
  return out;
}

Vector hd_plus_step(ConstSpan x, ConstSpan g, double alpha) {
  if (x.size() != g.size()) throw Error(ErrorKind::DimensionMismatch, "hd_plus_step: lengths");
  if (alpha * norm_inf(g) > kExpQuadBound * (1.0 + kCapSlack)) {
    throw Error(ErrorKind::InvalidArgument, "hd_plus_step: alpha·‖g‖∞ exceeds 1.79");
  }
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = alpha * g[i];
    out[i] = x[i] * (1.0 - t + t * t);
    if (!std::isfinite(out[i])) throw Error(ErrorKind::NonFinite, "hd_plus_step overflowed");
  }
  return out;
}

Vector hd_step(ConstSpan x, ConstSpan g, double alpha) {
  if (x.size() != g.size()) throw Error(ErrorKind::DimensionMismatch, "hd_step: lengths");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = 1.0 - alpha * g[i];
    out[i] = x[i] * (m * m);
    if (!std::isfinite(out[i])) throw Error(ErrorKind::NonFinite, "hd_step overflowed");
  }
  return out;
}

std::pair<Vector, Vector> egpm_step(ConstSpan u, ConstSpan v, ConstSpan g, double alpha) {
  if (u.size() != v.size()) throw Error(ErrorKind::DimensionMismatch, "egpm_step: u and v lengths");
  Vector neg(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -g[i];
  return {md_step(u, g, alpha), md_step(v, neg, alpha)};
}

double backtracking_stepsize(const ProblemInstance& p, ConstSpan x, ConstSpan g, double alpha0,
                             double shrink) {
  if (!(alpha0 > 0.0) || !(shrink > 0.0 && shrink < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "backtracking_stepsize: alpha0 > 0 and shrink in (0,1) required");
  }
  require_nonnegative(x, "backtracking_stepsize: iterate");
  constexpr int kMaxHalvings = 200;
  double alpha = alpha0;
  for (int j = 0; j <= kMaxHalvings; ++j, alpha *= shrink) {
    Vector next;
    try {
      next = md_step(x, g, alpha);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonFinite) continue;
      throw;
    }
    // D_h(x, x⁺) for the multiplicative step has the closed form Σ xᵢ(αgᵢ − 1 + e^{−αgᵢ}).
    double dh = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = alpha * g[i];
      dh += x[i] * (t + std::expm1(-t));
    }
    const double df = half_sq(matvec(p.a, subtract(x, next)));
    if (dh == 0.0 && df == 0.0) return alpha;
    if (alpha * df < dh) return alpha;
  }
  throw Error(ErrorKind::BudgetExhausted, "backtracking found no admissible stepsize in 200 reductions");
}

Vector exp_init(std::size_t n, double eta) { return Vector(n, std::exp(-eta)); }

SolveResult solve(const ProblemInstance& p, const SolveConfig& cfg) {
  p.validate();
  validate_method(cfg.method);
  if (cfg.max_iters < 1) throw Error(ErrorKind::InvalidArgument, "max_iters must be >= 1");
  if (!(cfg.f_tol >= 0.0)) throw Error(ErrorKind::InvalidArgument, "f_tol must be nonnegative");
  const std::size_t n = p.cols();
  const bool signed_system = std::holds_alternative<method::EgPm>(cfg.method);
  if (cfg.x0.size() != n) throw Error(ErrorKind::DimensionMismatch, "x0 length must equal the column count");
  require_positive(cfg.x0, "x0");
  if (signed_system) {
    if (cfg.v0.size() != n) throw Error(ErrorKind::DimensionMismatch, "EG± needs v0 of length n");
    require_positive(cfg.v0, "v0");
  }
  const std::size_t state_dim = signed_system ? 2 * n : n;
  if (cfg.trace_reference && cfg.trace_reference->size() != state_dim) {
    throw Error(ErrorKind::DimensionMismatch, "trace_reference has the wrong length");
  }

  Method method = cfg.method;
  if (auto* bt = std::get_if<method::MdBacktracking>(&method); bt && bt->alpha0 == 0.0) {
    bt->alpha0 = default_backtracking_alpha0(p, cfg.x0);
  }

  bool certify = false;
  if (cfg.certify_descent && cfg.trace_reference && certifiable(method)) {
    certify = is_feasible(p, *cfg.trace_reference);
  }

  SolveResult result;
  result.heuristic = std::holds_alternative<method::HdPolyak>(method);

  // State: x for nonnegative methods, (u, v) for EG±.
  Vector x = cfg.x0;
  Vector u = cfg.x0;
  Vector v = cfg.v0;

  auto current_point = [&]() -> Vector { return signed_system ? subtract(u, v) : x; };
  auto lifted_state = [&]() -> Vector { return signed_system ? concat(u, v) : x; };

  auto breakdown = [&](std::string reason) {
    result.status = SolveStatus::NumericalBreakdown;
    result.breakdown_reason = std::move(reason);
  };

  double prev_dh = 0.0;
  double prev_alpha = 0.0;
  double prev_f = 0.0;
  bool prev_dh_known = false;

  for (int k = 0;; ++k) {
    const Vector r = signed_system ? lifted_residual(p, u, v) : residual(p, x);
    const double f = half_sq(r);
    if (!std::isfinite(f)) {
      breakdown("objective became non-finite");
      break;
    }

    TraceRecord rec;
    rec.iter = k;
    rec.f_value = f;
    rec.l1_norm = signed_system ? sum(sum_parts(u, v)) : sum(x);
    if (cfg.trace_reference) rec.d_h_to_ref = divergence_or_none(*cfg.trace_reference, lifted_state());

    if (certify && k > 0) {
      if (!rec.d_h_to_ref) {
        result.trace.push_back(rec);
        breakdown("divergence to the reference became infinite");
        break;
      }
      const double bound = prev_dh - prev_alpha * prev_f + kDescentSlack * (1.0 + prev_dh);
      if (prev_dh_known && *rec.d_h_to_ref > bound) {
        result.trace.push_back(rec);
        breakdown("descent certificate violated at iteration " + std::to_string(k));
        break;
      }
    }
    result.trace.push_back(rec);
    if (cfg.record_iterates) result.iterates.push_back(lifted_state());

    if (f <= cfg.f_tol) {
      result.status = SolveStatus::Converged;
      break;
    }
    if (k == cfg.max_iters) {
      result.status = SolveStatus::MaxIters;
      break;
    }

    const Vector g = matvec_transpose(p.a, r);
    double alpha = 0.0;
    try {
      std::visit(overloaded{
                     [&](const method::MdPolyak&) {
                       alpha = polyak_stepsize(x, g, f, false);
                       x = md_step(x, g, alpha);
                     },
                     [&](const method::HdPlusPolyak&) {
                       alpha = polyak_stepsize(x, g, f, false);
                       x = hd_plus_step(x, g, alpha);
                     },
                     [&](const method::HdPolyak&) {
                       alpha = polyak_stepsize(x, g, f, false);
                       x = hd_step(x, g, 0.5 * alpha);
                     },
                     [&](const method::EgPm&) {
                       alpha = polyak_stepsize(concat(u, v), concat(g, scaled(-1.0, g)), f, false);
                       std::tie(u, v) = egpm_step(u, v, g, alpha);
                     },
                     [&](const method::MdConstant& c) {
                       alpha = c.alpha;
                       x = md_step(x, g, alpha);
                     },
                     [&](const method::MdBacktracking& bt) {
                       alpha = backtracking_stepsize(p, x, g, bt.alpha0, bt.shrink);
                       x = md_step(x, g, alpha);
                     },
                 },
                 method);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonFinite && e.kind() != ErrorKind::BudgetExhausted) throw;
      result.trace.back().stepsize = alpha;
      breakdown(e.what());
      break;
    }
    result.trace.back().stepsize = alpha;
    prev_alpha = alpha;
    prev_f = f;
    prev_dh_known = rec.d_h_to_ref.has_value();
    prev_dh = rec.d_h_to_ref.value_or(0.0);
    result.iters_run = k + 1;
  }

  result.x_final = current_point();
  if (signed_system) result.lifted_final = concat(u, v);
  return result;
}

SolveResult solve_convex(const ConvexObjective& obj, const SolveConfig& cfg) {
  if (!obj.value || !obj.gradient) throw Error(ErrorKind::InvalidArgument, "objective callbacks missing");
  if (!std::isfinite(obj.f_star)) throw Error(ErrorKind::InvalidArgument, "f_star must be finite");
  validate_method(cfg.method);
  const bool hd_plus = std::holds_alternative<method::HdPlusPolyak>(cfg.method);
  if (!hd_plus && !std::holds_alternative<method::MdPolyak>(cfg.method)) {
    throw Error(ErrorKind::InvalidArgument, "solve_convex supports md-polyak and hd-plus-polyak only");
  }
  if (cfg.max_iters < 1) throw Error(ErrorKind::InvalidArgument, "max_iters must be >= 1");
  require_positive(cfg.x0, "x0");
  if (cfg.trace_reference && cfg.trace_reference->size() != cfg.x0.size()) {
    throw Error(ErrorKind::DimensionMismatch, "trace_reference has the wrong length");
  }

  SolveResult result;
  Vector x = cfg.x0;
  double prev_dh = 0.0;
  double prev_alpha = 0.0;
  double prev_gap = 0.0;
  bool prev_dh_known = false;

  for (int k = 0;; ++k) {
    const double value = obj.value(x);
    if (!std::isfinite(value)) {
      result.status = SolveStatus::NumericalBreakdown;
      result.breakdown_reason = "objective became non-finite";
      break;
    }
    if (value < obj.f_star - 1e-9) {
      throw Error(ErrorKind::InvalidArgument, "objective fell below f_star; f_star is wrong");
    }
    const double gap = std::max(0.0, value - obj.f_star);

    TraceRecord rec;
    rec.iter = k;
    rec.f_value = gap;
    rec.l1_norm = sum(x);
    if (cfg.trace_reference) rec.d_h_to_ref = divergence_or_none(*cfg.trace_reference, x);
    // Convexity replaces the quadratic identity, so the certified decrease is halved.
    if (cfg.certify_descent && k > 0 && prev_dh_known && rec.d_h_to_ref &&
        *rec.d_h_to_ref > prev_dh - 0.5 * prev_alpha * prev_gap + kDescentSlack * (1.0 + prev_dh)) {
      result.trace.push_back(rec);
      result.status = SolveStatus::NumericalBreakdown;
      result.breakdown_reason = "descent certificate violated at iteration " + std::to_string(k);
      break;
    }
    result.trace.push_back(rec);
    if (cfg.record_iterates) result.iterates.push_back(x);

    if (gap <= cfg.f_tol) {
      result.status = SolveStatus::Converged;
      break;
    }
    if (k == cfg.max_iters) {
      result.status = SolveStatus::MaxIters;
      break;
    }
    const Vector g = obj.gradient(x);
    if (g.size() != x.size()) throw Error(ErrorKind::DimensionMismatch, "gradient length");
    const double alpha = polyak_stepsize(x, g, gap, true);
    try {
      x = hd_plus ? hd_plus_step(x, g, alpha) : md_step(x, g, alpha);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonFinite) throw;
      result.status = SolveStatus::NumericalBreakdown;
      result.breakdown_reason = e.what();
      break;
    }
    result.trace.back().stepsize = alpha;
    prev_alpha = alpha;
    prev_gap = gap;
    prev_dh_known = rec.d_h_to_ref.has_value();
    prev_dh = rec.d_h_to_ref.value_or(0.0);
    result.iters_run = k + 1;
  }
  result.x_final = x;
  return result;
}

}  // namespace emd
