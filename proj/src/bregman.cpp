#include "emd/bregman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "emd/error.hpp"

namespace emd {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_nonnegative(ConstSpan x, const char* where) {
  for (double v : x)
    if (!(v >= 0.0)) throw Error(ErrorKind::Domain, std::string(where) + ": negative or NaN entry");
}

// φ(r) = r log r − r + 1 for r > 0.
double phi(double r) {
  if (r >= 0.5 && r <= 2.0) {
    const double u = r - 1.0;  // exact on [0.5, 2]
    return (1.0 + u) * std::log1p(u) - u;
  }
  return r * std::log(r) - r + 1.0;
}

}  // namespace

double entropy(ConstSpan x) {
  require_nonnegative(x, "entropy");
  double s = 0.0;
  for (double v : x)
    if (v > 0.0) s += v * std::log(v) - v;
  return s;
}

double bregman_divergence_1d(double x, double y) {
  if (!(x >= 0.0) || !(y >= 0.0)) throw Error(ErrorKind::Domain, "bregman_divergence: negative entry");
  if (x == 0.0) return y;
  if (y == 0.0) {
    throw Error(ErrorKind::InfiniteDivergence, "bregman_divergence: x > 0 where y = 0");
  }
  const double r = x / y;
  if (std::isfinite(r) && r > 0.0 && r >= 0.5 && r <= 2.0) return y * phi(r);
  return x * (std::log(x) - std::log(y)) - x + y;
}

double bregman_divergence(ConstSpan x, ConstSpan y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "bregman_divergence: lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += bregman_divergence_1d(x[i], y[i]);
  return s;
}

double weighted_norm_sq(ConstSpan x, ConstSpan v) {
  if (x.size() != v.size()) throw Error(ErrorKind::DimensionMismatch, "weighted_norm_sq: lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0)) throw Error(ErrorKind::Domain, "weighted_norm_sq: negative weight");
    s += x[i] * v[i] * v[i];
  }
  return s;
}

double pinsker_lower_bound(ConstSpan x, ConstSpan y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "pinsker_lower_bound: lengths");
  require_nonnegative(x, "pinsker_lower_bound");
  require_nonnegative(y, "pinsker_lower_bound");
  const double denom = std::max(norm1(x), norm1(y));
  if (denom == 0.0) throw Error(ErrorKind::Domain, "pinsker_lower_bound: both vectors are zero");
  const double dist = norm1(subtract(x, y));
  return 0.5 * dist * dist / denom;
}

double max_norm_bound(ConstSpan x, ConstSpan y) {
  const double d = bregman_divergence(x, y);
  return 2.0 * d + 2.0 * std::min(norm1(x), norm1(y));
}

double lambert_w(double t, WBranch branch) {
  static const double inv_e = std::exp(-1.0);
  const bool principal = branch == WBranch::Principal;
  if (std::isnan(t) || t < -inv_e - 4.0 * kEps * inv_e) {
    throw Error(ErrorKind::Domain, "lambert_w: argument below -1/e");
  }
  if (!principal && !(t < 0.0)) {
    throw Error(ErrorKind::Domain, "lambert_w: W_{-1} needs an argument in [-1/e, 0)");
  }
  if (t <= -inv_e) return -1.0;
  if (t == 0.0) return 0.0;
  if (std::isinf(t)) throw Error(ErrorKind::Domain, "lambert_w: infinite argument");

  if (!principal && t > -1e-3) {
    // Newton on w + log(−w) = log(−t), which stays accurate for subnormal t.
    const double target = std::log(-t);
    double w = target - std::log(-target);
    for (int step = 0; step < 100; ++step) {
      const double next = w - (w + std::log(-w) - target) / (1.0 + 1.0 / w);
      const double dw = next - w;
      w = next;
      if (std::abs(dw) <= 2.0 * kEps * (1.0 + std::abs(w))) return w;
    }
    throw Error(ErrorKind::NonConvergence, "lambert_w: Newton iteration did not converge");
  }

  double w;
  if (principal && t >= 0.0) {
    w = std::log1p(t);
  } else if (!principal && t > -0.1) {
    const double l1 = std::log(-t);
    w = l1 - std::log(-l1);
  } else {
    // Expansion around the branch point in p = sqrt(2(e·t + 1)).
    const double p = std::sqrt(std::max(0.0, 2.0 * (std::exp(1.0) * t + 1.0)));
    const double s = principal ? p : -p;
    w = -1.0 + s - s * s / 3.0 + 11.0 / 72.0 * s * s * s;
    if (principal) w = std::max(w, -1.0 + 1e-300);
    else w = std::min(w, -1.0 - 1e-300);
  }

  constexpr int kMaxSteps = 100;
  for (int step = 0; step < kMaxSteps; ++step) {
    const double ew = std::exp(w);
    const double wew = w * ew;
    const double f = wew - t;
    if (std::abs(f) <= 2.0 * kEps * std::max(std::abs(t), std::abs(wew))) return w;
    double wp1 = w + 1.0;
    if (wp1 == 0.0) wp1 = principal ? kEps : -kEps;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    double next = w - f / denom;
    if (!std::isfinite(next)) break;
    if (principal && next < -1.0) next = 0.5 * (w - 1.0);
    if (!principal && next > -1.0) next = 0.5 * (w - 1.0);
    const double dw = next - w;
    w = next;
    if (std::abs(dw) <= 2.0 * kEps * (1.0 + std::abs(w))) return w;
  }
  throw Error(ErrorKind::NonConvergence, "lambert_w: Halley iteration did not converge");
}

double bregman_inverse_1d(double x, double d, WBranch branch) {
  if (!(x > 0.0)) throw Error(ErrorKind::Domain, "bregman_inverse_1d: x must be positive");
  if (!(d >= 0.0)) throw Error(ErrorKind::Domain, "bregman_inverse_1d: d must be nonnegative");
  if (d == 0.0) return x;
  const double ratio = d / x;
  const double t = -std::exp(-1.0 - ratio);
  double r;
  if (std::abs(t) < std::numeric_limits<double>::min()) {
    // exp(−1 − d/x) underflowed.
    if (branch == WBranch::Principal) return 0.0;
    r = ratio + 1.0 + std::log(ratio + 1.0);
  } else {
    r = -lambert_w(t, branch);
  }

  // Newton polish on r − 1 − log r = d/x, which resolves the conditioning loss
  // of the W evaluation near r = 1.
  const bool below = branch == WBranch::Principal;
  auto residual = [ratio](double rr) {
    if (rr >= 0.5 && rr <= 2.0) {
      const double u = rr - 1.0;
      return (u - std::log1p(u)) - ratio;
    }
    return (rr - 1.0 - std::log(rr)) - ratio;
  };
  if (r > 0.0) {
    double res = residual(r);
    for (int it = 0; it < 8 && res != 0.0; ++it) {
      const double slope = 1.0 - 1.0 / r;
      if (slope == 0.0) break;
      const double next = r - res / slope;
      if (!(next > 0.0) || (below && next > 1.0) || (!below && next < 1.0)) break;
      const double next_res = residual(next);
      if (std::abs(next_res) >= std::abs(res)) break;
      r = next;
      res = next_res;
    }
  }
  return x * r;
}

double ymin_lower_bound(double x_min, double d) {
  if (!(x_min > 0.0)) throw Error(ErrorKind::Domain, "ymin_lower_bound: x_min must be positive");
  if (!(d >= 0.0)) throw Error(ErrorKind::Domain, "ymin_lower_bound: d must be nonnegative");
  return -x_min * lambert_w(-std::exp(-1.0 - d / x_min), WBranch::Principal);
}

double exp_quadratic_margin(double t) { return t + t * t - std::expm1(t); }

}  // namespace emd
