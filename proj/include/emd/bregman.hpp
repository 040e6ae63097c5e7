#pragma once

#include "emd/linalg.hpp"

namespace emd {

/// Stepsize cap constant: exp(t) ≤ 1 + t + t² holds for every t ≤ 1.79.
inline constexpr double kExpQuadBound = 1.79;

enum class WBranch { Principal, MinusOne };

/// Negative entropy h(x) = Σ xᵢ log xᵢ − xᵢ with 0·log 0 = 0.
double entropy(ConstSpan x);

/// D_h(x, y) = Σ xᵢ log(xᵢ/yᵢ) − xᵢ + yᵢ for the entropy kernel.
///
/// Terms with xᵢ = 0 contribute yᵢ. A term with xᵢ > 0 and yᵢ = 0 is infinite
/// and raised as ErrorKind::InfiniteDivergence. Each term is evaluated as
/// yᵢ·φ(xᵢ/yᵢ) with φ(r) = r log r − r + 1, switching to log1p near r = 1 so
/// the divergence keeps relative accuracy when x and y nearly coincide.
double bregman_divergence(ConstSpan x, ConstSpan y);

/// Single-coordinate D_h(x, y) for scalars.
double bregman_divergence_1d(double x, double y);

/// ‖v‖²_x = Σ xᵢ vᵢ².
double weighted_norm_sq(ConstSpan x, ConstSpan v);

/// ½‖x − y‖₁² / max{‖x‖₁, ‖y‖₁}; never exceeds D_h(x, y).
double pinsker_lower_bound(ConstSpan x, ConstSpan y);

/// 2·D_h(x, y) + 2·min{‖x‖₁, ‖y‖₁}; never below max{‖x‖₁, ‖y‖₁}.
double max_norm_bound(ConstSpan x, ConstSpan y);

/// Lambert W on the requested branch, via Halley iteration.
double lambert_w(double t, WBranch branch);

/// The y solving D_h(x, y) = d; Principal gives y ≤ x, MinusOne gives y ≥ x.
double bregman_inverse_1d(double x, double d, WBranch branch);

/// Lower bound on min(y) over all y with D_h(x, y) ≤ d and min(x) ≥ x_min.
double ymin_lower_bound(double x_min, double d);

/// 1 + t + t² − eᵗ, nonnegative for all t ≤ kExpQuadBound.
double exp_quadratic_margin(double t);

}  // namespace emd
