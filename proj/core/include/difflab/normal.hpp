#pragma once

namespace difflab {

/// Standard normal CDF, 0.5 * erfc(-x / sqrt(2)).
double normal_cdf(double x);

/// Standard normal quantile for u in (0, 1); throws UsageError otherwise.
/// Rational approximation (Acklam) followed by one Halley step against erfc,
/// giving ~1e-15 absolute accuracy over [1e-6, 1 - 1e-6].
double inverse_normal_cdf(double u);

}  // namespace difflab
