#ifndef LOGMU_SPECIAL_HPP
#define LOGMU_SPECIAL_HPP

// Gamma-family special functions at double precision.
//
// All functions are pure; argument errors raise std::domain_error and
// results that exceed the double range raise std::overflow_error.

namespace logmu::special {

/// Largest argument for which gamma(u) is finite in double precision.
inline constexpr double kGammaOverflowThreshold = 171.6243769563027;

/// Gamma function for u > 0.
double gamma(double u);

/// log(Gamma(u)) for u > 0. Reentrant (does not touch `signgam`).
double log_gamma(double u);

/// Upper incomplete gamma Gamma(u, v) = int_v^inf x^(u-1) e^-x dx.
double upper_incomplete_gamma(double u, double v);

/// Regularized upper incomplete gamma Q(u, v) = Gamma(u, v) / Gamma(u).
/// Never forms the ratio of two large numbers.
double regularized_q(double u, double v);

/// Regularized lower incomplete gamma P(u, v) = 1 - Q(u, v), computed
/// directly in the regime where it is small so no cancellation occurs.
double regularized_p(double u, double v);

/// log(1 + x) - x, accurate for small |x|.
double log1pmx(double x);

}  // namespace logmu::special

#endif  // LOGMU_SPECIAL_HPP
