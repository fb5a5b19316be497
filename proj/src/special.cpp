#include "logmu/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace logmu::special {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxIterations = 100000;

void require_positive(double u, const char* who) {
  if (!(u > 0.0)) {
    throw std::domain_error(std::string(who) + ": shape argument must be > 0, got " +
                            std::to_string(u));
  }
}

void require_nonnegative(double v, const char* who) {
  if (!(v >= 0.0)) {
    throw std::domain_error(std::string(who) + ": integration bound must be >= 0, got " +
                            std::to_string(v));
  }
}

// log(n!) - log(sqrt(2 pi n) (n/e)^n), asymptotic series valid for n >= 10.
double stirling_correction(double n) {
  const double r = 1.0 / n;
  const double r2 = r * r;
  return r *
         (1.0 / 12.0 -
          r2 * (1.0 / 360.0 -
                r2 * (1.0 / 1260.0 -
                      r2 * (1.0 / 1680.0 - r2 * (1.0 / 1188.0 - r2 * (691.0 / 360360.0))))));
}

// v^u e^-v / Gamma(u + 1), the common prefactor of both expansions.
double gamma_prefix(double u, double v) {
  if (v == 0.0) return 0.0;
  if (u < 10.0) {
    if (v < 700.0) return std::exp(-v) * std::pow(v, u) / std::tgamma(u + 1.0);
    return std::exp(u * std::log(v) - v - log_gamma(u + 1.0));
  }
  const double x = (v - u) / u;
  return std::exp(u * log1pmx(x) - 0.5 * std::log(2.0 * std::numbers::pi * u) -
                  stirling_correction(u));
}

// P(u, v) by the power series; converges quickly for v < u + 1.
double lower_series(double u, double v) {
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n < kMaxIterations; ++n) {
    term *= v / (u + n);
    sum += term;
    if (term < sum * kEps * 0.25) break;
  }
  return gamma_prefix(u, v) * sum;
}

// Q(u, v) by the Legendre continued fraction (modified Lentz); v >= u + 1.
double upper_continued_fraction(double u, double v) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = v + 1.0 - u;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - u);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return u * gamma_prefix(u, v) * h;
}

}  // namespace

double log1pmx(double x) {
  if (std::fabs(x) >= 0.5) return std::log1p(x) - x;
  // -x^2/2 + x^3/3 - x^4/4 + ...
  double power = x * x;
  double sum = 0.0;
  for (int k = 2; k < 200; ++k) {
    const double term = power / k;
    sum += (k % 2 == 0) ? -term : term;
    if (std::fabs(term) < std::fabs(sum) * kEps * 0.25) break;
    power *= x;
  }
  return sum;
}

double gamma(double u) {
  require_positive(u, "gamma");
  if (u > kGammaOverflowThreshold) {
    throw std::overflow_error("gamma: result overflows double for u = " + std::to_string(u));
  }
  return std::tgamma(u);
}

double log_gamma(double u) {
  require_positive(u, "log_gamma");
  if (u < 1e-300) return -std::log(u);
  if (u < 170.0) return std::log(std::tgamma(u));
  return (u - 0.5) * std::log(u) - u + 0.5 * std::log(2.0 * std::numbers::pi) +
         stirling_correction(u);
}

double regularized_q(double u, double v) {
  require_positive(u, "regularized_q");
  require_nonnegative(v, "regularized_q");
  if (v == 0.0) return 1.0;
  if (std::isinf(v)) return 0.0;
  if (v < u + 1.0) return std::fmax(0.0, 1.0 - lower_series(u, v));
  return std::fmin(1.0, upper_continued_fraction(u, v));
}

double regularized_p(double u, double v) {
  require_positive(u, "regularized_p");
  require_nonnegative(v, "regularized_p");
  if (v == 0.0) return 0.0;
  if (std::isinf(v)) return 1.0;
  if (v < u + 1.0) return std::fmin(1.0, lower_series(u, v));
  return std::fmax(0.0, 1.0 - upper_continued_fraction(u, v));
}

double upper_incomplete_gamma(double u, double v) {
  require_positive(u, "upper_incomplete_gamma");
  require_nonnegative(v, "upper_incomplete_gamma");
  const double q = regularized_q(u, v);
  if (u <= kGammaOverflowThreshold) return std::tgamma(u) * q;
  if (q == 0.0) return 0.0;
  const double log_value = log_gamma(u) + std::log(q);
  if (log_value > std::log(std::numeric_limits<double>::max())) {
    throw std::overflow_error("upper_incomplete_gamma: result overflows double");
  }
  return std::exp(log_value);
}

}  // namespace logmu::special
