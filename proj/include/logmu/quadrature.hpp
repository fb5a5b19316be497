#ifndef LOGMU_QUADRATURE_HPP
#define LOGMU_QUADRATURE_HPP

// Deterministic adaptive quadrature.
//
// integrate_1d is a globally adaptive Gauss-Kronrod (7/15) scheme with the
// QUADPACK error heuristic. Endpoints flagged as singular are handled by the
// tanh-sinh change of variables x = a + (b - a) (1 + tanh(pi/2 sinh t)) / 2,
// integrated by the trapezoid rule in t with repeated step halving; the
// previous level is the embedded error estimate.
//
// The nested integrators mirror limits of the form
//
//   simplex:      int_0^L dx_{d-1} int_0^{L - x_{d-1}} ... int_0^{L - sum} dx_0
//   ball orthant: int_0^R dx_{d-1} int_0^{sqrt(R^2 - x_{d-1}^2)} ... dx_0
//
// with x_{d-1} outermost. The integrand also receives the residual, i.e. the
// distance from the innermost variable to its upper limit
// (L - sum x, or sqrt(R^2 - sum x^2)), computed without cancellation.

#include <cstddef>
#include <functional>
#include <span>

namespace logmu::quadrature {

struct Tolerance {
  double abs = 1e-10;
  double rel = 0.0;

  double target(double value) const;
};

struct IntegrationResult {
  double value = 0.0;
  double err_est = 0.0;  ///< absolute
  std::size_t evals = 0;
  bool converged = true;
};

struct EdgeFlags {
  bool left = false;
  bool right = false;
};

struct Limits {
  std::size_t max_evals = 10'000'000;  ///< per top-level call, nested levels included
  std::size_t max_intervals = 2000;    ///< per one-dimensional integration
};

enum class DomainKind { interval, simplex, ball_orthant };

struct DomainSpec {
  DomainKind kind = DomainKind::interval;
  int dimension = 1;
  double extent = 1.0;  ///< interval length, simplex sum bound, or ball radius

  /// Throws std::invalid_argument when the spec is inconsistent.
  void validate() const;
};

using Integrand1d = std::function<double(double)>;
using PointIntegrand = std::function<double(std::span<const double> x, double residual)>;

/// Integrates f over [a, b]. Under the endpoint transformation, nodes that
/// round onto a flagged endpoint are skipped, and nodes within a relative
/// distance of 1e-30 of an endpoint whose weighted value overflows are
/// dropped. Everywhere else f must return a finite value.
IntegrationResult integrate_1d(const Integrand1d& f, double a, double b, Tolerance tol,
                               EdgeFlags edges = {}, const Limits& limits = {});

/// Nested integration over {x >= 0, sum x <= extent}, dim in 1..4.
/// Every level uses the singular-endpoint transformation.
IntegrationResult integrate_simplex(const PointIntegrand& f, int dim, double extent, Tolerance tol,
                                    const Limits& limits = {});

/// Nested integration over {x >= 0, sum x^2 <= radius^2}, dim in 1..4.
///
/// With boundary_singular set, the innermost variable is integrated as
/// x_0 = R sin(theta), theta in [0, pi/2], where R is its upper limit. The
/// integrand is then evaluated as f * R cos(theta), which stays bounded when
/// f carries a 1 / residual factor.
IntegrationResult integrate_ball_orthant(const PointIntegrand& f, int dim, double radius,
                                         Tolerance tol, bool boundary_singular,
                                         const Limits& limits = {});

/// Dispatches on domain.kind. For intervals the domain is [0, extent].
IntegrationResult integrate(const DomainSpec& domain, const PointIntegrand& f, Tolerance tol,
                            bool boundary_singular = false, const Limits& limits = {});

}  // namespace logmu::quadrature

#endif  // LOGMU_QUADRATURE_HPP
