#ifndef LOGMU_DIVERSITY_HPP
#define LOGMU_DIVERSITY_HPP

// Combiner statistics for M independent, possibly non-identical Log-mu
// branches sharing one maximum Doppler shift.
//
//   PSC  P = max P_i                    closed forms
//   EGC  P = sum P_i / sqrt(M)          nested integrals over a simplex
//   MRC  P = sqrt(sum P_i^2)            nested integrals over a ball orthant
//
// Branch 1 is the eliminated variable: it sits at the residual distance to
// the combiner boundary, u_1 = sqrt(M) rho - sum_{i>=2} rho_i (EGC) or
// u_1 = sqrt(rho^2 - sum_{i>=2} rho_i^2) (MRC). The innermost CDF integral
// over rho_1 is done in closed form (it is F_1(u_1)), so every EGC/MRC
// integral has dimension M - 1.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "logmu/model.hpp"
#include "logmu/quadrature.hpp"

namespace logmu {

enum class Scheme { none, psc, egc, mrc };

std::string_view to_string(Scheme scheme);
/// Accepts none, psc, egc, mrc (case-insensitive); throws std::invalid_argument.
Scheme parse_scheme(std::string_view text);

struct DiversityConfig {
  std::vector<BranchParams> branches;
  Scheme scheme = Scheme::none;
  DopplerParams doppler;

  std::size_t m() const { return branches.size(); }
};

namespace diversity {

/// EGC/MRC integrals have dimension M - 1, and the engine stops at 4.
inline constexpr std::size_t kMaxIntegratedBranches = 5;

/// Throws constraint_error. Branch problems name the 1-based branch index.
void validate(const DiversityConfig& config);

struct Estimate {
  double value = 0.0;
  double err_est = 0.0;  ///< absolute; 0 for closed forms
  bool converged = true;
  ValueFlag flag = ValueFlag::ok;
  std::string warning;
};

quadrature::Tolerance default_cdf_tolerance();  ///< 1e-6 absolute
quadrature::Tolerance default_lcr_tolerance();  ///< 1e-6 max(1, value)

double psc_cdf(double rho, const DiversityConfig& config);
double psc_lcr(double rho, const DiversityConfig& config);
/// Harmonic combination of the branch fade durations. Flagged `undefined`
/// when any branch duration is (rho = 0).
FlaggedValue psc_afd(double rho, const DiversityConfig& config);

Estimate egc_cdf(double rho, const DiversityConfig& config,
                 quadrature::Tolerance tol = default_cdf_tolerance());
Estimate egc_lcr(double rho, const DiversityConfig& config,
                 quadrature::Tolerance tol = default_lcr_tolerance());
Estimate egc_afd(double rho, const DiversityConfig& config,
                 quadrature::Tolerance cdf_tol = default_cdf_tolerance(),
                 quadrature::Tolerance lcr_tol = default_lcr_tolerance());

Estimate mrc_cdf(double rho, const DiversityConfig& config,
                 quadrature::Tolerance tol = default_cdf_tolerance());
Estimate mrc_lcr(double rho, const DiversityConfig& config,
                 quadrature::Tolerance tol = default_lcr_tolerance());
Estimate mrc_afd(double rho, const DiversityConfig& config,
                 quadrature::Tolerance cdf_tol = default_cdf_tolerance(),
                 quadrature::Tolerance lcr_tol = default_lcr_tolerance());

/// Density of the combiner output: closed form for none/PSC, an (M-1)-
/// dimensional integral over the combiner boundary for EGC/MRC.
Estimate pdf(double rho, const DiversityConfig& config,
             quadrature::Tolerance tol = default_lcr_tolerance());

/// Dispatch on config.scheme.
Estimate cdf(double rho, const DiversityConfig& config,
             quadrature::Tolerance tol = default_cdf_tolerance());
Estimate lcr(double rho, const DiversityConfig& config,
             quadrature::Tolerance tol = default_lcr_tolerance());
Estimate afd(double rho, const DiversityConfig& config,
             quadrature::Tolerance cdf_tol = default_cdf_tolerance(),
             quadrature::Tolerance lcr_tol = default_lcr_tolerance());

/// Non-empty when a bimodal branch (s > 1) has its stationary point inside
/// the integration domain of an EGC/MRC statistic at this level.
std::string singular_point_warning(double rho, const DiversityConfig& config);

enum class PointStatus {
  ok,
  not_converged,  ///< a quadrature stopped above its tolerance
  undefined,      ///< AFD undefined (no crossings, or rho = 0)
  failed,         ///< evaluation threw; see warnings
};

std::string_view to_string(PointStatus status);

struct CurveOptions {
  quadrature::Tolerance cdf_tol = default_cdf_tolerance();
  quadrature::Tolerance lcr_tol = default_lcr_tolerance();
  unsigned threads = 1;  ///< levels evaluated concurrently
};

struct StatCurve {
  std::vector<double> levels;  ///< normalized envelope, ascending as given
  std::vector<double> cdf;
  std::vector<double> lcr;     ///< crossings per second
  std::vector<double> afd;     ///< seconds
  std::vector<double> cdf_err;
  std::vector<double> lcr_err;
  std::vector<double> err_est;  ///< max(cdf_err, lcr_err)
  std::vector<PointStatus> status;
  std::vector<std::string> warnings;

  std::size_t size() const { return levels.size(); }
  bool all_ok() const;
};

/// Evaluates cdf, lcr and afd at every level. Per-level failures are
/// recorded in status and warnings; the sweep always completes.
StatCurve curve(const DiversityConfig& config, const std::vector<double>& levels,
                const CurveOptions& options = {});

}  // namespace diversity
}  // namespace logmu

#endif  // LOGMU_DIVERSITY_HPP
