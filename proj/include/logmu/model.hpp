#ifndef LOGMU_MODEL_HPP
#define LOGMU_MODEL_HPP

// Single-branch Log-mu envelope model.
//
// The normalized envelope P = R / r_hat of one branch satisfies
//
//   g(P) = log((P + c)^alpha + s) = sum of 2 mu squared Gaussians,
//   c = (1 - s)^(1/alpha)  (real odd root when s > 1),
//
// so g(P) is Gamma distributed with shape mu and mean 1. Everything below
// works on the normalized envelope; r_hat only enters through normalize().

#include <stdexcept>
#include <string>

namespace logmu {

/// Raised when parameters violate a model constraint.
class constraint_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BranchParams {
  double alpha = 1.0;  ///< non-linearity exponent, > 0
  double s = 1.0;      ///< shape offset; s > 1 requires odd integer alpha
  double mu = 1.0;     ///< number of multipath clusters, > 0
  double r_hat = 1.0;  ///< envelope scale, > 0
};

/// Maximum Doppler shift. `omega` is in radians per second.
struct DopplerParams {
  double omega = 1.0;

  static DopplerParams from_hz(double f_d);
  double f_d() const;
};

/// Qualifies a value that is a limit or is not a plain number.
enum class ValueFlag {
  ok,
  infinite_limit,  ///< the true value is +inf (boundary divergence)
  singular,        ///< evaluated at a point where the expression diverges
  undefined,       ///< 0/0 or outside the domain of the statistic
};

struct FlaggedValue {
  double value = 0.0;
  ValueFlag flag = ValueFlag::ok;

  bool ok() const { return flag == ValueFlag::ok; }
};

namespace model {

/// True when x lies within 1e-9 of an odd positive integer.
bool is_odd_integer(double x);

/// Throws constraint_error naming the first violated constraint.
void validate(const BranchParams& params);

/// Physical envelope to normalized envelope.
double normalize(double r, const BranchParams& params);

/// Envelope dB convention: 20 log10(rho).
double to_db(double rho);
double from_db(double rho_db);

/// A validated branch with its derived constants cached. Cheap to copy.
class Branch {
 public:
  explicit Branch(const BranchParams& params);

  const BranchParams& params() const { return params_; }
  double alpha() const { return params_.alpha; }
  double s() const { return params_.s; }
  double mu() const { return params_.mu; }
  /// c = (1 - s)^(1/alpha), negative when s > 1.
  double offset() const { return c_; }
  /// Location where g' vanishes (s > 1 only); 0 otherwise.
  double stationary_point() const;

  double g(double rho) const;
  double g_prime(double rho) const;
  double g_inverse(double z) const;

  /// Density of the normalized envelope. At rho = 0 returns the limit,
  /// which may be +inf (see pdf_at_zero).
  double pdf(double rho) const;
  FlaggedValue pdf_at_zero() const;
  double cdf(double rho) const;
  /// 1 - cdf, accurate in the upper tail.
  double ccdf(double rho) const;

  /// Level crossing rate divided by omega / sqrt(2 pi). Equals
  /// sqrt(g / mu) * pdf / g', but is evaluated without the ratio so it
  /// stays finite where g' = 0. Exact limit at rho = 0.
  double crossing_density(double rho) const;

  struct Densities {
    double pdf;
    double crossing;  ///< crossing_density
  };
  /// pdf and crossing_density sharing one evaluation of g.
  Densities densities(double rho) const;

  double deriv_std_per_omega(double rho) const;

  /// Average fade duration times omega, from the explicit closed form
  /// sqrt(2 pi) h^mu (Gamma(mu) - Gamma(mu, mu g)) / (mu^(mu-1/2) g^(mu-1/2)).
  double fade_duration_times_omega(double rho) const;

 private:
  struct Terms {
    double y;        // rho + c
    double hm1;      // h - 1 where h = (rho + c)^alpha + s
    double g;        // log h
    double log_g;
  };
  Terms terms(double rho) const;
  double log_abs_y(double rho, double y) const;
  bool log_space(const Terms& t) const;

  BranchParams params_;
  double c_ = 0.0;
  double c_pow_alpha_ = 0.0;  // |c|^alpha = |1 - s|
  double log_mu_ = 0.0;
  double log_gamma_mu_ = 0.0;
  double gamma_mu_ = 0.0;     // 0 when Gamma(mu) overflows
  double mu_pow_mu_ = 0.0;
  double mu_pow_mu_half_ = 0.0;
};

double g(double rho, const BranchParams& params);
double g_prime(double rho, const BranchParams& params);
double g_inverse(double z, const BranchParams& params);
double pdf(double rho, const BranchParams& params);
double cdf(double rho, const BranchParams& params);

/// Standard deviation of the envelope time derivative conditioned on the
/// envelope level. Flagged `singular` (value +inf) where g'(rho) = 0.
FlaggedValue deriv_std(double rho, const BranchParams& params, const DopplerParams& doppler);

/// Closed-form single-branch level crossing rate in crossings per second.
double lcr_single(double rho, const BranchParams& params, const DopplerParams& doppler);

/// Closed-form single-branch average fade duration in seconds.
/// Flagged `undefined` at rho = 0.
FlaggedValue afd_single(double rho, const BranchParams& params, const DopplerParams& doppler);

}  // namespace model
}  // namespace logmu

#endif  // LOGMU_MODEL_HPP
