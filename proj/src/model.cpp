#include "logmu/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "logmu/special.hpp"

namespace logmu {

DopplerParams DopplerParams::from_hz(double f_d) {
  return DopplerParams{2.0 * std::numbers::pi * f_d};
}

double DopplerParams::f_d() const { return omega / (2.0 * std::numbers::pi); }

namespace model {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Above this mu the closed forms are evaluated as exponentials of sums of logs.
constexpr double kLogSpaceMu = 50.0;
// g below this is treated as "deep fade": powers of g go through logs.
constexpr double kTinyG = 1e-280;

std::string describe(const BranchParams& p) {
  std::ostringstream os;
  os << "(alpha=" << p.alpha << ", s=" << p.s << ", mu=" << p.mu << ", r_hat=" << p.r_hat << ")";
  return os.str();
}

void require_level(double rho, const char* who) {
  if (!(rho >= 0.0)) {
    throw std::domain_error(std::string(who) + ": level must be >= 0");
  }
}

}  // namespace

bool is_odd_integer(double x) {
  if (!std::isfinite(x)) return false;
  const double nearest = 2.0 * std::round((x - 1.0) / 2.0) + 1.0;
  return nearest >= 1.0 && std::fabs(x - nearest) <= 1e-9;
}

void validate(const BranchParams& p) {
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) {
    throw constraint_error("alpha must be a finite positive number " + describe(p));
  }
  if (!(p.mu > 0.0) || !std::isfinite(p.mu)) {
    throw constraint_error("mu must be a finite positive number " + describe(p));
  }
  if (!(p.r_hat > 0.0) || !std::isfinite(p.r_hat)) {
    throw constraint_error("r_hat must be a finite positive number " + describe(p));
  }
  if (!std::isfinite(p.s)) {
    throw constraint_error("s must be finite " + describe(p));
  }
  if (p.s > 1.0 && !is_odd_integer(p.alpha)) {
    throw constraint_error("s > 1 requires alpha to be an odd integer " + describe(p));
  }
}

double normalize(double r, const BranchParams& params) { return r / params.r_hat; }

double to_db(double rho) { return 20.0 * std::log10(rho); }

double from_db(double rho_db) { return std::pow(10.0, rho_db / 20.0); }

Branch::Branch(const BranchParams& params) : params_(params) {
  validate(params_);
  const double alpha = params_.alpha;
  const double s = params_.s;
  c_pow_alpha_ = std::fabs(1.0 - s);
  if (s < 1.0) {
    c_ = std::pow(1.0 - s, 1.0 / alpha);
  } else if (s > 1.0) {
    c_ = -std::pow(s - 1.0, 1.0 / alpha);
  }
  const double mu = params_.mu;
  log_mu_ = std::log(mu);
  log_gamma_mu_ = special::log_gamma(mu);
  if (mu <= kLogSpaceMu) {
    gamma_mu_ = special::gamma(mu);
    mu_pow_mu_ = std::pow(mu, mu);
    mu_pow_mu_half_ = std::pow(mu, mu - 0.5);
  }
}

double Branch::stationary_point() const { return c_ < 0.0 ? -c_ : 0.0; }

Branch::Terms Branch::terms(double rho) const {
  Terms t{};
  const double alpha = params_.alpha;
  t.y = rho + c_;
  if (params_.s == 1.0) {
    t.hm1 = std::pow(rho, alpha);
  } else if (c_ > 0.0) {
    // (rho + c)^alpha - c^alpha without cancellation for small rho.
    t.hm1 = c_pow_alpha_ * std::expm1(alpha * std::log1p(rho / c_));
  } else {
    const double d = -c_;
    const double ratio = rho / d;
    if (ratio < 1.0) {
      // d^alpha - (d - rho)^alpha
      t.hm1 = -c_pow_alpha_ * std::expm1(alpha * std::log1p(-ratio));
    } else {
      t.hm1 = std::pow(rho - d, alpha) + c_pow_alpha_;
    }
  }
  t.g = std::log1p(t.hm1);
  if (t.hm1 < kTinyG) {
    // log(log1p(x)) = log(x) to double precision here.
    t.log_g = (params_.s == 1.0 && rho > 0.0) ? alpha * std::log(rho) : std::log(t.hm1);
  } else {
    t.log_g = std::log(t.g);
  }
  return t;
}

double Branch::log_abs_y(double rho, double y) const {
  return params_.s == 1.0 ? std::log(rho) : std::log(std::fabs(y));
}

bool Branch::log_space(const Terms& t) const {
  const double mu = params_.mu;
  return mu > kLogSpaceMu || t.g < kTinyG || t.g * (mu + 1.0) > 600.0;
}

double Branch::g(double rho) const {
  require_level(rho, "g");
  return terms(rho).g;
}

double Branch::g_prime(double rho) const {
  require_level(rho, "g_prime");
  const Terms t = terms(rho);
  const double alpha = params_.alpha;
  // alpha - 1 is even whenever y < 0, so |y|^(alpha-1) is the real power.
  return alpha * std::pow(std::fabs(t.y), alpha - 1.0) / (1.0 + t.hm1);
}

double Branch::g_inverse(double z) const {
  if (!(z >= 0.0)) throw std::domain_error("g_inverse: argument must be >= 0");
  if (z == 0.0) return 0.0;
  const double alpha = params_.alpha;
  if (z > 700.0) {
    // e^z dominates s; (e^z - s)^(1/alpha) = e^(z/alpha) (1 - s e^-z)^(1/alpha).
    return std::exp(z / alpha) * std::pow(1.0 - params_.s * std::exp(-z), 1.0 / alpha) - c_;
  }
  const double e = std::expm1(z);  // h - 1
  if (params_.s == 1.0) return std::pow(e, 1.0 / alpha);
  if (c_ > 0.0) return c_ * std::expm1(std::log1p(e / c_pow_alpha_) / alpha);
  const double d = -c_;
  const double ratio = e / c_pow_alpha_;
  if (ratio < 1.0) return -d * std::expm1(std::log1p(-ratio) / alpha);
  return d + std::pow(e - c_pow_alpha_, 1.0 / alpha);
}

FlaggedValue Branch::pdf_at_zero() const {
  const double alpha = params_.alpha;
  const double mu = params_.mu;
  if (params_.s == 1.0) {
    // pdf ~ alpha mu^mu / Gamma(mu) rho^(alpha mu - 1)
    const double exponent = alpha * mu - 1.0;
    if (exponent > 0.0) return {0.0, ValueFlag::ok};
    if (exponent < 0.0) return {kInf, ValueFlag::infinite_limit};
    return {alpha * std::exp(mu * log_mu_ - log_gamma_mu_), ValueFlag::ok};
  }
  // g'(0) = alpha |c|^(alpha-1), pdf ~ g'(0) mu^mu (g'(0) rho)^(mu-1) / Gamma(mu)
  if (mu > 1.0) return {0.0, ValueFlag::ok};
  if (mu < 1.0) return {kInf, ValueFlag::infinite_limit};
  return {alpha * std::pow(std::fabs(c_), alpha - 1.0), ValueFlag::ok};
}

double Branch::pdf(double rho) const {
  require_level(rho, "pdf");
  if (rho == 0.0) return pdf_at_zero().value;
  if (std::isinf(rho)) return 0.0;
  const Terms t = terms(rho);
  const double alpha = params_.alpha;
  const double mu = params_.mu;
  if (t.y == 0.0 && alpha > 1.0) return 0.0;
  if (!log_space(t)) {
    const double h = 1.0 + t.hm1;
    return alpha * std::pow(std::fabs(t.y), alpha - 1.0) * mu_pow_mu_ * std::pow(t.g, mu - 1.0) /
           (gamma_mu_ * std::pow(h, mu + 1.0));
  }
  const double y_term = alpha == 1.0 ? 0.0 : (alpha - 1.0) * log_abs_y(rho, t.y);
  const double log_pdf = std::log(alpha) + y_term + mu * log_mu_ +
                         (mu - 1.0) * t.log_g - log_gamma_mu_ - (mu + 1.0) * t.g;
  return std::exp(log_pdf);
}

double Branch::cdf(double rho) const {
  require_level(rho, "cdf");
  if (std::isinf(rho)) return 1.0;
  const double mu = params_.mu;
  const Terms t = terms(rho);
  if (t.g < kTinyG && rho > 0.0) {
    // Leading term of the series: (mu g)^mu / Gamma(mu + 1).
    return std::exp(mu * (log_mu_ + t.log_g) - special::log_gamma(mu + 1.0));
  }
  return special::regularized_p(mu, mu * t.g);
}

double Branch::ccdf(double rho) const {
  require_level(rho, "ccdf");
  if (std::isinf(rho)) return 0.0;
  const double mu = params_.mu;
  return special::regularized_q(mu, mu * terms(rho).g);
}

double Branch::crossing_density(double rho) const {
  require_level(rho, "crossing_density");
  const double mu = params_.mu;
  if (rho == 0.0) {
    if (mu > 0.5) return 0.0;
    if (mu < 0.5) return kInf;
    return 1.0 / std::sqrt(std::numbers::pi);
  }
  if (std::isinf(rho)) return 0.0;
  const Terms t = terms(rho);
  if (!log_space(t)) {
    const double h = 1.0 + t.hm1;
    return mu_pow_mu_half_ * std::pow(t.g, mu - 0.5) / (gamma_mu_ * std::pow(h, mu));
  }
  return std::exp((mu - 0.5) * (log_mu_ + t.log_g) - log_gamma_mu_ - mu * t.g);
}

Branch::Densities Branch::densities(double rho) const {
  if (rho == 0.0 || std::isinf(rho)) return {pdf(rho), crossing_density(rho)};
  require_level(rho, "densities");
  const Terms t = terms(rho);
  const double alpha = params_.alpha;
  const double mu = params_.mu;
  if (!log_space(t)) {
    const double h = 1.0 + t.hm1;
    const double crossing = mu_pow_mu_half_ * std::pow(t.g, mu - 0.5) / (gamma_mu_ * std::pow(h, mu));
    if (t.y == 0.0 && alpha > 1.0) return {0.0, crossing};
    const double pdf = alpha * std::pow(std::fabs(t.y), alpha - 1.0) * mu_pow_mu_ * std::pow(t.g, mu - 1.0) /
                       (gamma_mu_ * std::pow(h, mu + 1.0));
    return {pdf, crossing};
  }
  const double log_crossing = (mu - 0.5) * (log_mu_ + t.log_g) - log_gamma_mu_ - mu * t.g;
  if (t.y == 0.0 && alpha > 1.0) return {0.0, std::exp(log_crossing)};
  const double y_term = alpha == 1.0 ? 0.0 : (alpha - 1.0) * log_abs_y(rho, t.y);
  const double log_pdf = std::log(alpha) + y_term + mu * log_mu_ + (mu - 1.0) * t.log_g - log_gamma_mu_ -
                         (mu + 1.0) * t.g;
  return {std::exp(log_pdf), std::exp(log_crossing)};
}

double Branch::deriv_std_per_omega(double rho) const {
  const double gp = g_prime(rho);
  if (gp == 0.0) return kInf;
  return std::sqrt(g(rho) / params_.mu) / gp;
}

double Branch::fade_duration_times_omega(double rho) const {
  require_level(rho, "fade_duration_times_omega");
  if (rho == 0.0) return kNaN;
  const Terms t = terms(rho);
  const double mu = params_.mu;
  const double lower = special::regularized_p(mu, mu * t.g);
  const double sqrt_2pi = std::sqrt(2.0 * std::numbers::pi);
  if (!log_space(t)) {
    const double h = 1.0 + t.hm1;
    return sqrt_2pi * std::pow(h, mu) * gamma_mu_ * lower / (mu_pow_mu_half_ * std::pow(t.g, mu - 0.5));
  }
  return std::exp(0.5 * std::log(2.0 * std::numbers::pi) + mu * t.g + log_gamma_mu_ + std::log(lower) -
                  (mu - 0.5) * (log_mu_ + t.log_g));
}

double g(double rho, const BranchParams& params) { return Branch(params).g(rho); }

double g_prime(double rho, const BranchParams& params) { return Branch(params).g_prime(rho); }

double g_inverse(double z, const BranchParams& params) { return Branch(params).g_inverse(z); }

double pdf(double rho, const BranchParams& params) { return Branch(params).pdf(rho); }

double cdf(double rho, const BranchParams& params) { return Branch(params).cdf(rho); }

FlaggedValue deriv_std(double rho, const BranchParams& params, const DopplerParams& doppler) {
  if (!(rho > 0.0)) throw std::domain_error("deriv_std: level must be > 0");
  const Branch branch(params);
  const double per_omega = branch.deriv_std_per_omega(rho);
  if (std::isinf(per_omega)) return {kInf, ValueFlag::singular};
  return {doppler.omega * per_omega, ValueFlag::ok};
}

double lcr_single(double rho, const BranchParams& params, const DopplerParams& doppler) {
  const Branch branch(params);
  return doppler.omega / std::sqrt(2.0 * std::numbers::pi) * branch.crossing_density(rho);
}

FlaggedValue afd_single(double rho, const BranchParams& params, const DopplerParams& doppler) {
  require_level(rho, "afd_single");
  if (rho == 0.0) return {kNaN, ValueFlag::undefined};
  const double value = Branch(params).fade_duration_times_omega(rho) / doppler.omega;
  if (std::isinf(value)) return {value, ValueFlag::infinite_limit};
  return {value, ValueFlag::ok};
}

}  // namespace model
}  // namespace logmu
