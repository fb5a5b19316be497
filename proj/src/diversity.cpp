#include "logmu/diversity.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace logmu {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::none: return "none";
    case Scheme::psc: return "psc";
    case Scheme::egc: return "egc";
    case Scheme::mrc: return "mrc";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "none") return Scheme::none;
  if (lower == "psc") return Scheme::psc;
  if (lower == "egc") return Scheme::egc;
  if (lower == "mrc") return Scheme::mrc;
  throw std::invalid_argument("unknown scheme '" + std::string(text) + "' (expected none, psc, egc or mrc)");
}

namespace diversity {
namespace {

using quadrature::Tolerance;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMaxBranches = kMaxIntegratedBranches;

double crossing_prefactor(const DopplerParams& doppler) {
  return doppler.omega / std::sqrt(2.0 * std::numbers::pi);
}

void require_scheme(const DiversityConfig& config, Scheme scheme, const char* who) {
  validate(config);
  if (config.scheme != scheme) {
    throw std::invalid_argument(std::string(who) + ": configuration scheme is " +
                                std::string(to_string(config.scheme)));
  }
}

void require_level(double rho, const char* who) {
  if (!(rho >= 0.0)) throw std::domain_error(std::string(who) + ": level must be >= 0");
}

std::vector<model::Branch> make_branches(const DiversityConfig& config) {
  std::vector<model::Branch> out;
  out.reserve(config.m());
  for (const auto& p : config.branches) out.emplace_back(p);
  return out;
}

Estimate exact(double value) { return {value, 0.0, true, ValueFlag::ok, {}}; }

Estimate from_flagged(const FlaggedValue& v) {
  Estimate e = exact(v.value);
  e.flag = v.flag;
  return e;
}

Estimate from_result(const quadrature::IntegrationResult& r, double scale) {
  return {scale * r.value, scale * r.err_est, r.converged, ValueFlag::ok, {}};
}

// The EGC/MRC crossing integrands need sqrt(sum_i t_i^2) where
// t_i = w_i * crossing_i * prod_{j != i} pdf_j; scaled to avoid overflow.
template <std::size_t N>
double root_sum_squares(const std::array<double, N>& t, std::size_t m) {
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) scale = std::fmax(scale, std::fabs(t[i]));
  if (scale == 0.0 || std::isinf(scale)) return scale;
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = t[i] / scale;
    sum += r * r;
  }
  return scale * std::sqrt(sum);
}

// Evaluates per-branch densities at the point (u_1, x[0], ..., x[m-2]) and
// returns sqrt(sum_i (w_i n_i prod_{j != i} f_j)^2), with w_i = rho_i when
// weighted, else 1.
class CrossingIntegrand {
 public:
  CrossingIntegrand(const std::vector<model::Branch>& branches, bool weighted)
      : branches_(branches), weighted_(weighted) {}

  double operator()(std::span<const double> x, double u1) const {
    const std::size_t m = branches_.size();
    std::array<double, kMaxBranches> pdf{};
    std::array<double, kMaxBranches> crossing{};
    std::array<double, kMaxBranches> coordinate{};
    for (std::size_t i = 0; i < m; ++i) {
      coordinate[i] = i == 0 ? u1 : x[i - 1];
      const auto d = branches_[i].densities(coordinate[i]);
      pdf[i] = d.pdf;
      crossing[i] = d.crossing;
    }
    // prefix[i] = prod_{j<i} pdf_j, suffix accumulated on the fly.
    std::array<double, kMaxBranches + 1> prefix{};
    prefix[0] = 1.0;
    for (std::size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] * pdf[i];
    std::array<double, kMaxBranches> terms{};
    double suffix = 1.0;
    for (std::size_t k = m; k-- > 0;) {
      terms[k] = crossing[k] * prefix[k] * suffix;
      if (weighted_) terms[k] *= coordinate[k];
      suffix *= pdf[k];
    }
    return root_sum_squares(terms, m);
  }

 private:
  const std::vector<model::Branch>& branches_;
  bool weighted_;
};

class CdfIntegrand {
 public:
  explicit CdfIntegrand(const std::vector<model::Branch>& branches) : branches_(branches) {}

  double operator()(std::span<const double> x, double u1) const {
    double value = branches_[0].cdf(u1);
    for (std::size_t i = 1; i < branches_.size() && value != 0.0; ++i) value *= branches_[i].pdf(x[i - 1]);
    return value;
  }

 private:
  const std::vector<model::Branch>& branches_;
};

class DensityProduct {
 public:
  explicit DensityProduct(const std::vector<model::Branch>& branches) : branches_(branches) {}

  double operator()(std::span<const double> x, double u1) const {
    double value = branches_[0].pdf(u1);
    for (std::size_t i = 1; i < branches_.size() && value != 0.0; ++i) value *= branches_[i].pdf(x[i - 1]);
    return value;
  }

 private:
  const std::vector<model::Branch>& branches_;
};

Tolerance scaled(Tolerance tol, double scale) { return {tol.abs / scale, tol.rel}; }

enum class Combiner { egc, mrc };

Estimate combined_cdf(double rho, const DiversityConfig& config, Tolerance tol, Combiner kind) {
  const char* who = kind == Combiner::egc ? "egc_cdf" : "mrc_cdf";
  require_scheme(config, kind == Combiner::egc ? Scheme::egc : Scheme::mrc, who);
  require_level(rho, who);
  if (config.m() == 1) return exact(model::Branch(config.branches[0]).cdf(rho));
  if (std::isinf(rho)) return exact(1.0);
  if (rho == 0.0) return exact(0.0);
  const auto branches = make_branches(config);
  const CdfIntegrand integrand(branches);
  const int dim = static_cast<int>(config.m()) - 1;
  const quadrature::PointIntegrand f = [&integrand](std::span<const double> x, double u1) {
    return integrand(x, u1);
  };
  const auto result = kind == Combiner::egc
                          ? quadrature::integrate_simplex(f, dim, std::sqrt(static_cast<double>(config.m())) * rho, tol)
                          : quadrature::integrate_ball_orthant(f, dim, rho, tol, false);
  Estimate e = from_result(result, 1.0);
  e.value = std::clamp(e.value, 0.0, 1.0);
  return e;
}

Estimate combined_lcr(double rho, const DiversityConfig& config, Tolerance tol, Combiner kind) {
  const char* who = kind == Combiner::egc ? "egc_lcr" : "mrc_lcr";
  require_scheme(config, kind == Combiner::egc ? Scheme::egc : Scheme::mrc, who);
  require_level(rho, who);
  if (config.m() == 1) return exact(model::lcr_single(rho, config.branches[0], config.doppler));
  if (rho == 0.0 || std::isinf(rho)) return exact(0.0);
  const auto branches = make_branches(config);
  const double k = crossing_prefactor(config.doppler);
  const int dim = static_cast<int>(config.m()) - 1;
  Estimate e;
  if (kind == Combiner::egc) {
    const CrossingIntegrand integrand(branches, false);
    const quadrature::PointIntegrand f = [&integrand](std::span<const double> x, double u1) {
      return integrand(x, u1);
    };
    const double length = std::sqrt(static_cast<double>(config.m())) * rho;
    e = from_result(quadrature::integrate_simplex(f, dim, length, scaled(tol, k)), k);
  } else {
    // The engine multiplies by u_1 = R cos(theta), cancelling the 1/u_1 factor.
    const CrossingIntegrand integrand(branches, true);
    const quadrature::PointIntegrand f = [&integrand](std::span<const double> x, double u1) {
      return integrand(x, u1) / u1;
    };
    e = from_result(quadrature::integrate_ball_orthant(f, dim, rho, scaled(tol, k), true), k);
  }
  e.warning = singular_point_warning(rho, config);
  return e;
}

Estimate afd_from(const Estimate& c, const Estimate& l) {
  Estimate e;
  e.converged = c.converged && l.converged;
  e.warning = l.warning;
  if (!(l.value > 0.0) || !std::isfinite(l.value)) {
    e.value = kNaN;
    e.flag = ValueFlag::undefined;
    return e;
  }
  e.value = c.value / l.value;
  e.err_est = (c.err_est + e.value * l.err_est) / l.value;
  return e;
}

}  // namespace

void validate(const DiversityConfig& config) {
  if (config.branches.empty()) throw constraint_error("at least one branch is required");
  for (std::size_t i = 0; i < config.m(); ++i) {
    try {
      model::validate(config.branches[i]);
    } catch (const constraint_error& err) {
      throw constraint_error("branch " + std::to_string(i + 1) + ": " + err.what());
    }
  }
  if (!(config.doppler.omega > 0.0) || !std::isfinite(config.doppler.omega)) {
    throw constraint_error("maximum Doppler shift must be positive and finite");
  }
  if (config.scheme == Scheme::none && config.m() != 1) {
    throw constraint_error("scheme none requires exactly one branch");
  }
  if ((config.scheme == Scheme::egc || config.scheme == Scheme::mrc) && config.m() > kMaxIntegratedBranches) {
    throw constraint_error("EGC and MRC support at most " + std::to_string(kMaxIntegratedBranches) + " branches");
  }
}

Tolerance default_cdf_tolerance() { return {1e-6, 0.0}; }
Tolerance default_lcr_tolerance() { return {1e-6, 1e-6}; }

double psc_cdf(double rho, const DiversityConfig& config) {
  require_scheme(config, Scheme::psc, "psc_cdf");
  require_level(rho, "psc_cdf");
  double product = 1.0;
  for (const auto& p : config.branches) product *= model::cdf(rho, p);
  return product;
}

double psc_lcr(double rho, const DiversityConfig& config) {
  require_scheme(config, Scheme::psc, "psc_lcr");
  require_level(rho, "psc_lcr");
  const std::size_t m = config.m();
  std::vector<double> f(m);
  for (std::size_t j = 0; j < m; ++j) f[j] = model::cdf(rho, config.branches[j]);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double term = model::lcr_single(rho, config.branches[i], config.doppler);
    for (std::size_t j = 0; j < m && term != 0.0; ++j) {
      if (j == i) continue;
      term = f[j] == 0.0 ? 0.0 : term * f[j];
    }
    sum += term;
  }
  return sum;
}

FlaggedValue psc_afd(double rho, const DiversityConfig& config) {
  require_scheme(config, Scheme::psc, "psc_afd");
  require_level(rho, "psc_afd");
  double inverse = 0.0;
  for (const auto& p : config.branches) {
    const FlaggedValue t = model::afd_single(rho, p, config.doppler);
    if (t.flag == ValueFlag::undefined) return {kNaN, ValueFlag::undefined};
    inverse += 1.0 / t.value;
  }
  return {1.0 / inverse, ValueFlag::ok};
}

Estimate egc_cdf(double rho, const DiversityConfig& config, Tolerance tol) {
  return combined_cdf(rho, config, tol, Combiner::egc);
}

Estimate egc_lcr(double rho, const DiversityConfig& config, Tolerance tol) {
  return combined_lcr(rho, config, tol, Combiner::egc);
}

Estimate egc_afd(double rho, const DiversityConfig& config, Tolerance cdf_tol, Tolerance lcr_tol) {
  if (config.m() == 1) {
    require_scheme(config, Scheme::egc, "egc_afd");
    return from_flagged(model::afd_single(rho, config.branches[0], config.doppler));
  }
  return afd_from(egc_cdf(rho, config, cdf_tol), egc_lcr(rho, config, lcr_tol));
}

Estimate mrc_cdf(double rho, const DiversityConfig& config, Tolerance tol) {
  return combined_cdf(rho, config, tol, Combiner::mrc);
}

Estimate mrc_lcr(double rho, const DiversityConfig& config, Tolerance tol) {
  return combined_lcr(rho, config, tol, Combiner::mrc);
}

Estimate mrc_afd(double rho, const DiversityConfig& config, Tolerance cdf_tol, Tolerance lcr_tol) {
  if (config.m() == 1) {
    require_scheme(config, Scheme::mrc, "mrc_afd");
    return from_flagged(model::afd_single(rho, config.branches[0], config.doppler));
  }
  return afd_from(mrc_cdf(rho, config, cdf_tol), mrc_lcr(rho, config, lcr_tol));
}

Estimate pdf(double rho, const DiversityConfig& config, Tolerance tol) {
  validate(config);
  require_level(rho, "pdf");
  const std::size_t m = config.m();
  if (m == 1) return exact(model::pdf(rho, config.branches[0]));
  if (config.scheme == Scheme::psc) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double term = model::pdf(rho, config.branches[i]);
      for (std::size_t j = 0; j < m && term != 0.0; ++j) {
        if (j != i) term *= model::cdf(rho, config.branches[j]);
      }
      sum += term;
    }
    return exact(sum);
  }
  if (rho == 0.0 || std::isinf(rho)) return exact(0.0);
  const auto branches = make_branches(config);
  const DensityProduct integrand(branches);
  const int dim = static_cast<int>(m) - 1;
  const double root_m = std::sqrt(static_cast<double>(m));
  Estimate e;
  if (config.scheme == Scheme::egc) {
    // dF/drho picks up the boundary factor sqrt(M) of the simplex extent.
    const quadrature::PointIntegrand f = [&integrand](std::span<const double> x, double u1) {
      return integrand(x, u1);
    };
    e = from_result(quadrature::integrate_simplex(f, dim, root_m * rho, scaled(tol, root_m)), root_m);
  } else {
    const quadrature::PointIntegrand f = [&integrand](std::span<const double> x, double u1) {
      return integrand(x, u1) / u1;
    };
    e = from_result(quadrature::integrate_ball_orthant(f, dim, rho, scaled(tol, rho), true), rho);
  }
  e.warning = singular_point_warning(rho, config);
  return e;
}

Estimate cdf(double rho, const DiversityConfig& config, Tolerance tol) {
  switch (config.scheme) {
    case Scheme::none:
      validate(config);
      require_level(rho, "cdf");
      return exact(model::cdf(rho, config.branches[0]));
    case Scheme::psc: return exact(psc_cdf(rho, config));
    case Scheme::egc: return egc_cdf(rho, config, tol);
    case Scheme::mrc: return mrc_cdf(rho, config, tol);
  }
  throw std::invalid_argument("unknown scheme");
}

Estimate lcr(double rho, const DiversityConfig& config, Tolerance tol) {
  switch (config.scheme) {
    case Scheme::none:
      validate(config);
      require_level(rho, "lcr");
      return exact(model::lcr_single(rho, config.branches[0], config.doppler));
    case Scheme::psc: return exact(psc_lcr(rho, config));
    case Scheme::egc: return egc_lcr(rho, config, tol);
    case Scheme::mrc: return mrc_lcr(rho, config, tol);
  }
  throw std::invalid_argument("unknown scheme");
}

Estimate afd(double rho, const DiversityConfig& config, Tolerance cdf_tol, Tolerance lcr_tol) {
  switch (config.scheme) {
    case Scheme::none:
      validate(config);
      require_level(rho, "afd");
      return from_flagged(model::afd_single(rho, config.branches[0], config.doppler));
    case Scheme::psc: return from_flagged(psc_afd(rho, config));
    case Scheme::egc: return egc_afd(rho, config, cdf_tol, lcr_tol);
    case Scheme::mrc: return mrc_afd(rho, config, cdf_tol, lcr_tol);
  }
  throw std::invalid_argument("unknown scheme");
}

std::string singular_point_warning(double rho, const DiversityConfig& config) {
  if ((config.scheme != Scheme::egc && config.scheme != Scheme::mrc) || config.m() < 2) return {};
  const double upper = config.scheme == Scheme::egc ? std::sqrt(static_cast<double>(config.m())) * rho : rho;
  std::string out;
  for (std::size_t i = 0; i < config.m(); ++i) {
    if (config.branches[i].s <= 1.0) continue;
    const double stationary = model::Branch(config.branches[i]).stationary_point();
    if (stationary < upper) {
      if (!out.empty()) out += "; ";
      out += "branch " + std::to_string(i + 1) + ": g' vanishes at rho* = " + std::to_string(stationary) +
             " inside the integration domain (integrand evaluated in fused form)";
    }
  }
  return out;
}

std::string_view to_string(PointStatus status) {
  switch (status) {
    case PointStatus::ok: return "ok";
    case PointStatus::not_converged: return "not_converged";
    case PointStatus::undefined: return "undefined";
    case PointStatus::failed: return "failed";
  }
  return "unknown";
}

bool StatCurve::all_ok() const {
  return std::all_of(status.begin(), status.end(), [](PointStatus s) { return s == PointStatus::ok; });
}

StatCurve curve(const DiversityConfig& config, const std::vector<double>& levels, const CurveOptions& options) {
  validate(config);
  const std::size_t n = levels.size();
  StatCurve out;
  out.levels = levels;
  out.cdf.assign(n, kNaN);
  out.lcr.assign(n, kNaN);
  out.afd.assign(n, kNaN);
  out.cdf_err.assign(n, 0.0);
  out.lcr_err.assign(n, 0.0);
  out.err_est.assign(n, 0.0);
  out.status.assign(n, PointStatus::ok);
  std::vector<std::string> notes(n);

  const auto evaluate = [&](std::size_t k) {
    const double rho = levels[k];
    try {
      const Estimate c = cdf(rho, config, options.cdf_tol);
      const Estimate l = lcr(rho, config, options.lcr_tol);
      const bool closed = config.scheme == Scheme::none || config.scheme == Scheme::psc || config.m() == 1;
      const Estimate a = closed ? afd(rho, config, options.cdf_tol, options.lcr_tol) : afd_from(c, l);
      out.cdf[k] = c.value;
      out.lcr[k] = l.value;
      out.afd[k] = a.value;
      out.cdf_err[k] = c.err_est;
      out.lcr_err[k] = l.err_est;
      out.err_est[k] = std::fmax(c.err_est, l.err_est);
      if (!c.converged || !l.converged) {
        out.status[k] = PointStatus::not_converged;
      } else if (a.flag == ValueFlag::undefined) {
        out.status[k] = PointStatus::undefined;
      }
      notes[k] = l.warning;
    } catch (const std::exception& err) {
      out.status[k] = PointStatus::failed;
      notes[k] = "level " + std::to_string(rho) + ": " + err.what();
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t k = 0; k < n; ++k) evaluate(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) evaluate(k);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (const auto& note : notes) {
    if (!note.empty() && std::find(out.warnings.begin(), out.warnings.end(), note) == out.warnings.end()) {
      out.warnings.push_back(note);
    }
  }
  return out;
}

}  // namespace diversity
}  // namespace logmu
