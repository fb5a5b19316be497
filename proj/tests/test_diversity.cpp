#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "diversity_reference.inc"
#include "figure_params.hpp"
#include "logmu/diversity.hpp"

using logmu::BranchParams;
using logmu::DiversityConfig;
using logmu::DopplerParams;
using logmu::Scheme;
using logmu::ValueFlag;
namespace diversity = logmu::diversity;
namespace model = logmu::model;
namespace testing = logmu::testing;
using logmu::quadrature::Tolerance;

namespace {

// Oracle crossing rates are tabulated for f_d = 1 Hz.
const DopplerParams kUnitFd = DopplerParams::from_hz(1.0);
constexpr Tolerance kTight{0.0, 1e-8};

double rel_err(double got, double want) {
  if (want == 0.0) return std::fabs(got);
  return std::fabs(got - want) / std::fabs(want);
}

DiversityConfig config(Scheme scheme, std::vector<BranchParams> branches, DopplerParams doppler = kUnitFd) {
  return {std::move(branches), scheme, doppler};
}

DiversityConfig twin(Scheme scheme, BranchParams p) { return config(scheme, {p, p}); }

void check_against(Scheme scheme, BranchParams p, std::span<const double> cdf_ref,
                   std::span<const double> lcr_ref) {
  const auto cfg = twin(scheme, p);
  for (std::size_t k = 0; k < std::size(kOracleLevelsDb); ++k) {
    const double rho = model::from_db(kOracleLevelsDb[k]);
    CAPTURE(rho);
    const auto c = diversity::cdf(rho, cfg, kTight);
    const auto l = diversity::lcr(rho, cfg, kTight);
    CHECK(c.converged);
    CHECK(l.converged);
    CHECK(rel_err(c.value, cdf_ref[k]) <= 1e-4);
    CHECK(rel_err(l.value, lcr_ref[k]) <= 1e-4);
  }
}

std::vector<BranchParams> mixed_branches(std::size_t m) {
  const std::vector<BranchParams> pool = {{1.5, 1.0, 1.5}, {2.0, 0.5, 2.0}, {3.0, 2.0, 1.0}, {1.0, -1.0, 0.8}};
  return {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m)};
}

}  // namespace

TEST_CASE("scheme names round trip") {
  for (Scheme s : {Scheme::none, Scheme::psc, Scheme::egc, Scheme::mrc}) {
    CHECK(logmu::parse_scheme(logmu::to_string(s)) == s);
  }
  CHECK(logmu::parse_scheme("EGC") == Scheme::egc);
  CHECK_THROWS_AS(logmu::parse_scheme("sc"), std::invalid_argument);
}

TEST_CASE("validation names the offending branch") {
  CHECK_THROWS_AS(diversity::validate(config(Scheme::psc, {})), logmu::constraint_error);
  CHECK_THROWS_AS(diversity::validate(config(Scheme::none, {testing::kFig1, testing::kFig1})), logmu::constraint_error);
  CHECK_THROWS_AS(diversity::validate(config(Scheme::egc, std::vector<BranchParams>(6, testing::kFig1))),
                  logmu::constraint_error);
  try {
    diversity::validate(config(Scheme::mrc, {testing::kFig1, {2.0, 2.0, 1.0}}));
    FAIL("expected constraint_error");
  } catch (const logmu::constraint_error& err) {
    CHECK(std::string(err.what()).find("branch 2") != std::string::npos);
  }
  CHECK_THROWS_AS(diversity::egc_cdf(1.0, twin(Scheme::mrc, testing::kFig1)), std::invalid_argument);
  CHECK_THROWS_AS(diversity::psc_lcr(-1.0, twin(Scheme::psc, testing::kFig1)), std::domain_error);
}

TEST_CASE("two-branch EGC matches brute-force references") {
  check_against(Scheme::egc, testing::kFig1, kEgcCdfFig1, kEgcLcrOverFdFig1);
  check_against(Scheme::egc, testing::kFig6Egc, kEgcCdfFig6Egc, kEgcLcrOverFdFig6Egc);
  check_against(Scheme::egc, testing::kFig6Mrc, kEgcCdfFig6Mrc, kEgcLcrOverFdFig6Mrc);
}

TEST_CASE("two-branch MRC matches brute-force references") {
  check_against(Scheme::mrc, testing::kFig1, kMrcCdfFig1, kMrcLcrOverFdFig1);
  check_against(Scheme::mrc, testing::kFig6Egc, kMrcCdfFig6Egc, kMrcLcrOverFdFig6Egc);
  check_against(Scheme::mrc, testing::kFig6Mrc, kMrcCdfFig6Mrc, kMrcLcrOverFdFig6Mrc);
}

TEST_CASE("MRC crossing rate with a boundary-divergent integrand stays finite") {
  const auto cfg = twin(Scheme::mrc, {1.5, 1.0, 0.5});
  for (std::size_t k = 0; k < std::size(kSingularLevels); ++k) {
    const auto l = diversity::lcr(kSingularLevels[k], cfg, kTight);
    CAPTURE(kSingularLevels[k]);
    CHECK(std::isfinite(l.value));
    CHECK(l.converged);
    CHECK(rel_err(l.value, kMrcLcrOverFdSingular[k]) <= 1e-4);
  }
}

TEST_CASE("bimodal branches: EGC through the stationary point") {
  const auto cfg = twin(Scheme::egc, testing::kBimodal);
  for (std::size_t k = 0; k < std::size(kBimodalLevels); ++k) {
    const double rho = kBimodalLevels[k];
    CAPTURE(rho);
    const auto l = diversity::lcr(rho, cfg, kTight);
    const auto c = diversity::cdf(rho, cfg, kTight);
    CHECK(rel_err(l.value, kEgcLcrOverFdBimodal[k]) <= 1e-4);
    CHECK(rel_err(c.value, kEgcCdfBimodal[k]) <= 1e-4);
    // rho* = 1 is inside [0, sqrt(2) rho] once rho > 1 / sqrt(2).
    CHECK(l.warning.empty() == (rho < 1.0 / std::numbers::sqrt2));
  }
}

TEST_CASE("single branch reduces to the branch statistics") {
  const DopplerParams doppler = DopplerParams::from_hz(50.0);
  for (const auto& p : testing::figure_parameter_sets()) {
    for (Scheme scheme : {Scheme::none, Scheme::psc, Scheme::egc, Scheme::mrc}) {
      const auto cfg = config(scheme, {p}, doppler);
      for (double rho : {0.1, 0.7, 1.3, 3.0}) {
        CHECK(rel_err(diversity::cdf(rho, cfg).value, model::cdf(rho, p)) <= 1e-10);
        CHECK(rel_err(diversity::lcr(rho, cfg).value, model::lcr_single(rho, p, doppler)) <= 1e-10);
        CHECK(rel_err(diversity::afd(rho, cfg).value, model::afd_single(rho, p, doppler).value) <= 1e-10);
      }
    }
  }
}

TEST_CASE("PSC fade duration is consistent with cdf / lcr") {
  const DopplerParams doppler = DopplerParams::from_hz(20.0);
  for (std::size_t m = 2; m <= 4; ++m) {
    const auto cfg = config(Scheme::psc, mixed_branches(m), doppler);
    for (double db = -20.0; db <= 10.0; db += 2.5) {
      const double rho = model::from_db(db);
      const double ratio = diversity::psc_cdf(rho, cfg) / diversity::psc_lcr(rho, cfg);
      CAPTURE(m);
      CAPTURE(db);
      CHECK(rel_err(diversity::psc_afd(rho, cfg).value, ratio) <= 1e-10);
    }
  }
  const auto at_zero = diversity::psc_afd(0.0, config(Scheme::psc, mixed_branches(2)));
  CHECK(at_zero.flag == ValueFlag::undefined);
}

TEST_CASE("PSC sweep is finite over a wide range") {
  const auto cfg = config(Scheme::psc, mixed_branches(4), DopplerParams::from_hz(100.0));
  for (double db = -30.0; db <= 10.0; db += 0.5) {
    const double rho = model::from_db(db);
    CHECK(std::isfinite(diversity::psc_cdf(rho, cfg)));
    CHECK(std::isfinite(diversity::psc_lcr(rho, cfg)));
    CHECK(std::isfinite(diversity::psc_afd(rho, cfg).value));
  }
}

TEST_CASE("statistics do not depend on branch order") {
  for (Scheme scheme : {Scheme::psc, Scheme::egc, Scheme::mrc}) {
    auto forward = mixed_branches(3);
    auto backward = std::vector<BranchParams>(forward.rbegin(), forward.rend());
    const auto a = config(scheme, forward);
    const auto b = config(scheme, backward);
    for (double rho : {0.3, 1.0, 1.8}) {
      CAPTURE(rho);
      CHECK(rel_err(diversity::cdf(rho, a, {0, 1e-8}).value, diversity::cdf(rho, b, {0, 1e-8}).value) <= 1e-6);
      CHECK(rel_err(diversity::lcr(rho, a, {0, 1e-8}).value, diversity::lcr(rho, b, {0, 1e-8}).value) <= 1e-6);
    }
  }
}

TEST_CASE("combined cdf approaches one at large levels") {
  // Every branch below rho / sqrt(M) implies the combiner output is below rho.
  for (Scheme scheme : {Scheme::psc, Scheme::egc, Scheme::mrc}) {
    for (std::size_t m = 2; m <= 3; ++m) {
      const auto branches = mixed_branches(m);
      double rho = 1.0;
      double bound = 0.0;
      while (bound < 1.0 - 1e-7) {
        rho *= 2.0;
        bound = 1.0;
        for (const auto& p : branches) bound *= model::cdf(rho / std::sqrt(static_cast<double>(m)), p);
      }
      CAPTURE(rho);
      const auto c = diversity::cdf(rho, config(scheme, branches));
      CHECK(c.value >= bound - 1e-6);
      CHECK(c.value <= 1.0);
    }
  }
}

TEST_CASE("deep-fade crossing rates order as PSC >= EGC >= MRC") {
  const double rho = model::from_db(-20.0);
  for (std::size_t m = 2; m <= 3; ++m) {
    const auto branches = mixed_branches(m);
    const double psc = diversity::lcr(rho, config(Scheme::psc, branches), kTight).value;
    const double egc = diversity::lcr(rho, config(Scheme::egc, branches), kTight).value;
    const double mrc = diversity::lcr(rho, config(Scheme::mrc, branches), kTight).value;
    CAPTURE(m);
    CHECK(psc >= egc);
    CHECK(egc >= mrc);
  }
}

TEST_CASE("MRC fades are no longer than EGC fades in deep fades") {
  const double rho = model::from_db(-15.0);
  for (double mu : {0.5, 1.0, 1.5, 2.0, 3.0}) {
    const std::vector<BranchParams> branches{{1.5, 1.0, mu}, {1.5, 1.0, mu}};
    const double egc = diversity::afd(rho, config(Scheme::egc, branches), kTight, kTight).value;
    const double mrc = diversity::afd(rho, config(Scheme::mrc, branches), kTight, kTight).value;
    CAPTURE(mu);
    CHECK(mrc <= egc);
  }
}

TEST_CASE("more branches: fewer deep-fade crossings, more crossings at high levels") {
  const BranchParams p{1.5, 1.0, 1.5};
  for (Scheme scheme : {Scheme::psc, Scheme::egc, Scheme::mrc}) {
    const auto two = config(scheme, {p, p});
    const auto four = config(scheme, {p, p, p, p});
    const Tolerance tol{0.0, 1e-6};
    CAPTURE(logmu::to_string(scheme));
    CHECK(diversity::lcr(model::from_db(-20.0), four, tol).value < diversity::lcr(model::from_db(-20.0), two, tol).value);
    CHECK(diversity::lcr(model::from_db(10.0), four, tol).value > diversity::lcr(model::from_db(10.0), two, tol).value);
  }
}

TEST_CASE("curve: afd * lcr = cdf, afd increasing, lcr unimodal") {
  for (Scheme scheme : {Scheme::psc, Scheme::egc, Scheme::mrc}) {
    const auto cfg = twin(scheme, testing::kFig1);
    std::vector<double> levels;
    for (double db = -20.0; db <= 6.0; db += 2.0) levels.push_back(model::from_db(db));
    diversity::CurveOptions options;
    options.threads = 2;
    const auto c = diversity::curve(cfg, levels, options);
    REQUIRE(c.size() == levels.size());
    CHECK(c.all_ok());
    std::size_t peak = 0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      CHECK(rel_err(c.afd[k] * c.lcr[k], c.cdf[k]) <= 1e-12);
      CHECK(c.err_est[k] == std::fmax(c.cdf_err[k], c.lcr_err[k]));
      if (k > 0) CHECK(c.afd[k] > c.afd[k - 1]);
      if (c.lcr[k] > c.lcr[peak]) peak = k;
    }
    for (std::size_t k = 1; k <= peak; ++k) CHECK(c.lcr[k] >= c.lcr[k - 1]);
    for (std::size_t k = peak + 1; k < c.size(); ++k) CHECK(c.lcr[k] <= c.lcr[k - 1]);
  }
}

TEST_CASE("curve records per-level failures without aborting") {
  const auto cfg = twin(Scheme::egc, testing::kFig1);
  const auto c = diversity::curve(cfg, {0.5, -1.0, 0.0, 1.0});
  CHECK(c.status[0] == diversity::PointStatus::ok);
  CHECK(c.status[1] == diversity::PointStatus::failed);
  CHECK(c.status[2] == diversity::PointStatus::undefined);
  CHECK(c.status[3] == diversity::PointStatus::ok);
  CHECK(!c.warnings.empty());
}

TEST_CASE("threaded and serial curves agree exactly") {
  const auto cfg = config(Scheme::mrc, mixed_branches(3));
  const std::vector<double> levels{0.2, 0.5, 1.0, 1.5, 2.5};
  diversity::CurveOptions serial;
  diversity::CurveOptions threaded;
  threaded.threads = 3;
  const auto a = diversity::curve(cfg, levels, serial);
  const auto b = diversity::curve(cfg, levels, threaded);
  CHECK(a.cdf == b.cdf);
  CHECK(a.lcr == b.lcr);
  CHECK(a.afd == b.afd);
}

TEST_CASE("combined density is the derivative of the combined cdf") {
  for (Scheme scheme : {Scheme::psc, Scheme::egc, Scheme::mrc}) {
    for (std::size_t m = 2; m <= 3; ++m) {
      const auto cfg = config(scheme, mixed_branches(m));
      for (double rho : {0.4, 1.1, 2.3}) {
        const double h = 1e-3 * rho;
        const double slope =
            (diversity::cdf(rho + h, cfg, {0, 1e-11}).value - diversity::cdf(rho - h, cfg, {0, 1e-11}).value) / (2 * h);
        const auto f = diversity::pdf(rho, cfg, {0, 1e-9});
        CAPTURE(logmu::to_string(scheme));
        CAPTURE(m);
        CAPTURE(rho);
        CHECK(f.converged);
        CHECK(rel_err(f.value, slope) <= 1e-4);
      }
    }
  }
  CHECK(diversity::pdf(0.0, twin(Scheme::egc, testing::kFig1)).value == 0.0);
  const auto single = config(Scheme::mrc, {testing::kFig1});
  CHECK(diversity::pdf(0.8, single).value == model::pdf(0.8, testing::kFig1));
}
