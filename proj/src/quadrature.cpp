#include "logmu/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace logmu::quadrature {
namespace {

// Kronrod abscissae and weights (15 points), and the embedded 7-point Gauss
// weights for kXgk[1], kXgk[3], kXgk[5] and the centre.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kHalfPi = std::numbers::pi / 2.0;

// tanh-sinh parameters. At |t| = kDeRange the endpoint gap is e^-700 of the
// interval width. Tails are cut once a coarse-grid term falls below
// kTailCut times the running sum of magnitudes.
const double kDeRange = std::asinh(700.0 / std::numbers::pi);
constexpr int kDeMinTail = 3;
constexpr double kTailCut = 1e-20;
constexpr int kDeMaxLevel = 8;
constexpr double kDropGap = 1e-30;

struct Sample {
  double value = 0.0;
  double err = 0.0;  // error of an inner integral, carried to the outer estimate
};

struct Budget {
  std::size_t max = 0;
  std::size_t used = 0;
  bool exhausted() const { return used >= max; }
};

struct Outcome {
  double value = 0.0;
  double err = 0.0;  // this level's discretization error
  double aux = 0.0;  // propagated inner error
  bool converged = true;
};

double roundoff_target(const Tolerance& tol, double value, double resabs) {
  return std::fmax(tol.target(value), 100.0 * kEps * resabs);
}

// ---------------------------------------------------------------------------
// Globally adaptive Gauss-Kronrod on [a, b]; f(x, x - a, b - x) -> Sample.

struct Segment {
  double lo = 0.0;
  double hi = 0.0;
  double value = 0.0;
  double err = 0.0;
  double aux = 0.0;     // Kronrod integral of the carried inner errors
  double resabs = 0.0;  // integral of |f|
};

bool operator<(const Segment& lhs, const Segment& rhs) { return lhs.err < rhs.err; }

template <class F>
Segment kronrod(F& f, double a, double b, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const auto at = [&](double x) { return f(x, x - a, b - x); };
  std::array<double, 15> fv{};
  const Sample fc = at(center);
  double resg = fc.value * kWg[3];
  double resk = fc.value * kWgk[7];
  double aux = fc.err * kWgk[7];
  double resabs = std::fabs(resk);
  fv[14] = fc.value;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const Sample s1 = at(center - dx);
    const Sample s2 = at(center + dx);
    fv[2 * j] = s1.value;
    fv[2 * j + 1] = s2.value;
    resk += kWgk[j] * (s1.value + s2.value);
    resabs += kWgk[j] * (std::fabs(s1.value) + std::fabs(s2.value));
    aux += kWgk[j] * (s1.err + s2.err);
    if (j % 2 == 1) resg += kWg[j / 2] * (s1.value + s2.value);
  }
  const double mean = 0.5 * resk;
  double resasc = kWgk[7] * std::fabs(fv[14] - mean);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (std::fabs(fv[2 * j] - mean) + std::fabs(fv[2 * j + 1] - mean));
  }
  resasc *= half;
  resabs *= half;
  double err = std::fabs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::fmin(1.0, std::pow(200.0 * err / resasc, 1.5));
  if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) err = std::fmax(50.0 * kEps * resabs, err);
  return {lo, hi, resk * half, err, aux * half, resabs};
}

template <class F>
Outcome gauss_kronrod(F& f, double a, double b, Tolerance tol, const Limits& limits, Budget& budget) {
  std::vector<Segment> heap{kronrod(f, a, b, a, b)};
  const auto totals = [&heap](double& value, double& err, double& resabs) {
    value = err = resabs = 0.0;
    for (const auto& seg : heap) {
      value += seg.value;
      err += seg.err;
      resabs += seg.resabs;
    }
  };

  Outcome out;
  double value = 0.0;
  double err = 0.0;
  double resabs = 0.0;
  totals(value, err, resabs);
  for (std::size_t iteration = 1;; ++iteration) {
    if (!std::isfinite(value) || !std::isfinite(err)) {
      out.converged = false;
      break;
    }
    if (err <= roundoff_target(tol, value, resabs)) break;
    if (heap.size() >= limits.max_intervals || budget.exhausted()) {
      out.converged = false;
      break;
    }
    std::pop_heap(heap.begin(), heap.end());
    const Segment worst = heap.back();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      std::push_heap(heap.begin(), heap.end());
      out.converged = false;
      break;
    }
    const Segment left = kronrod(f, a, b, worst.lo, mid);
    const Segment right = kronrod(f, a, b, mid, worst.hi);
    heap.back() = left;
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
    value += left.value + right.value - worst.value;
    err += left.err + right.err - worst.err;
    resabs += left.resabs + right.resabs - worst.resabs;
    if (iteration % 32 == 0) totals(value, err, resabs);
  }
  totals(value, err, resabs);
  out.value = value;
  out.err = err;
  for (const auto& seg : heap) out.aux += seg.aux;
  return out;
}

// ---------------------------------------------------------------------------
// tanh-sinh on [a, b]: x = a + (b - a) (1 + tanh(pi/2 sinh t)) / 2, trapezoid
// rule in t with step halving. Each level reuses the previous nodes, and the
// level difference d_k gives the error estimate d_k^2 / d_{k-1}.

template <class F>
class TanhSinh {
 public:
  TanhSinh(F& f, double a, double b) : f_(f), a_(a), b_(b), width_(b - a) {}

  Outcome run(Tolerance tol, Budget& budget) {
    Outcome out;
    Sample sum = term(0.0);
    double abs_sum = std::fabs(sum.value);
    double tail = 0.0;
    for (int side : {-1, 1}) {
      int k = 1;
      for (; k <= static_cast<int>(kDeRange); ++k) {
        const Sample s = term(side * k);
        sum.value += s.value;
        sum.err += s.err;
        abs_sum += std::fabs(s.value);
        if (k >= kDeMinTail && std::fabs(s.value) <= kTailCut * abs_sum && s.err <= kTailCut * abs_sum) {
          tail += std::fabs(s.value) + s.err;
          break;
        }
      }
      (side < 0 ? left_ : right_) = std::min(k, static_cast<int>(kDeRange));
    }

    double h = 1.0;
    double previous = sum.value;
    double previous_diff = 0.0;
    for (int level = 1;; ++level) {
      if (!std::isfinite(sum.value) || !std::isfinite(sum.err)) {
        out.converged = false;
        break;
      }
      if (level > kDeMaxLevel || budget.exhausted()) {
        out.converged = false;
        out.err = std::fmax(previous_diff, std::fabs(h * sum.value));
        break;
      }
      h *= 0.5;
      for (double t = -left_ + h; t < right_; t += 2.0 * h) {
        const Sample s = term(t);
        sum.value += s.value;
        sum.err += s.err;
        abs_sum += std::fabs(s.value);
      }
      const double value = h * sum.value;
      const double diff = std::fabs(value - previous);
      previous = value;
      if (level >= 2) {
        const double estimate = (previous_diff > diff) ? diff * diff / previous_diff : diff;
        const double err = estimate + tail;
        if (err <= roundoff_target(tol, value, h * abs_sum)) {
          out.err = std::fmax(err, 100.0 * kEps * h * abs_sum);
          break;
        }
      }
      previous_diff = diff;
    }
    out.value = h * sum.value;
    out.aux = h * sum.err;
    if (!std::isfinite(out.value)) out.converged = false;
    return out;
  }

 private:
  // Weighted integrand at parameter t. Nodes whose gap to the nearest
  // endpoint rounds to zero are not evaluated, and nodes closer than kDropGap
  // (relative) whose weighted value overflows are dropped.
  Sample term(double t) {
    const double u = kHalfPi * std::sinh(t);
    const double e = std::exp(-2.0 * std::fabs(u));
    const double near = width_ * (e / (1.0 + e));
    const double far = width_ / (1.0 + e);
    const double weight = width_ * std::numbers::pi * std::cosh(t) * e / ((1.0 + e) * (1.0 + e));
    if (near <= 0.0 || weight == 0.0) return {};
    const Sample s = t < 0.0 ? f_(a_ + near, near, far) : f_(b_ - near, far, near);
    const Sample weighted{s.value * weight, s.err * weight};
    if (!(std::isfinite(weighted.value) && std::isfinite(weighted.err)) && near < kDropGap * width_) return {};
    return weighted;
  }

  F& f_;
  double a_;
  double b_;
  double width_;
  int left_ = 0;
  int right_ = 0;
};

template <class F>
Outcome tanh_sinh(F& f, double a, double b, Tolerance tol, Budget& budget) {
  return TanhSinh<F>(f, a, b).run(tol, budget);
}

void check_tolerance(const Tolerance& tol) {
  if (!(tol.abs >= 0.0) || !(tol.rel >= 0.0) || (tol.abs == 0.0 && tol.rel == 0.0)) {
    throw std::invalid_argument("tolerance needs a positive absolute or relative part");
  }
}

Tolerance outer_share(const Tolerance& tol) { return {0.9 * tol.abs, 0.9 * tol.rel}; }

Tolerance inner_share(const Tolerance& tol, double width) {
  return {width > 0.0 ? 0.1 * tol.abs / width : tol.abs, 0.1 * tol.rel};
}

class Nested {
 public:
  Nested(const PointIntegrand& f, int dim, bool ball, bool theta, const Limits& limits)
      : f_(f), x_(static_cast<std::size_t>(dim), 0.0), ball_(ball), theta_(theta) {
    budget_.max = limits.max_evals;
  }

  IntegrationResult run(double extent, Tolerance tol) {
    const Outcome out = level(static_cast<int>(x_.size()) - 1, extent, tol);
    IntegrationResult result;
    result.value = out.value;
    result.err_est = out.err + out.aux;
    result.evals = budget_.used;
    result.converged = out.converged && inner_converged_;
    return result;
  }

 private:
  // Integrates x_k over [0, upper].
  Outcome level(int k, double upper, Tolerance tol) {
    if (k == 0) return innermost(upper, tol);
    const Tolerance inner = inner_share(tol, upper);
    auto body = [&](double xk, double, double gap_hi) {
      x_[static_cast<std::size_t>(k)] = xk;
      const double next = ball_ ? std::sqrt(gap_hi * (upper + xk)) : gap_hi;
      const Outcome sub = level(k - 1, next, inner);
      if (!sub.converged) inner_converged_ = false;
      return Sample{sub.value, sub.err + sub.aux};
    };
    return tanh_sinh(body, 0.0, upper, outer_share(tol), budget_);
  }

  Outcome innermost(double upper, Tolerance tol) {
    if (ball_ && theta_) {
      auto body = [&](double, double gap_lo, double gap_hi) {
        const double sin_theta = gap_lo < 0.25 * std::numbers::pi ? std::sin(gap_lo) : std::cos(gap_hi);
        const double cos_theta = gap_hi < 0.25 * std::numbers::pi ? std::sin(gap_hi) : std::cos(gap_lo);
        x_[0] = upper * sin_theta;
        const double residual = upper * cos_theta;
        ++budget_.used;
        return Sample{f_(x_, residual) * residual, 0.0};
      };
      return tanh_sinh(body, 0.0, kHalfPi, tol, budget_);
    }
    auto body = [&](double x0, double, double gap_hi) {
      x_[0] = x0;
      const double residual = ball_ ? std::sqrt(gap_hi * (upper + x0)) : gap_hi;
      ++budget_.used;
      return Sample{f_(x_, residual), 0.0};
    };
    return tanh_sinh(body, 0.0, upper, tol, budget_);
  }

  const PointIntegrand& f_;
  std::vector<double> x_;
  bool ball_;
  bool theta_;
  Budget budget_;
  bool inner_converged_ = true;
};

void check_nested(int dim, double extent) {
  DomainSpec{DomainKind::simplex, dim, extent}.validate();
}

}  // namespace

double Tolerance::target(double value) const { return std::fmax(abs, rel * std::fabs(value)); }

void DomainSpec::validate() const {
  if (dimension < 1 || dimension > 4) throw std::invalid_argument("dimension must be in 1..4");
  if (kind == DomainKind::interval && dimension != 1) {
    throw std::invalid_argument("an interval domain is one-dimensional");
  }
  if (!(extent >= 0.0) || !std::isfinite(extent)) {
    throw std::invalid_argument("domain extent must be finite and non-negative");
  }
}

IntegrationResult integrate_1d(const Integrand1d& f, double a, double b, Tolerance tol,
                               EdgeFlags edges, const Limits& limits) {
  check_tolerance(tol);
  if (!std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("limits must be finite");
  if (a == b) return {};
  if (a > b) {
    IntegrationResult flipped = integrate_1d(f, b, a, tol, {edges.right, edges.left}, limits);
    flipped.value = -flipped.value;
    return flipped;
  }
  Budget budget{limits.max_evals, 0};
  auto body = [&](double x, double, double) {
    if ((edges.left && x <= a) || (edges.right && x >= b)) return Sample{};
    ++budget.used;
    return Sample{f(x), 0.0};
  };
  const Outcome out = (edges.left || edges.right) ? tanh_sinh(body, a, b, tol, budget)
                                                  : gauss_kronrod(body, a, b, tol, limits, budget);
  return {out.value, out.err, budget.used, out.converged};
}

IntegrationResult integrate_simplex(const PointIntegrand& f, int dim, double extent, Tolerance tol,
                                    const Limits& limits) {
  check_tolerance(tol);
  check_nested(dim, extent);
  if (extent == 0.0) return {};
  return Nested(f, dim, false, false, limits).run(extent, tol);
}

IntegrationResult integrate_ball_orthant(const PointIntegrand& f, int dim, double radius,
                                         Tolerance tol, bool boundary_singular,
                                         const Limits& limits) {
  check_tolerance(tol);
  check_nested(dim, radius);
  if (radius == 0.0) return {};
  return Nested(f, dim, true, boundary_singular, limits).run(radius, tol);
}

IntegrationResult integrate(const DomainSpec& domain, const PointIntegrand& f, Tolerance tol,
                            bool boundary_singular, const Limits& limits) {
  domain.validate();
  switch (domain.kind) {
    case DomainKind::interval:
    case DomainKind::simplex:
      return integrate_simplex(f, domain.dimension, domain.extent, tol, limits);
    case DomainKind::ball_orthant:
      return integrate_ball_orthant(f, domain.dimension, domain.extent, tol, boundary_singular, limits);
  }
  throw std::invalid_argument("unknown domain kind");
}

}  // namespace logmu::quadrature
