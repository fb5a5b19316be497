#include "logmu/sim.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

namespace logmu::sim {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kResyncInterval = 1024;
constexpr std::size_t kChunk = 8192;
constexpr double kZ95 = 1.959963984540054;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

double half_width(const std::vector<double>& x) {
  const std::size_t b = x.size();
  if (b < 2) return kNaN;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(b);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(b - 1));
  return kZ95 * sd / std::sqrt(static_cast<double>(b));
}

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  auto bits = std::bit_cast<std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>(bits & 0xffu);
    bits >>= 8;
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("truncated sample dump");
  U bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) bits = (bits << 8) | bytes[i];
  return std::bit_cast<T>(bits);
}

}  // namespace

double SimConfig::omega() const { return kTwoPi * f_d; }
double SimConfig::dt() const { return 1.0 / (f_d * oversample); }
std::size_t SimConfig::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration_cycles * oversample));
}

void validate(const SimConfig& sim) {
  if (!(sim.f_d > 0.0) || !std::isfinite(sim.f_d)) throw constraint_error("f_d must be positive and finite");
  if (sim.oversample < 16) throw constraint_error("oversample must be at least 16 samples per Doppler period");
  if (!(sim.duration_cycles > 0.0) || !std::isfinite(sim.duration_cycles)) {
    throw constraint_error("duration_cycles must be positive and finite");
  }
  if (sim.n_sinusoids < 64) throw constraint_error("n_sinusoids must be at least 64");
  if (sim.sample_count() < 2) throw constraint_error("simulation must produce at least two samples");
}

void require_simulable(const BranchParams& params) {
  model::validate(params);
  const double twice = 2.0 * params.mu;
  if (std::fabs(twice - std::round(twice)) > 1e-12 || std::round(twice) < 1.0) {
    throw constraint_error("simulation requires 2*mu to be a positive integer (mu = " + std::to_string(params.mu) +
                           "); use the analytic path for other values");
  }
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t branch, std::uint64_t component) {
  return splitmix64(splitmix64(splitmix64(seed) ^ branch) ^ (component + 0x632be59bd9b4e019ULL));
}

GaussianProcess::GaussianProcess(const SimConfig& sim, double variance, std::uint64_t component_seed)
    : dt_(sim.dt()) {
  validate(sim);
  if (!(variance >= 0.0)) throw std::invalid_argument("variance must be >= 0");
  const auto n = static_cast<std::size_t>(sim.n_sinusoids);
  amplitude_ = std::sqrt(2.0 * variance / static_cast<double>(n));
  std::mt19937_64 rng(component_seed);
  freq_.resize(n);
  phase_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Jittered strata over [0, pi): cos(theta) has the same law as for
    // theta uniform on [0, 2 pi), without mirror pairs of equal frequency.
    const double theta = std::numbers::pi * (static_cast<double>(i) + unit_uniform(rng)) / static_cast<double>(n);
    freq_[i] = sim.omega() * std::cos(theta);
    phase_[i] = kTwoPi * unit_uniform(rng);
  }
  cos_.resize(n);
  sin_.resize(n);
  step_cos_.resize(n);
  step_sin_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    step_cos_[i] = std::cos(freq_[i] * dt_);
    step_sin_[i] = std::sin(freq_[i] * dt_);
  }
  resync();
}

void GaussianProcess::resync() {
  const double t = static_cast<double>(next_) * dt_;
  for (std::size_t i = 0; i < freq_.size(); ++i) {
    const double arg = std::fmod(freq_[i] * t, kTwoPi) + phase_[i];
    cos_[i] = std::cos(arg);
    sin_[i] = std::sin(arg);
  }
  since_resync_ = 0;
}

void GaussianProcess::fill(std::span<double> out) {
  const std::size_t n = freq_.size();
  double* c = cos_.data();
  double* s = sin_.data();
  const double* sc = step_cos_.data();
  const double* ss = step_sin_.data();
  for (double& x : out) {
    if (since_resync_ == kResyncInterval) resync();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += c[i];
    x = amplitude_ * sum;
    for (std::size_t i = 0; i < n; ++i) {
      const double cn = c[i] * sc[i] - s[i] * ss[i];
      s[i] = s[i] * sc[i] + c[i] * ss[i];
      c[i] = cn;
    }
    ++next_;
    ++since_resync_;
  }
}

std::vector<double> gaussian_process(const SimConfig& sim, double variance, std::uint64_t component_seed) {
  GaussianProcess process(sim, variance, component_seed);
  std::vector<double> out(sim.sample_count());
  process.fill(out);
  return out;
}

EnvelopeGenerator::EnvelopeGenerator(const BranchParams& params, const SimConfig& sim, std::uint64_t branch_seed)
    : branch_((require_simulable(params), params)) {
  const auto count = static_cast<std::size_t>(std::llround(2.0 * params.mu));
  const double variance = 1.0 / (2.0 * params.mu);
  components_.reserve(count);
  for (std::size_t l = 0; l < count; ++l) components_.emplace_back(sim, variance, sub_seed(branch_seed, 0, l));
}

void EnvelopeGenerator::fill(std::span<double> out) {
  scratch_.resize(out.size());
  std::fill(out.begin(), out.end(), 0.0);
  for (auto& component : components_) {
    component.fill(scratch_);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += scratch_[k] * scratch_[k];
  }
  for (double& x : out) x = branch_.g_inverse(x);
}

std::vector<double> branch_envelope(const BranchParams& params, const SimConfig& sim, std::uint64_t branch_seed) {
  EnvelopeGenerator generator(params, sim, branch_seed);
  std::vector<double> out(sim.sample_count());
  generator.fill(out);
  return out;
}

void combine(std::span<const std::span<const double>> branches, Scheme scheme, std::span<double> out) {
  if (branches.empty()) throw std::invalid_argument("combine: no branches");
  for (const auto& b : branches) {
    if (b.size() != out.size()) throw std::invalid_argument("combine: branch sample arrays differ in length");
  }
  const std::size_t m = branches.size();
  if (scheme == Scheme::none && m != 1) throw std::invalid_argument("combine: scheme none requires one branch");
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t k = 0; k < out.size(); ++k) {
    double acc = 0.0;
    switch (scheme) {
      case Scheme::none:
        acc = branches[0][k];
        break;
      case Scheme::psc:
        acc = branches[0][k];
        for (std::size_t i = 1; i < m; ++i) acc = std::max(acc, branches[i][k]);
        break;
      case Scheme::egc:
        for (std::size_t i = 0; i < m; ++i) acc += branches[i][k];
        acc = m == 1 ? acc : acc * inv_sqrt_m;
        break;
      case Scheme::mrc:
        for (std::size_t i = 0; i < m; ++i) acc += branches[i][k] * branches[i][k];
        acc = m == 1 ? branches[0][k] : std::sqrt(acc);
        break;
    }
    out[k] = acc;
  }
}

std::vector<double> combine(const std::vector<std::vector<double>>& branches, Scheme scheme) {
  std::vector<std::span<const double>> views(branches.begin(), branches.end());
  std::vector<double> out(branches.empty() ? 0 : branches[0].size());
  combine(views, scheme, out);
  return out;
}

Estimator::Estimator(std::vector<double> levels, double dt, std::size_t total_samples)
    : levels_(std::move(levels)), dt_(dt), total_(total_samples) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("estimate: dt must be positive");
  if (total_samples < 2) throw std::invalid_argument("estimate: at least two samples are required");
  for (double rho : levels_) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw std::domain_error("estimate: levels must be finite and >= 0");
  }
  blocks_ = total_ >= 2 * kBlocks ? kBlocks : std::max<std::size_t>(1, total_ / 2);
  up_.assign(levels_.size(), std::vector<std::uint64_t>(blocks_, 0));
  below_.assign(levels_.size(), std::vector<std::uint64_t>(blocks_, 0));
  block_samples_.assign(blocks_, 0);
}

void Estimator::push(std::span<const double> samples) {
  if (seen_ + samples.size() > total_) throw std::invalid_argument("estimate: more samples than announced");
  std::size_t k = seen_;
  std::size_t j = 0;
  while (j < samples.size()) {
    // Samples [j, j + run) all fall in one block.
    const std::size_t block = k * blocks_ / total_;
    const std::size_t block_end = ((block + 1) * total_ + blocks_ - 1) / blocks_;
    const std::size_t run = std::min(samples.size() - j, block_end - k);
    block_samples_[block] += run;
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      const double rho = levels_[l];
      std::uint64_t below = 0;
      std::uint64_t up = 0;
      double prev = last_;
      for (std::size_t i = j; i < j + run; ++i) {
        const double x = samples[i];
        below += x < rho;
        // The crossing in (g - 1, g] belongs to the block of sample g - 1.
        const std::size_t g = k + (i - j);
        if (g > 0 && prev < rho && rho <= x) {
          if (i == j) {
            ++up_[l][(g - 1) * blocks_ / total_];
          } else {
            ++up;
          }
        }
        prev = x;
      }
      below_[l][block] += below;
      up_[l][block] += up;
    }
    last_ = samples[j + run - 1];
    j += run;
    k += run;
    seen_ = k;
  }
}

std::vector<EmpiricalStats> Estimator::finish() const {
  if (seen_ < 2) throw std::invalid_argument("estimate: at least two samples are required");
  const double duration = static_cast<double>(seen_) * dt_;
  std::vector<EmpiricalStats> out(levels_.size());
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    EmpiricalStats& e = out[l];
    std::uint64_t below = 0;
    for (std::size_t b = 0; b < blocks_; ++b) {
      e.upcrossings += up_[l][b];
      below += below_[l][b];
    }
    e.level = levels_[l];
    e.duration = duration;
    e.time_below = static_cast<double>(below) * dt_;
    e.lcr_hat = static_cast<double>(e.upcrossings) / duration;
    e.cdf_hat = static_cast<double>(below) / static_cast<double>(seen_);
    if (e.upcrossings == 0) {
      e.afd_hat = kNaN;
      e.afd_flag = ValueFlag::undefined;
    } else {
      e.afd_hat = e.time_below / static_cast<double>(e.upcrossings);
    }

    std::vector<double> cdf_b;
    std::vector<double> lcr_b;
    std::vector<double> resid_b;
    for (std::size_t b = 0; b < blocks_; ++b) {
      if (block_samples_[b] == 0) continue;
      const double n_b = static_cast<double>(block_samples_[b]);
      cdf_b.push_back(static_cast<double>(below_[l][b]) / n_b);
      lcr_b.push_back(static_cast<double>(up_[l][b]) / (n_b * dt_));
      if (e.upcrossings > 0) resid_b.push_back(cdf_b.back() - e.afd_hat * lcr_b.back());
    }
    e.cdf_ci = half_width(cdf_b);
    // Blocks with only a handful of crossings understate the spread; the
    // counting (Poisson) error is used as a floor.
    e.lcr_ci = std::fmax(half_width(lcr_b),
                         kZ95 * std::sqrt(std::fmax(1.0, static_cast<double>(e.upcrossings))) / duration);
    e.afd_ci = e.upcrossings > 0 ? half_width(resid_b) / e.lcr_hat : kNaN;
  }
  return out;
}

std::vector<EmpiricalStats> estimate(std::span<const double> samples, double dt, const std::vector<double>& levels) {
  Estimator estimator(levels, dt, samples.size());
  estimator.push(samples);
  return estimator.finish();
}

void write_dump_header(std::ostream& out, const DumpHeader& header) {
  out.write("LMU1", 4);
  put_le<std::uint32_t>(out, 0);
  put_le<double>(out, header.f_d);
  put_le<double>(out, header.dt);
  put_le<std::uint64_t>(out, header.count);
  if (!out) throw std::runtime_error("failed to write sample dump header");
}

void write_dump_samples(std::ostream& out, std::span<const double> samples) {
  for (double x : samples) put_le<double>(out, x);
  if (!out) throw std::runtime_error("failed to write sample dump");
}

DumpHeader read_dump(std::istream& in, std::vector<double>* samples) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || std::string(magic.data(), magic.size()) != "LMU1") throw std::runtime_error("not a sample dump");
  if (get_le<std::uint32_t>(in) != 0) throw std::runtime_error("unsupported sample dump version");
  DumpHeader header;
  header.f_d = get_le<double>(in);
  header.dt = get_le<double>(in);
  header.count = get_le<std::uint64_t>(in);
  if (samples) {
    samples->clear();
    samples->reserve(header.count);
    for (std::uint64_t i = 0; i < header.count; ++i) samples->push_back(get_le<double>(in));
  }
  return header;
}

std::vector<EmpiricalStats> run(const DiversityConfig& config, const SimConfig& sim,
                                const std::vector<double>& levels, std::ostream* dump) {
  diversity::validate(config);
  validate(sim);
  for (std::size_t i = 0; i < config.m(); ++i) {
    try {
      require_simulable(config.branches[i]);
    } catch (const constraint_error& err) {
      throw constraint_error("branch " + std::to_string(i + 1) + ": " + err.what());
    }
  }
  const std::size_t total = sim.sample_count();
  std::vector<EnvelopeGenerator> generators;
  generators.reserve(config.m());
  for (std::size_t i = 0; i < config.m(); ++i) {
    generators.emplace_back(config.branches[i], sim, sub_seed(sim.seed, i, 0));
  }
  Estimator estimator(levels, sim.dt(), total);
  if (dump) write_dump_header(*dump, {sim.f_d, sim.dt(), total});

  std::vector<std::vector<double>> chunks(config.m());
  std::vector<std::span<const double>> views(config.m());
  std::vector<double> combined;
  for (std::size_t done = 0; done < total;) {
    const std::size_t n = std::min(kChunk, total - done);
    for (std::size_t i = 0; i < config.m(); ++i) {
      chunks[i].resize(n);
      generators[i].fill(chunks[i]);
      views[i] = chunks[i];
    }
    combined.resize(n);
    combine(views, config.scheme, combined);
    if (dump) write_dump_samples(*dump, combined);
    estimator.push(combined);
    done += n;
  }
  return estimator.finish();
}

}  // namespace logmu::sim
