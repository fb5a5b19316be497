#ifndef LOGMU_SIM_HPP
#define LOGMU_SIM_HPP

// Monte Carlo channel simulator. Each branch envelope is built from 2 mu
// independent Gaussian processes with a Jakes (isotropic scattering)
// spectrum, synthesized as sums of sinusoids:
//
//   X(t) = sqrt(2 sigma0^2 / N) sum_n cos(omega t cos(theta_n) + phi_n)
//
// z = sum X_l^2 is Gamma(mu, 1/mu) distributed and rho = g^-1(z). Branches
// are combined sample-wise and the combined process is reduced to
// empirical crossing statistics in a single streaming pass.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "logmu/diversity.hpp"
#include "logmu/model.hpp"

namespace logmu::sim {

struct SimConfig {
  double f_d = 50.0;              ///< maximum Doppler shift, Hz
  int oversample = 64;            ///< samples per Doppler period, >= 16
  double duration_cycles = 5000;  ///< simulated Doppler periods
  int n_sinusoids = 256;          ///< per Gaussian component, >= 64
  std::uint64_t seed = 1;

  double omega() const;
  double dt() const;
  std::size_t sample_count() const;
};

/// Throws constraint_error.
void validate(const SimConfig& sim);

/// Rejects branches whose 2 mu is not a positive integer.
void require_simulable(const BranchParams& params);

/// Counter-based split of the master seed; distinct (branch, component)
/// pairs give statistically independent streams.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t branch, std::uint64_t component);

inline constexpr std::size_t kBlocks = 20;

struct EmpiricalStats {
  double level = 0.0;
  std::uint64_t upcrossings = 0;
  double time_below = 0.0;  ///< seconds
  double duration = 0.0;    ///< seconds
  double lcr_hat = 0.0;     ///< upcrossings per second
  double cdf_hat = 0.0;
  double afd_hat = 0.0;     ///< seconds; NaN when afd_flag is undefined
  ValueFlag afd_flag = ValueFlag::ok;
  // 95% normal-approximation half-widths from contiguous block estimates;
  // NaN when fewer than two blocks are available. The crossing-rate
  // half-width is at least the counting error 1.96 sqrt(max(1, U)) / T.
  double cdf_ci = 0.0;
  double lcr_ci = 0.0;
  double afd_ci = 0.0;
};

/// Streaming sum-of-sinusoids generator for one Gaussian component.
class GaussianProcess {
 public:
  GaussianProcess(const SimConfig& sim, double variance, std::uint64_t component_seed);

  /// Writes the next out.size() samples.
  void fill(std::span<double> out);
  std::size_t position() const { return next_; }

 private:
  void resync();

  double dt_;
  double amplitude_;
  std::vector<double> freq_;   // omega cos(theta_n)
  std::vector<double> phase_;  // phi_n
  std::vector<double> cos_;
  std::vector<double> sin_;
  std::vector<double> step_cos_;
  std::vector<double> step_sin_;
  std::size_t next_ = 0;
  std::size_t since_resync_ = 0;
};

/// sim.sample_count() samples of one component with the given variance.
std::vector<double> gaussian_process(const SimConfig& sim, double variance, std::uint64_t component_seed);

/// Streaming Log-mu envelope generator for one branch.
class EnvelopeGenerator {
 public:
  EnvelopeGenerator(const BranchParams& params, const SimConfig& sim, std::uint64_t branch_seed);

  void fill(std::span<double> out);

 private:
  model::Branch branch_;
  std::vector<GaussianProcess> components_;
  std::vector<double> scratch_;
};

std::vector<double> branch_envelope(const BranchParams& params, const SimConfig& sim, std::uint64_t branch_seed);

/// Sample-wise combiner. `none` requires exactly one branch.
void combine(std::span<const std::span<const double>> branches, Scheme scheme, std::span<double> out);
std::vector<double> combine(const std::vector<std::vector<double>>& branches, Scheme scheme);

/// Streaming estimator: counts upcrossings x[k] < rho <= x[k+1] and the
/// samples below each level, in kBlocks contiguous blocks.
class Estimator {
 public:
  Estimator(std::vector<double> levels, double dt, std::size_t total_samples);

  void push(std::span<const double> samples);
  std::vector<EmpiricalStats> finish() const;

 private:
  std::vector<double> levels_;
  double dt_;
  std::size_t total_;
  std::size_t blocks_;
  std::size_t seen_ = 0;
  double last_ = 0.0;
  // [level][block]
  std::vector<std::vector<std::uint64_t>> up_;
  std::vector<std::vector<std::uint64_t>> below_;
  std::vector<std::size_t> block_samples_;
};

std::vector<EmpiricalStats> estimate(std::span<const double> samples, double dt, const std::vector<double>& levels);

/// Raw-sample dump: 32-byte header {"LMU1", u32 0, f64 f_d, f64 dt,
/// u64 count} followed by count little-endian f64 samples.
struct DumpHeader {
  double f_d = 0.0;
  double dt = 0.0;
  std::uint64_t count = 0;
};

void write_dump_header(std::ostream& out, const DumpHeader& header);
void write_dump_samples(std::ostream& out, std::span<const double> samples);
/// Throws std::runtime_error on a malformed stream.
DumpHeader read_dump(std::istream& in, std::vector<double>* samples);

/// Per-branch envelopes (independent sub-seeds), combined and estimated in
/// one streaming pass. config.doppler is not used; the simulated Doppler
/// shift is sim.f_d. When `dump` is set the combined samples are written
/// to it.
std::vector<EmpiricalStats> run(const DiversityConfig& config, const SimConfig& sim,
                                const std::vector<double>& levels, std::ostream* dump = nullptr);

}  // namespace logmu::sim

#endif  // LOGMU_SIM_HPP
