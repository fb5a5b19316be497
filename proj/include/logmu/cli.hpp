#ifndef LOGMU_CLI_HPP
#define LOGMU_CLI_HPP

// Command-line surface of the logmu tool. Everything the executable does is
// reachable from here so that it can be tested in-process.

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "logmu/diversity.hpp"
#include "logmu/sim.hpp"

namespace logmu::cli {

enum class Command { pdf, cdf, lcr, afd, curve, simulate, compare };
enum class Format { csv, json };

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kConstraint = 3,
  kNotConverged = 4,
  kComparisonFailed = 5,
};

class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LevelGrid {
  bool db = true;  ///< start/stop in envelope dB (20 log10 rho)
  double start = -30.0;
  double stop = 10.0;
  int count = 81;

  /// Normalized levels, evenly spaced in dB or linearly.
  std::vector<double> levels() const;
};

/// Parses "start:stop:count"; count must be >= 2. Throws usage_error.
LevelGrid parse_grid(const std::string& text, bool db);
/// Parses "alpha:s:mu[,alpha:s:mu...]". Throws usage_error.
std::vector<BranchParams> parse_branches(const std::string& text);

struct RunSpec {
  Command command = Command::curve;
  DiversityConfig config;
  LevelGrid grid;
  sim::SimConfig sim;
  double tol = 1e-6;
  unsigned threads = 1;
  Format format = Format::csv;
  std::string out;  ///< empty for standard output
};

/// Thrown by parse_args for --help; what() is the help text.
class help_request : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws usage_error for malformed input and constraint_error for
/// parameter violations.
RunSpec parse_args(int argc, const char* const* argv);

struct Row {
  double level = 0.0;
  double level_db = 0.0;
  double cdf = 0.0;
  double lcr = 0.0;
  double lcr_over_fd = 0.0;
  double afd = 0.0;
  double afd_times_fd = 0.0;
  double err_est = 0.0;
  std::optional<double> ci_halfwidth;
};

std::vector<Row> rows_from(const diversity::StatCurve& curve, double f_d);
std::vector<Row> rows_from(const std::vector<sim::EmpiricalStats>& stats, double f_d);

/// A table with named columns, emitted with 17 significant digits.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

Table to_table(const std::vector<Row>& rows);
void emit(std::ostream& out, const Table& table, Format format);
void emit(std::ostream& out, const std::vector<Row>& rows, Format format);

struct Comparison {
  std::vector<Row> empirical;
  std::vector<Row> analytic;
  std::vector<double> rel_dev;  ///< |N_emp - N| / N, NaN where N = 0
  std::vector<bool> gated;      ///< analytic N / f_d >= kGateLcrOverFd
  bool pass = true;
  std::string diagnostics;
  bool converged = true;

  Table table() const;
};

inline constexpr double kGateLcrOverFd = 1e-2;
inline constexpr double kMaxRelDev = 0.10;

inline constexpr double kSignificanceZ = 3.29;

/// Analytic curve (config.doppler) against simulation (sim.f_d) on the same
/// levels. A gated level fails when |N_emp - N| > 0.1 N + 3.29 sigma, sigma
/// being the empirical standard error, i.e. when the deviation lies outside
/// the 10% band by more than the sampling error.
Comparison compare(const DiversityConfig& config, const sim::SimConfig& sim, const std::vector<double>& levels,
                   const diversity::CurveOptions& options = {});

/// Executes a parsed command, writing results to `out` and diagnostics to
/// `err`. Returns an exit code.
int execute(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// Replaces the level_db column with the exact grid values of a dB grid.
void apply_grid_db(Table& table, const LevelGrid& grid);

/// Full entry point: parsing, execution and error mapping.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace logmu::cli

#endif  // LOGMU_CLI_HPP
