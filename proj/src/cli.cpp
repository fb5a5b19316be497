#include "logmu/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

namespace logmu::cli {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double to_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw usage_error("malformed " + what + ": '" + text + "'");
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string json_number(double v) { return std::isfinite(v) ? format_number(v) : "null"; }

Command parse_command(const std::string& name) {
  if (name == "pdf") return Command::pdf;
  if (name == "cdf") return Command::cdf;
  if (name == "lcr") return Command::lcr;
  if (name == "afd") return Command::afd;
  if (name == "curve") return Command::curve;
  if (name == "simulate") return Command::simulate;
  if (name == "compare") return Command::compare;
  throw usage_error("unknown command '" + name + "'");
}

diversity::CurveOptions curve_options(const RunSpec& spec) {
  diversity::CurveOptions options;
  options.cdf_tol = {spec.tol, 0.0};
  options.lcr_tol = {spec.tol, spec.tol};
  options.threads = spec.threads;
  return options;
}

struct SingleStat {
  Table table;
  bool converged = true;
  std::vector<std::string> warnings;
};

SingleStat single_statistic(const RunSpec& spec, const std::vector<double>& levels) {
  const auto options = curve_options(spec);
  const double f_d = spec.config.doppler.f_d();
  SingleStat out;
  switch (spec.command) {
    case Command::pdf: out.table.columns = {"level", "level_db", "pdf", "err_est"}; break;
    case Command::cdf: out.table.columns = {"level", "level_db", "cdf", "err_est"}; break;
    case Command::lcr: out.table.columns = {"level", "level_db", "lcr", "lcr_over_fd", "err_est"}; break;
    default: out.table.columns = {"level", "level_db", "afd", "afd_times_fd", "err_est"}; break;
  }
  for (double rho : levels) {
    diversity::Estimate e;
    switch (spec.command) {
      case Command::pdf: e = diversity::pdf(rho, spec.config, options.lcr_tol); break;
      case Command::cdf: e = diversity::cdf(rho, spec.config, options.cdf_tol); break;
      case Command::lcr: e = diversity::lcr(rho, spec.config, options.lcr_tol); break;
      default: e = diversity::afd(rho, spec.config, options.cdf_tol, options.lcr_tol); break;
    }
    out.converged = out.converged && e.converged;
    if (!e.warning.empty() && std::find(out.warnings.begin(), out.warnings.end(), e.warning) == out.warnings.end()) {
      out.warnings.push_back(e.warning);
    }
    std::vector<double> row{rho, model::to_db(rho), e.value};
    if (spec.command == Command::lcr) row.push_back(e.value / f_d);
    if (spec.command == Command::afd) row.push_back(e.value * f_d);
    row.push_back(e.err_est);
    out.table.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::vector<double> LevelGrid::levels() const {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double x = i == count - 1 ? stop : start + (stop - start) * i / (count - 1);
    out[static_cast<std::size_t>(i)] = db ? model::from_db(x) : x;
  }
  return out;
}

LevelGrid parse_grid(const std::string& text, bool db) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw usage_error("level grid must be start:stop:count, got '" + text + "'");
  LevelGrid grid;
  grid.db = db;
  grid.start = to_number(parts[0], "grid start");
  grid.stop = to_number(parts[1], "grid stop");
  const double count = to_number(parts[2], "grid count");
  if (count != std::floor(count) || count < 2 || count > 1e7) {
    throw usage_error("grid count must be an integer >= 2, got '" + parts[2] + "'");
  }
  grid.count = static_cast<int>(count);
  if (!(grid.stop > grid.start)) throw usage_error("grid stop must exceed start");
  if (!db && grid.start < 0.0) throw usage_error("linear levels must be >= 0");
  return grid;
}

std::vector<BranchParams> parse_branches(const std::string& text) {
  std::vector<BranchParams> out;
  for (const auto& triple : split(text, ',')) {
    const auto parts = split(triple, ':');
    if (parts.size() != 3) throw usage_error("branch must be alpha:s:mu, got '" + triple + "'");
    out.push_back({to_number(parts[0], "alpha"), to_number(parts[1], "s"), to_number(parts[2], "mu")});
  }
  return out;
}

RunSpec parse_args(int argc, const char* const* argv) {
  CLI::App app{"Log-mu fading: first- and second-order statistics under diversity combining", "logmu"};
  std::string command;
  std::string scheme = "none";
  std::vector<std::string> branches;
  int m = 0;
  double fd = 50.0;
  std::string levels_db;
  std::string levels;
  RunSpec spec;
  std::string format = "csv";

  app.add_option("command", command, "pdf | cdf | lcr | afd | curve | simulate | compare")
      ->required()
      ->check(CLI::IsMember({"pdf", "cdf", "lcr", "afd", "curve", "simulate", "compare"}));
  app.add_option("--scheme", scheme, "none | psc | egc | mrc")
      ->check(CLI::IsMember({"none", "psc", "egc", "mrc"}, CLI::ignore_case));
  app.add_option("--branches", branches, "alpha:s:mu[,alpha:s:mu...]; repeatable")->required();
  app.add_option("--m", m, "number of branches when a single triple is broadcast");
  app.add_option("--fd", fd, "maximum Doppler shift in Hz");
  auto* db_opt = app.add_option("--levels-db", levels_db, "start:stop:count in envelope dB");
  auto* lin_opt = app.add_option("--levels", levels, "start:stop:count of normalized envelope");
  db_opt->excludes(lin_opt);
  app.add_option("--tol", spec.tol, "quadrature tolerance");
  app.add_option("--seed", spec.sim.seed, "simulation seed");
  app.add_option("--oversample", spec.sim.oversample, "samples per Doppler period");
  app.add_option("--cycles", spec.sim.duration_cycles, "simulated Doppler periods");
  app.add_option("--threads", spec.threads, "levels evaluated concurrently");
  app.add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", spec.out, "output file (default: standard output)");
  app.set_config("--config", "", "file of key=value lines using the long flag names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw help_request(app.help());
  } catch (const CLI::ParseError& e) {
    throw usage_error(e.what());
  }

  spec.command = parse_command(command);
  spec.config.scheme = parse_scheme(scheme);
  if (db_opt->count() == 0 && lin_opt->count() == 0) throw usage_error("one of --levels-db or --levels is required");
  spec.grid = db_opt->count() > 0 ? parse_grid(levels_db, true) : parse_grid(levels, false);
  for (const auto& b : branches) {
    const auto parsed = parse_branches(b);
    spec.config.branches.insert(spec.config.branches.end(), parsed.begin(), parsed.end());
  }
  if (m < 0) throw usage_error("--m must be positive");
  if (m > 0) {
    if (spec.config.branches.size() == 1) {
      spec.config.branches.assign(static_cast<std::size_t>(m), spec.config.branches.front());
    } else if (spec.config.branches.size() != static_cast<std::size_t>(m)) {
      throw usage_error("--m " + std::to_string(m) + " does not match the " +
                        std::to_string(spec.config.branches.size()) + " branches given");
    }
  }
  if (spec.threads < 1) throw usage_error("--threads must be at least 1");
  if (!(spec.tol > 0.0)) throw usage_error("--tol must be positive");
  spec.format = format == "json" ? Format::json : Format::csv;
  spec.config.doppler = DopplerParams::from_hz(fd);
  spec.sim.f_d = fd;

  diversity::validate(spec.config);
  if (spec.command == Command::simulate || spec.command == Command::compare) {
    sim::validate(spec.sim);
    for (std::size_t i = 0; i < spec.config.m(); ++i) {
      try {
        sim::require_simulable(spec.config.branches[i]);
      } catch (const constraint_error& err) {
        throw constraint_error("branch " + std::to_string(i + 1) + ": " + err.what());
      }
    }
  }
  return spec;
}

std::vector<Row> rows_from(const diversity::StatCurve& curve, double f_d) {
  std::vector<Row> rows(curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    Row& r = rows[k];
    r.level = curve.levels[k];
    r.level_db = model::to_db(r.level);
    r.cdf = curve.cdf[k];
    r.lcr = curve.lcr[k];
    r.lcr_over_fd = r.lcr / f_d;
    r.afd = curve.afd[k];
    r.afd_times_fd = r.afd * f_d;
    r.err_est = curve.err_est[k];
  }
  return rows;
}

std::vector<Row> rows_from(const std::vector<sim::EmpiricalStats>& stats, double f_d) {
  std::vector<Row> rows(stats.size());
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto& s = stats[k];
    Row& r = rows[k];
    r.level = s.level;
    r.level_db = model::to_db(s.level);
    r.cdf = s.cdf_hat;
    r.lcr = s.lcr_hat;
    r.lcr_over_fd = s.lcr_hat / f_d;
    r.afd = s.afd_hat;
    r.afd_times_fd = s.afd_hat * f_d;
    r.err_est = std::fmax(s.cdf_ci, s.lcr_ci);
    r.ci_halfwidth = s.lcr_ci;
  }
  return rows;
}

Table to_table(const std::vector<Row>& rows) {
  Table t;
  t.columns = {"level", "level_db", "cdf", "lcr", "lcr_over_fd", "afd", "afd_times_fd", "err_est"};
  const bool with_ci = std::any_of(rows.begin(), rows.end(), [](const Row& r) { return r.ci_halfwidth.has_value(); });
  if (with_ci) t.columns.emplace_back("ci_halfwidth");
  for (const auto& r : rows) {
    std::vector<double> v{r.level, r.level_db, r.cdf, r.lcr, r.lcr_over_fd, r.afd, r.afd_times_fd, r.err_est};
    if (with_ci) v.push_back(r.ci_halfwidth.value_or(kNaN));
    t.rows.push_back(std::move(v));
  }
  return t;
}

void emit(std::ostream& out, const Table& table, Format format) {
  if (format == Format::csv) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
      out << '\n';
    }
  } else {
    out << "[";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      out << (r ? ",\n " : "\n ") << "{";
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << (c ? ", " : "") << '"' << table.columns[c] << "\": " << json_number(table.rows[r][c]);
      }
      out << "}";
    }
    out << "\n]\n";
  }
  if (!out) throw std::runtime_error("failed to write output");
}

void emit(std::ostream& out, const std::vector<Row>& rows, Format format) { emit(out, to_table(rows), format); }

Table Comparison::table() const {
  Table t = to_table(empirical);
  for (const char* name : {"analytic_cdf", "analytic_lcr", "analytic_lcr_over_fd", "analytic_afd",
                           "analytic_afd_times_fd", "analytic_err_est", "rel_dev", "gated"}) {
    t.columns.emplace_back(name);
  }
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const Row& a = analytic[k];
    t.rows[k].insert(t.rows[k].end(), {a.cdf, a.lcr, a.lcr_over_fd, a.afd, a.afd_times_fd, a.err_est, rel_dev[k],
                                       gated[k] ? 1.0 : 0.0});
  }
  return t;
}

Comparison compare(const DiversityConfig& config, const sim::SimConfig& sim, const std::vector<double>& levels,
                   const diversity::CurveOptions& options) {
  const auto curve = diversity::curve(config, levels, options);
  const auto stats = sim::run(config, sim, levels);
  Comparison c;
  const double f_d = config.doppler.f_d();
  c.analytic = rows_from(curve, f_d);
  c.empirical = rows_from(stats, sim.f_d);
  c.converged = std::none_of(curve.status.begin(), curve.status.end(), [](diversity::PointStatus s) {
    return s == diversity::PointStatus::not_converged || s == diversity::PointStatus::failed;
  });

  std::size_t n_gated = 0;
  std::size_t n_failed = 0;
  std::size_t worst = levels.size();
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double ana = curve.lcr[k];
    const double emp = stats[k].lcr_hat;
    c.rel_dev.push_back(ana > 0.0 ? std::fabs(emp - ana) / ana : kNaN);
    c.gated.push_back(ana / f_d >= kGateLcrOverFd);
    if (!c.gated.back()) continue;
    ++n_gated;
    if (worst == levels.size() || c.rel_dev[k] > c.rel_dev[worst]) worst = k;
    const double sigma = stats[k].lcr_ci / 1.959963984540054;
    if (!(std::fabs(emp - ana) <= kMaxRelDev * ana + kSignificanceZ * sigma)) ++n_failed;
  }
  c.pass = n_failed == 0;

  std::ostringstream d;
  d << n_gated << " gated levels (analytic N/f_d >= " << kGateLcrOverFd << "), " << n_failed << " outside "
    << kMaxRelDev * 100 << "% beyond sampling error";
  if (worst < levels.size()) {
    char db[32];
    std::snprintf(db, sizeof db, "%.6g", model::to_db(levels[worst]));
    d << "; worst at " << db << " dB: empirical N/f_d "
      << format_number(c.empirical[worst].lcr_over_fd) << ", analytic " << format_number(c.analytic[worst].lcr_over_fd)
      << ", rel_dev " << format_number(c.rel_dev[worst]) << ", 95% half-width "
      << format_number(stats[worst].lcr_ci / sim.f_d);
  }
  c.diagnostics = d.str();
  return c;
}

void apply_grid_db(Table& table, const LevelGrid& grid) {
  if (!grid.db) return;
  const auto level_db = std::find(table.columns.begin(), table.columns.end(), "level_db");
  if (level_db == table.columns.end()) return;
  const auto col = static_cast<std::size_t>(level_db - table.columns.begin());
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const int i = static_cast<int>(k);
    table.rows[k][col] =
        i == grid.count - 1 ? grid.stop : grid.start + (grid.stop - grid.start) * i / (grid.count - 1);
  }
}

int execute(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  std::ofstream file;
  std::ostream* sink = &out;
  if (!spec.out.empty()) {
    file.open(spec.out, std::ios::binary);
    if (!file) {
      err << "error: cannot open '" << spec.out << "' for writing\n";
      return 1;
    }
    sink = &file;
  }
  const auto levels = spec.grid.levels();
  int code = kSuccess;

  switch (spec.command) {
    case Command::pdf:
    case Command::cdf:
    case Command::lcr:
    case Command::afd: {
      const auto result = single_statistic(spec, levels);
      Table table = result.table;
      apply_grid_db(table, spec.grid);
      emit(*sink, table, spec.format);
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      if (!result.converged) {
        err << "error: quadrature did not reach the requested tolerance at some levels\n";
        code = kNotConverged;
      }
      break;
    }
    case Command::curve: {
      const auto curve = diversity::curve(spec.config, levels, curve_options(spec));
      Table table = to_table(rows_from(curve, spec.config.doppler.f_d()));
      apply_grid_db(table, spec.grid);
      emit(*sink, table, spec.format);
      for (const auto& w : curve.warnings) err << "warning: " << w << '\n';
      for (std::size_t k = 0; k < curve.size(); ++k) {
        const auto s = curve.status[k];
        if (s == diversity::PointStatus::not_converged || s == diversity::PointStatus::failed) {
          err << "error: level " << format_number(levels[k]) << ": " << diversity::to_string(s) << '\n';
          code = kNotConverged;
        }
      }
      break;
    }
    case Command::simulate: {
      const auto stats = sim::run(spec.config, spec.sim, levels);
      Table table = to_table(rows_from(stats, spec.sim.f_d));
      apply_grid_db(table, spec.grid);
      emit(*sink, table, spec.format);
      break;
    }
    case Command::compare: {
      const auto c = compare(spec.config, spec.sim, levels, curve_options(spec));
      Table table = c.table();
      apply_grid_db(table, spec.grid);
      emit(*sink, table, spec.format);
      err << (c.pass ? "compare: PASS: " : "compare: FAIL: ") << c.diagnostics << '\n';
      if (!c.converged) code = kNotConverged;
      if (!c.pass) code = kComparisonFailed;
      break;
    }
  }
  sink->flush();
  if (!*sink) {
    err << "error: failed to write output\n";
    return 1;
  }
  return code;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    const RunSpec spec = parse_args(argc, argv);
    return execute(spec, out, err);
  } catch (const help_request& help) {
    out << help.what();
    return kSuccess;
  } catch (const usage_error& e) {
    err << "usage error: " << e.what() << "\nRun 'logmu --help' for usage.\n";
    return kUsage;
  } catch (const constraint_error& e) {
    err << "constraint violation: " << e.what() << '\n';
    return kConstraint;
  } catch (const std::invalid_argument& e) {
    err << "constraint violation: " << e.what() << '\n';
    return kConstraint;
  } catch (const std::domain_error& e) {
    err << "constraint violation: " << e.what() << '\n';
    return kConstraint;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace logmu::cli
