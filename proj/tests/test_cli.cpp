#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "figure_params.hpp"
#include "json.hpp"
#include "logmu/cli.hpp"

using logmu::BranchParams;
using logmu::DiversityConfig;
using logmu::DopplerParams;
using logmu::Scheme;
namespace cli = logmu::cli;
namespace diversity = logmu::diversity;
namespace sim = logmu::sim;
namespace testing = logmu::testing;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "logmu");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Result r;
  r.code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

cli::RunSpec parse(std::vector<std::string> args) {
  args.insert(args.begin(), "logmu");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::parse_args(static_cast<int>(argv.size()), argv.data());
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string f;
  while (std::getline(in, f, ',')) out.push_back(f);
  return out;
}

double cell(const std::string& text) { return std::strtod(text.c_str(), nullptr); }

const std::vector<std::string> kExample = {"curve",         "--scheme",      "psc", "--m", "2", "--branches",
                                           "1.5:1:2",       "--fd",          "100", "--levels-db",
                                           "-20:5:11"};

}  // namespace

TEST_CASE("the documented curve invocation parses and runs") {
  const auto spec = parse(kExample);
  CHECK(spec.command == cli::Command::curve);
  CHECK(spec.config.scheme == Scheme::psc);
  REQUIRE(spec.config.m() == 2);
  CHECK(spec.config.branches[1].alpha == 1.5);
  CHECK(spec.config.branches[1].mu == 2.0);
  CHECK(spec.config.doppler.f_d() == doctest::Approx(100.0));
  CHECK(spec.grid.levels().size() == 11);

  const auto r = run(kExample);
  CHECK(r.code == cli::kSuccess);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 12);
  CHECK(rows[0] == "level,level_db,cdf,lcr,lcr_over_fd,afd,afd_times_fd,err_est");
  CHECK(fields(rows[1])[1] == "-20");
  CHECK(fields(rows[11])[1] == "5");
}

TEST_CASE("exit codes distinguish usage, constraint and help") {
  auto r = run({"curve", "--scheme", "psc", "--m", "2", "--branches", "2:2:1", "--levels-db", "-10:0:3"});
  CHECK(r.code == cli::kConstraint);
  CHECK(r.err.find("branch 1") != std::string::npos);
  CHECK(r.out.empty());

  r = run({"curve", "--branches", "2:1:2", "--levels-db", "0:0:1"});
  CHECK(r.code == cli::kUsage);
  r = run({"curve", "--branches", "2:1:2", "--levels-db", "-10:0:3", "--bogus"});
  CHECK(r.code == cli::kUsage);
  r = run({"curve", "--branches", "2:1", "--levels-db", "-10:0:3"});
  CHECK(r.code == cli::kUsage);
  r = run({"curve", "--branches", "2:1:x", "--levels-db", "-10:0:3"});
  CHECK(r.code == cli::kUsage);
  r = run({"curve", "--branches", "2:1:2"});
  CHECK(r.code == cli::kUsage);
  r = run({"curve", "--branches", "2:1:2", "--levels-db", "-10:0:3", "--levels", "0.1:1:3"});
  CHECK(r.code == cli::kUsage);
  r = run({"integrate", "--branches", "2:1:2", "--levels-db", "-10:0:3"});
  CHECK(r.code == cli::kUsage);
  r = run({"curve", "--scheme", "mrc", "--m", "3", "--branches", "2:1:2,2:1:2", "--levels-db", "-10:0:3"});
  CHECK(r.code == cli::kUsage);

  r = run({"curve", "--scheme", "mrc", "--m", "6", "--branches", "2:1:2", "--levels-db", "-10:0:3"});
  CHECK(r.code == cli::kConstraint);
  r = run({"curve", "--scheme", "none", "--m", "2", "--branches", "2:1:2", "--levels-db", "-10:0:3"});
  CHECK(r.code == cli::kConstraint);
  r = run({"simulate", "--branches", "2:1:1.25", "--levels-db", "-10:0:3"});
  CHECK(r.code == cli::kConstraint);
  r = run({"simulate", "--branches", "2:1:2", "--levels-db", "-10:0:3", "--oversample", "8"});
  CHECK(r.code == cli::kConstraint);

  r = run({"--help"});
  CHECK(r.code == cli::kSuccess);
  CHECK(r.out.find("--branches") != std::string::npos);
}

TEST_CASE("branches may be repeated or broadcast") {
  const auto a = parse({"cdf", "--scheme", "egc", "--branches", "2:1:2", "--branches", "3:1:1", "--levels", "0.5:1:2"});
  REQUIRE(a.config.m() == 2);
  CHECK(a.config.branches[0].alpha == 2.0);
  CHECK(a.config.branches[1].alpha == 3.0);

  const auto b = parse({"cdf", "--scheme", "egc", "--branches", "2:1:2,3:1:1", "--levels", "0.5:1:2"});
  REQUIRE(b.config.m() == 2);
  CHECK(b.config.branches[1].mu == 1.0);

  const auto c = parse({"cdf", "--scheme", "egc", "--m", "4", "--branches", "2:1:2", "--levels", "0.5:1:2"});
  CHECK(c.config.m() == 4);
  CHECK_FALSE(c.grid.db);
  CHECK(c.grid.levels().front() == 0.5);
  CHECK(c.grid.levels().back() == 1.0);
}

TEST_CASE("a key=value config file replaces flags") {
  const auto path = std::filesystem::temp_directory_path() / "logmu_test_cli.ini";
  {
    std::ofstream f(path);
    f << "scheme=psc\nm=2\nbranches=1.5:1:2\nfd=100\nlevels-db=-20:5:11\n";
  }
  const auto from_file = parse({"curve", "--config", path.string()});
  const auto from_flags = parse(kExample);
  CHECK(from_file.config.scheme == from_flags.config.scheme);
  CHECK(from_file.config.m() == from_flags.config.m());
  CHECK(from_file.config.doppler.omega == from_flags.config.doppler.omega);
  CHECK(from_file.grid.levels() == from_flags.grid.levels());

  const auto r = run({"curve", "--config", path.string()});
  CHECK(r.code == cli::kSuccess);
  CHECK(r.out == run(kExample).out);
  std::filesystem::remove(path);
}

TEST_CASE("csv output reproduces the library curve bit for bit") {
  const auto spec = parse(kExample);
  const auto levels = spec.grid.levels();
  diversity::CurveOptions options;
  options.cdf_tol = {spec.tol, 0.0};
  options.lcr_tol = {spec.tol, spec.tol};
  const auto curve = diversity::curve(spec.config, levels, options);

  const auto rows = lines(run(kExample).out);
  REQUIRE(rows.size() == levels.size() + 1);
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const auto f = fields(rows[k + 1]);
    REQUIRE(f.size() == 8);
    CHECK(cell(f[0]) == levels[k]);
    CHECK(cell(f[2]) == curve.cdf[k]);
    CHECK(cell(f[3]) == curve.lcr[k]);
    CHECK(cell(f[4]) == curve.lcr[k] / 100.0);
    if (std::isfinite(curve.afd[k])) CHECK(cell(f[5]) == curve.afd[k]);
    CHECK(cell(f[7]) == curve.err_est[k]);
  }
}

TEST_CASE("json output is an array of records") {
  auto args = kExample;
  args.insert(args.end(), {"--format", "json"});
  const auto r = run(args);
  REQUIRE(r.code == cli::kSuccess);
  const auto doc = nlohmann::json::parse(r.out);
  REQUIRE(doc.is_array());
  REQUIRE(doc.size() == 11);
  const auto csv = lines(run(kExample).out);
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const auto f = fields(csv[k + 1]);
    CHECK(doc[k]["level"].get<double>() == cell(f[0]));
    CHECK(doc[k]["lcr"].get<double>() == cell(f[3]));
  }
}

TEST_CASE("single-statistic commands agree with the curve") {
  const std::vector<std::string> tail = {"--scheme", "mrc", "--m", "2", "--branches", "2:1:2", "--levels-db", "-10:0:3"};
  auto with = [&](const std::string& cmd) {
    std::vector<std::string> a{cmd};
    a.insert(a.end(), tail.begin(), tail.end());
    return run(a);
  };
  const auto curve = lines(with("curve").out);
  const auto cdf = lines(with("cdf").out);
  const auto lcr = lines(with("lcr").out);
  const auto afd = lines(with("afd").out);
  const auto pdf = with("pdf");
  CHECK(pdf.code == cli::kSuccess);
  CHECK(cdf[0] == "level,level_db,cdf,err_est");
  CHECK(lcr[0] == "level,level_db,lcr,lcr_over_fd,err_est");
  CHECK(afd[0] == "level,level_db,afd,afd_times_fd,err_est");
  CHECK(lines(pdf.out)[0] == "level,level_db,pdf,err_est");
  for (std::size_t k = 1; k < curve.size(); ++k) {
    const auto c = fields(curve[k]);
    CHECK(cell(fields(cdf[k])[2]) == doctest::Approx(cell(c[2])).epsilon(1e-9));
    CHECK(cell(fields(lcr[k])[2]) == doctest::Approx(cell(c[3])).epsilon(1e-9));
    CHECK(cell(fields(afd[k])[2]) == doctest::Approx(cell(c[5])).epsilon(1e-9));
  }
}

TEST_CASE("output file and unwritable destinations") {
  const auto path = std::filesystem::temp_directory_path() / "logmu_test_cli.csv";
  auto args = kExample;
  args.insert(args.end(), {"--out", path.string()});
  auto r = run(args);
  CHECK(r.code == cli::kSuccess);
  CHECK(r.out.empty());
  std::ifstream f(path);
  std::stringstream content;
  content << f.rdbuf();
  CHECK(content.str() == run(kExample).out);
  std::filesystem::remove(path);

  args = kExample;
  args.insert(args.end(), {"--out", "/nonexistent-dir/out.csv"});
  r = run(args);
  CHECK(r.code == 1);
}

TEST_CASE("simulate is deterministic for a fixed seed") {
  const std::vector<std::string> args = {"simulate", "--scheme", "egc", "--m", "2", "--branches", "3:1:2",
                                         "--levels-db", "-10:5:4", "--cycles", "300", "--seed", "7"};
  const auto a = run(args);
  const auto b = run(args);
  REQUIRE(a.code == cli::kSuccess);
  CHECK(a.out == b.out);
  CHECK(lines(a.out)[0] == "level,level_db,cdf,lcr,lcr_over_fd,afd,afd_times_fd,err_est,ci_halfwidth");
  auto other = args;
  other.back() = "8";
  CHECK(run(other).out != a.out);
}

TEST_CASE("compare passes on the Monte Carlo figure configurations") {
  for (const auto& [scheme, triple] : {std::pair{"psc", "2:1:2"}, std::pair{"egc", "3:1:2"}, std::pair{"mrc", "4.5:1:2"}}) {
    CAPTURE(scheme);
    const auto r = run({"compare", "--scheme", scheme, "--m", "2", "--branches", triple, "--levels-db", "-20:10:13"});
    CHECK(r.code == cli::kSuccess);
    CHECK(r.err.find("compare: PASS") != std::string::npos);
    CHECK(lines(r.out).size() == 14);
  }
  const auto single = run({"compare", "--branches", "1.5:1:1", "--levels-db", "-15:5:5"});
  CHECK(single.code == cli::kSuccess);
}

TEST_CASE("compare rejects a simulation at the wrong Doppler shift") {
  DiversityConfig config;
  config.scheme = Scheme::psc;
  config.branches = {testing::kFig6Psc, testing::kFig6Psc};
  config.doppler = DopplerParams::from_hz(100.0);
  sim::SimConfig s;
  s.f_d = 50.0;
  s.duration_cycles = 2000;
  std::vector<double> levels;
  for (double db : {-5.0, 0.0, 5.0}) levels.push_back(logmu::model::from_db(db));
  const auto c = cli::compare(config, s, levels);
  CHECK_FALSE(c.pass);
  for (double d : c.rel_dev) CHECK(d > 0.3);
  CHECK(c.table().columns.back() == "gated");
}
