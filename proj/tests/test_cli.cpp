#include "l1pg/harness/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using l1pg::harness::cli_main;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / "l1pg-cli-test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::filesystem::path write_scratch(const std::string &name, const std::string &text) {
  const auto p = scratch(name);
  std::ofstream(p) << text;
  return p;
}

std::vector<double> parse_numbers(const std::string &text) {
  std::istringstream in(text);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  return v;
}

} // namespace

TEST(Cli, VerifyPartialDftSucceeds) {
  const auto r = cli({"verify", "--builtin", "partial-dft"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("all invariants hold"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, ProjectInsideBallEchoesInput) {
  const auto in = write_scratch("echo.txt", "3 -1 0.5\n2.25\n");
  const auto r = cli({"project", "-i", in.string(), "-r", "10"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(parse_numbers(r.out), (std::vector<double>{3, -1, 0.5, 2.25}));
}

TEST(Cli, ProjectShrinksOntoSphere) {
  const auto in = write_scratch("shrink.txt", "3 -1 0.5 2\n");
  const auto out = scratch("shrink.out");
  const auto r = cli({"project", "-i", in.string(), "-r", "2", "-o", out.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_EQ(parse_numbers(ss.str()), (std::vector<double>{1.5, 0, 0, 0.5}));
}

TEST(Cli, MalformedInputExitsTwo) {
  const auto bad_vec = write_scratch("bad.txt", "1 two 3\n");
  EXPECT_EQ(cli({"project", "-i", bad_vec.string(), "-r", "1"}).code, 2);
  EXPECT_EQ(cli({"project", "-i", bad_vec.string()}).code, 2);          // --radius missing
  EXPECT_EQ(cli({"project", "-i", "/nonexistent", "-r", "1"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);                                            // no subcommand
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"solve", "--builtin", "partial-dft", "--max-iter", "lots"}).code, 2);
  EXPECT_EQ(cli({"bench"}).code, 2);                                     // no config
  EXPECT_EQ(cli({"bench", "--builtin", "nope"}).code, 2);
  EXPECT_EQ(cli({"solve", "--builtin", "partial-dft"}).code, 2);         // ambiguous solver
  EXPECT_EQ(cli({"solve", "--builtin", "partial-dft", "-s", "newton"}).code, 2);
  const auto bad_cfg = write_scratch("bad.ini", "[problem]\nrows = many\n");
  const auto r = cli({"bench", "--config", bad_cfg.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("rows"), std::string::npos);
}

TEST(Cli, HelpExitsZero) {
  const auto r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("verify"), std::string::npos);
}

TEST(Cli, BuiltinsListAndShow) {
  const auto list = cli({"builtins"});
  EXPECT_EQ(list.code, 0);
  EXPECT_NE(list.out.find("rank-structured"), std::string::npos);
  const auto show = cli({"builtins", "tomography"});
  EXPECT_EQ(show.code, 0);
  EXPECT_NE(show.out.find("operator = tomography"), std::string::npos);
}

TEST(Cli, SolveWithOverrides) {
  const auto dir = scratch("solve-out");
  std::filesystem::remove_all(dir);
  const auto r = cli({"solve", "--builtin", "partial-dft", "--solver", "psd", "--seed", "4",
                      "--tau", "0.05", "--max-iter", "500", "--tol", "1e-12", "--out",
                      dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("seed 4"), std::string::npos);
  EXPECT_NE(r.out.find("tau          0.05"), std::string::npos);
  EXPECT_NE(r.out.find("rel_error,psd_n,psd_time"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "traces" / "psd.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "paths" / "psd.csv"));
}

TEST(Cli, SolveBySolverKindAndRadius) {
  const auto r = cli({"solve", "--builtin", "partial-dft", "--solver", "pocs", "--radius", "5",
                      "--max-iter", "200"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("radius       5\n"), std::string::npos);
  EXPECT_NE(r.out.find("[pocs] pocs"), std::string::npos);
}

TEST(Cli, TradeoffCurve) {
  const auto r = cli({"tradeoff", "--builtin", "partial-dft", "--samples", "5"});
  EXPECT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "tau,l1_norm,discrepancy,support_size");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5);
  const auto knots = cli({"tradeoff", "--builtin", "partial-dft", "--breakpoints"});
  EXPECT_EQ(knots.code, 0);
}

TEST(Cli, BenchRankStructuredWritesReport) {
  const auto dir = scratch("bench-out");
  std::filesystem::remove_all(dir);
  const auto r = cli({"bench", "--builtin", "rank-structured", "--out", dir.string(), "--parallel"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rel_error,ista_n,ista_time,psd_n,psd_time,pl_n,pl_time,relaxed_n,relaxed_time"),
            std::string::npos)
      << r.out;
  std::ifstream report(dir / "report.csv");
  std::string header, first;
  std::getline(report, header);
  std::getline(report, first);
  EXPECT_EQ(header, "rel_error,ista_n,ista_time,psd_n,psd_time,pl_n,pl_time,relaxed_n,relaxed_time");
  EXPECT_EQ(first.rfind("0.9,", 0), 0u);
  for (const char *f : {"summary.txt", "tradeoff.csv", "traces/psd.csv", "paths/relaxed.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::filesystem::remove_all(dir);
}
