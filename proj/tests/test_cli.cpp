#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "anticonc/io.hpp"

using anticonc::Json;

namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
};

std::string data(const std::string& name) { return std::string(ANTICONC_TEST_DATA) + "/" + name; }

// Runs the CLI with the given arguments; stderr is discarded.
CliRun run(const std::string& args, const std::string& env = "") {
  std::string cmd = env + (env.empty() ? "" : " ") + ANTICONC_CLI_PATH + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("anticonc_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(CliQ, Enumeration) {
  CliRun r = run("q " + data("rademacher_n8.json"));
  ASSERT_EQ(r.code, 0);
  Json j = Json::parse(r.out);
  EXPECT_EQ(j["value"].get<double>(), 0.2734375);
  EXPECT_EQ(j["method"], "enumeration");
  EXPECT_EQ(j["scenario_id"], "rademacher-n8");
}

TEST(CliQ, InfiniteTau) {
  CliRun r = run("q " + data("rademacher_n8_inf.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(Json::parse(r.out)["value"].get<double>(), 1.0);
}

TEST(CliQ, MonteCarloDeterministic) {
  CliRun a = run("q --mc --seed 7 --samples 20000 " + data("rademacher_n8.json"));
  CliRun b = run("q --mc --seed 7 --samples 20000 " + data("rademacher_n8.json"));
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  Json j = Json::parse(a.out);
  EXPECT_EQ(j["method"], "monte-carlo");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["samples"], 20000);
  EXPECT_NEAR(j["value"].get<double>(), 0.2734375, 4.0 * j["stderr"].get<double>());
}

TEST(CliQ, ExitCodes) {
  EXPECT_EQ(run("q " + data("rademacher_n30.json")).code, 3);
  EXPECT_EQ(run("q " + data("malformed.json")).code, 2);
  EXPECT_EQ(run("q " + data("bad_law.json")).code, 2);
  EXPECT_EQ(run("q " + data("does_not_exist.json")).code, 2);
  EXPECT_EQ(run("q --samples 10 --mc " + data("rademacher_n8.json")).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(CliBound, AllFieldsPopulated) {
  CliRun r = run("bound --which all " + data("rademacher_n8.json"));
  ASSERT_EQ(r.code, 0);
  Json j = Json::parse(r.out);
  for (const char* k : {"esseen", "thm1", "cor1", "cor2", "thm1_tail", "thm1_floor"}) {
    EXPECT_TRUE(j[k].is_number()) << k;
  }
  EXPECT_EQ(j["q_exact"].get<double>(), 0.2734375);
}

TEST(CliBound, WhichCor2EchoesLambda) {
  CliRun r = run("bound --which cor2 " + data("rademacher_n8.json"));
  ASSERT_EQ(r.code, 0);
  Json j = Json::parse(r.out);
  EXPECT_EQ(j["cor2_lambda"].get<double>(), 0.5);
  EXPECT_TRUE(j["cor2"].is_number());
  EXPECT_TRUE(j["esseen"].is_null());
  EXPECT_TRUE(j["thm1"].is_null());
}

TEST(CliBound, CsvFormat) {
  CliRun r = run("bound --format csv " + data("rademacher_n8_tau1.json"));
  ASSERT_EQ(r.code, 0);
  auto rows = csv(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].size(), 15u);
  EXPECT_EQ(rows[1].size(), 15u);
  EXPECT_EQ(rows[0][0], "scenario_id");
}

TEST(CliBound, CustomV) {
  EXPECT_EQ(run("bound --v file --v-file " + data("v_ok.json") + " " + data("rademacher_n8.json")).code,
            0);
  EXPECT_EQ(
      run("bound --v file --v-file " + data("v_not_atom.json") + " " + data("rademacher_n8.json")).code,
      4);
  EXPECT_EQ(
      run("bound --v file --v-file " + data("v_too_heavy.json") + " " + data("rademacher_n8.json"))
          .code,
      4);
  EXPECT_EQ(run("bound --v file " + data("rademacher_n8.json")).code, 2);
  EXPECT_EQ(run("bound --which nope " + data("rademacher_n8.json")).code, 2);
}

TEST(CliVerify, CfSuitePasses) {
  auto dir = scratch("cf");
  CliRun r = run("verify --suite cf --seed 1 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("cf: PASS"), std::string::npos);
  EXPECT_NE(r.out.find("worst"), std::string::npos);
  Json j = Json::parse(slurp(dir / "verify_report.json"));
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["seed"], 1);
  fs::remove_all(dir);
}

TEST(CliVerify, CorruptedToleranceFails) {
  auto dir = scratch("corrupt");
  CliRun r = run("verify --suite jensen --seed 1 --out " + dir.string(),
                 "ANTICONC_QUAD_REL_TOL=1e-300");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("jensen: FAIL"), std::string::npos);
  EXPECT_EQ(run("verify --suite cf --out " + dir.string(), "ANTICONC_QUAD_NODES=abc").code, 2);
  fs::remove_all(dir);
}

TEST(CliVerify, AllSuitesByteIdentical) {
  auto a = scratch("all_a"), b = scratch("all_b");
  CliRun ra = run("verify --suite all --seed 1 --out " + a.string());
  CliRun rb = run("verify --suite all --seed 1 --out " + b.string());
  EXPECT_EQ(ra.code, 0) << ra.out;
  EXPECT_EQ(ra.out, rb.out);
  EXPECT_EQ(slurp(a / "verify_report.json"), slurp(b / "verify_report.json"));
  std::string constants = slurp(a / "constants.csv");
  EXPECT_EQ(constants, slurp(b / "constants.csv"));
  EXPECT_EQ(constants.rfind("bound,d,max_ratio,argmax_scenario_id,seed\n", 0), 0u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(CliSweep, TauMonotone) {
  CliRun r = run("sweep " + data("sweep_tau.json"));
  ASSERT_EQ(r.code, 0);
  auto rows = csv(r.out);
  ASSERT_EQ(rows.size(), 5u);
  double prev = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double q = std::stod(rows[i][5]);
    EXPECT_GE(q, prev);
    prev = q;
  }
  EXPECT_EQ(rows[2][0], "tau-sweep@0.25");
}

TEST(CliSweep, EpsilonLeavesQFixed) {
  CliRun r = run("sweep " + data("sweep_epsilon.json"));
  ASSERT_EQ(r.code, 0);
  auto rows = csv(r.out);
  ASSERT_EQ(rows.size(), 5u);
  std::set<std::string> cor1, cor2;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][5], rows[1][5]);
    cor1.insert(rows[i][11]);
    cor2.insert(rows[i][12]);
  }
  EXPECT_GT(cor1.size(), 1u);
  EXPECT_GT(cor2.size(), 1u);
}

TEST(CliSweep, NCentralBinomial) {
  CliRun r = run("sweep " + data("sweep_n.json"));
  ASSERT_EQ(r.code, 0);
  auto rows = csv(r.out);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(std::stod(rows[1][5]), 6.0 / 16.0);
  EXPECT_EQ(std::stod(rows[2][5]), 70.0 / 256.0);
  EXPECT_EQ(std::stod(rows[3][5]), 924.0 / 4096.0);
}

TEST(CliSweep, LambdaRowsFlagged) {
  CliRun r = run("sweep " + data("sweep_lambda.json"));
  ASSERT_EQ(r.code, 0);
  auto rows = csv(r.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_NE(rows[1][14].find("lambda_exp=0.1"), std::string::npos);
  EXPECT_FALSE(rows[1][9].empty());
  // Past the tail mass the rescaled V no longer sits below G.
  EXPECT_NE(rows[4][14].find("thm1_tail:contract"), std::string::npos);
  EXPECT_TRUE(rows[4][9].empty());
}

TEST(CliSweep, UnsortedRejected) { EXPECT_EQ(run("sweep " + data("sweep_unsorted.json")).code, 2); }
