#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, bool merge_stderr = false) {
  std::string cmd = std::string(HEMA_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hema_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(Cli, RequiresSubcommand) { EXPECT_EQ(run("").code, 2); }

TEST_F(Cli, HelpExitsCleanly) { EXPECT_EQ(run("--help").code, 0); }

TEST_F(Cli, Equilibria) {
  const Result r = run("equilibria");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  ASSERT_EQ(j["equilibria"].size(), 2u);
  EXPECT_NEAR(j["equilibria"][1]["x_star"].get<double>(), 1.19378, 5e-4);
  EXPECT_NEAR(j["existence"]["alpha"].get<double>(), 0.13503, 5e-6);
  EXPECT_TRUE(j["existence"]["exists_positive"].get<bool>());
}

TEST_F(Cli, OverridesAndConfigFile) {
  const fs::path cfg = dir_ / "c.json";
  std::ofstream(cfg) << R"({"delta": 0.3})";
  const json a = json::parse(run("equilibria -c " + cfg.string()).out);
  EXPECT_EQ(a["equilibria"].size(), 1u);
  const json b = json::parse(run("equilibria -c " + cfg.string() + " --set delta=0.05").out);
  EXPECT_EQ(b["equilibria"].size(), 2u);
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run("equilibria --set dleta=0.1").code, 2);
  EXPECT_EQ(run("equilibria --set theta=0").code, 2);
  EXPECT_EQ(run("equilibria -c /nonexistent.json").code, 2);
  const fs::path bad = dir_ / "bad.json";
  std::ofstream(bad) << "{\n \"n\": 3,\n \"delta\": }\n";
  const Result r = run("equilibria -c " + bad.string(), true);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("bad.json:3:"), std::string::npos) << r.out;
}

TEST_F(Cli, StabilityTextAndJson) {
  const Result t = run("stability");
  ASSERT_EQ(t.code, 0);
  EXPECT_EQ(t.out.rfind("E0: Unstable; E*: UnstablePostHopf\n", 0), 0u) << t.out;
  const json j = json::parse(run("stability --json --set n=2.42").out);
  EXPECT_EQ(j["positive"], "StablePreHopf");
  const json z = json::parse(run("stability --json --set delta=0.3").out);
  EXPECT_EQ(z["trivial"], "GloballyStable");
  EXPECT_TRUE(z["positive"].is_null());
}

TEST_F(Cli, Hopf) {
  const Result r = run("hopf --json");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["beta_star_c"].get<double>(), -0.3881, 0.0005);
  EXPECT_NEAR(j["n_c"].get<double>(), 2.53, 0.02);
  EXPECT_EQ(j["regime"], "proved");
  EXPECT_EQ(j["transversal"], 1);
}

TEST_F(Cli, HopfOutsideProvedRegime) {
  const Result r = run("hopf --json --set density.tau_min=1 --set gamma=0.05");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["regime"], "outside proved regime");
}

TEST_F(Cli, HopfNoCrossingExitsThree) {
  const Result r = run("hopf --omega-max 0.01 --grid 50");
  EXPECT_EQ(r.code, 3);
  const json j = json::parse(r.out);
  EXPECT_EQ(j["error"], "NoCrossing");
  EXPECT_TRUE(j["g_min"].is_number());
  EXPECT_TRUE(j["g_max"].is_number());
}

TEST_F(Cli, HopfWithoutEquilibriumIsDomainError) { EXPECT_EQ(run("hopf --set delta=0.3").code, 2); }

TEST_F(Cli, SimulateWritesCsvAndSidecar) {
  const fs::path out = dir_ / "run.csv";
  ASSERT_EQ(run("simulate -o " + out.string() + " --set t_end=60 --set window=20 --set t_discard=10").code, 0);
  const std::string csv = slurp(out);
  EXPECT_EQ(csv.rfind("t,x,y\n", 0), 0u);
  EXPECT_EQ(count_lines(csv), 1u + 2800u + 5300u + 1u);
  const json side = json::parse(slurp(dir_ / "run.csv.json"));
  EXPECT_EQ(side["config"]["mu"], 1.0);
  EXPECT_DOUBLE_EQ(side["config"]["history_step"].get<double>(), 0.0025);
  EXPECT_EQ(side["config"]["t_end"], 60.0);
  EXPECT_TRUE(side["diagnostics"].contains("convergence"));
  EXPECT_TRUE(side["diagnostics"].contains("period_x"));

  const fs::path again = dir_ / "again.csv";
  ASSERT_EQ(run("simulate -o " + again.string() + " --set t_end=60 --set window=20 --set t_discard=10").code, 0);
  EXPECT_EQ(slurp(out), slurp(again));
  EXPECT_EQ(slurp(dir_ / "run.csv.json"), slurp(dir_ / "again.csv.json"));
}

TEST_F(Cli, SimulateStrideAndSvg) {
  const fs::path svg = dir_ / "run.svg";
  const Result r = run("simulate -o - --svg " + svg.string() + " --set t_end=20 --set output_stride=1 --set window=5");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(count_lines(r.out), 1u + 21u);
  EXPECT_EQ(slurp(svg).rfind("<svg", 0), 0u);
}

TEST_F(Cli, SimulateRequiresOutput) { EXPECT_EQ(run("simulate").code, 2); }

TEST_F(Cli, History) {
  const Result r = run("history");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(count_lines(r.out), 1u + 2801u);
}

TEST_F(Cli, SweepIsOrderedAndDeterministic) {
  const std::string args = "sweep --param n --from 2 --to 3 --count 5 --no-simulate";
  const Result a = run(args + " --jobs 1");
  const Result b = run(args + " --jobs 4");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  std::istringstream in(a.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,trivial,exists_positive,positive,beta_star,linear_period,sim_period,converged,error");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("2.0000000000000000e+00,Unstable,true,", 0), 0u) << line;
  EXPECT_EQ(count_lines(a.out), 6u);
  EXPECT_NE(a.out.find("3.0000000000000000e+00,Unstable,true,UnstablePostHopf"), std::string::npos);
}

TEST_F(Cli, SweepEmptyRangeIsConfigError) {
  EXPECT_EQ(run("sweep --param n --from 3 --to 2 --count 4").code, 2);
  EXPECT_EQ(run("sweep --param n --from 2 --to 3 --count 0").code, 2);
  EXPECT_EQ(run("sweep --param bogus --from 2 --to 3 --count 2").code, 2);
}

TEST_F(Cli, VerifyDetectsCoarseOrderStep) {
  const Result r = run("verify --order-step 0.5");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.out.find("FAIL 7d"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("PASS 7a"), std::string::npos) << r.out;
}

}  // namespace
