#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "g2sfuse");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return g2sfuse::dispatch(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("g2sfuse_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& rel) const { return (dir_ / rel).string(); }

  void simulate(const std::vector<std::string>& extra = {}) {
    std::vector<std::string> args{"simulate", "--preset", "synthetic", "--seed", "3", "--set", "scenario.length=150",
                                  "--out", p("sim")};
    args.insert(args.end(), extra.begin(), extra.end());
    ASSERT_EQ(run(args), 0);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"evaluate", "--gt", p("missing.txt")}), 1);
  EXPECT_EQ(run({"fuse", "--mode", "warp", "--slam", p("x"), "--out", p("o")}), 1);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(CliTest, SimulateWritesScenarioAndManifest) {
  simulate({"--predictions"});
  for (const char* f : {"gt.txt", "slam.txt", "covis.txt", "loops.txt", "config.ini", "predictions.txt", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(p("sim/") + f)) << f;
  }
  const auto j = nlohmann::json::parse(slurp(p("sim/manifest.json")));
  EXPECT_EQ(j["command"], "simulate");
  EXPECT_EQ(j["seed"], 3);
  EXPECT_EQ(j["outputs"].size(), 6u);
  EXPECT_EQ(j["outputs"][0]["sha256"].get<std::string>().size(), 64u);
  EXPECT_TRUE(j.contains("wall_time_s"));
  EXPECT_TRUE(j.contains("tool_version"));
}

TEST_F(CliTest, DataErrorExitCode) {
  {
    std::ofstream bad(p("bad.txt"));
    bad << "1 2 3\n";
  }
  EXPECT_EQ(run({"evaluate", "--est", p("bad.txt"), "--gt", p("bad.txt")}), 2);
  EXPECT_EQ(run({"simulate", "--set", "scenario.length=-5", "--out", p("x")}), 2);
}

TEST_F(CliTest, FuseEvaluateImprovesOnSlam) {
  simulate();
  ASSERT_EQ(run({"fuse", "--config", p("sim/config.ini"), "--slam", p("sim/slam.txt"), "--covis", p("sim/covis.txt"),
                 "--loops", p("sim/loops.txt"), "--gt", p("sim/gt.txt"), "--out", p("fuse")}),
            0);
  for (const char* f : {"fused.txt", "scales.txt", "run.log", "manifest.json"}) EXPECT_TRUE(fs::exists(p("fuse/") + f));
  ASSERT_EQ(run({"evaluate", "--est", p("fuse/fused.txt"), "--gt", p("sim/gt.txt"), "--out", p("ev_fused")}), 0);
  ASSERT_EQ(run({"evaluate", "--est", p("sim/slam.txt"), "--gt", p("sim/gt.txt"), "--out", p("ev_slam")}), 0);
  auto rmse = [&](const std::string& report) {
    std::istringstream is(slurp(report));
    std::string line;
    while (std::getline(is, line)) {
      if (line.rfind("t2d_m", 0) == 0) return std::stod(line.substr(line.find("rmse") + 5));
    }
    return -1.0;
  };
  EXPECT_LT(rmse(p("ev_fused/report.txt")), rmse(p("ev_slam/report.txt")));
  EXPECT_TRUE(fs::exists(p("ev_fused/errors.csv")));
}

TEST_F(CliTest, NoScaleModeFreezesScales) {
  simulate({"--predictions"});
  ASSERT_EQ(run({"fuse", "--config", p("sim/config.ini"), "--slam", p("sim/slam.txt"), "--covis", p("sim/covis.txt"),
                 "--predictions", p("sim/predictions.txt"), "--query-poses", p("sim/slam.txt"), "--mode", "no_scale",
                 "--out", p("ns")}),
            0);
  std::istringstream is(slurp(p("ns/scales.txt")));
  int k;
  double s;
  int n = 0;
  while (is >> k >> s) {
    EXPECT_EQ(s, 1.0);
    ++n;
  }
  EXPECT_EQ(n, 151);
}

TEST_F(CliTest, SelectOnNoiselessInputsAcceptsEveryFrame) {
  ASSERT_EQ(run({"simulate", "--preset", "synthetic", "--set", "scenario.length=100", "--set",
                 "scenario.odom_rot_noise_deg=0", "--set", "scenario.odom_trans_noise=0", "--set",
                 "scenario.scale_drift=constant", "--out", p("clean")}),
            0);
  ASSERT_EQ(run({"select", "--config", p("clean/config.ini"), "--set", "oracle.sigma_x=0", "--set", "oracle.sigma_y=0",
                 "--set", "oracle.sigma_theta_deg=0", "--set", "oracle.outlier_rate=0", "--slam", p("clean/slam.txt"),
                 "--covis", p("clean/covis.txt"), "--gt", p("clean/gt.txt"), "--out", p("sel")}),
            0);
  std::istringstream is(slurp(p("sel/selection.csv")));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "k,in_bound,rot_diff_deg,dx,dy,in_Cr,in_Ct");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(line.substr(line.size() - 4), ",1,1") << line;
  }
  EXPECT_EQ(rows, 100);
}

TEST_F(CliTest, PlotIsPureSerialization) {
  simulate();
  ASSERT_EQ(run({"plot", "--gt", p("sim/gt.txt"), "--est", p("sim/slam.txt"), "--out", p("plot")}), 0);
  for (const char* f : {"trajectories.csv", "error_hist.csv", "trajectories.svg", "errors.svg"}) {
    EXPECT_TRUE(fs::exists(p("plot/") + f));
  }
  EXPECT_NE(slurp(p("plot/trajectories.svg")).find("<polyline"), std::string::npos);
  // inputs unchanged and the errors match evaluate
  const auto j = nlohmann::json::parse(slurp(p("plot/manifest.json")));
  EXPECT_EQ(j["inputs"].size(), 2u);
  std::istringstream csv(slurp(p("plot/error_hist.csv")));
  std::string line;
  int total = 0;
  std::getline(csv, line);
  while (std::getline(csv, line)) total += std::stoi(line.substr(line.rfind(',') + 1));
  EXPECT_EQ(total, 151);
}

TEST_F(CliTest, RerunIsBitIdentical) {
  simulate();
  const std::vector<std::string> common{"fuse", "--config", p("sim/config.ini"), "--slam", p("sim/slam.txt"),
                                        "--covis", p("sim/covis.txt"), "--gt", p("sim/gt.txt"), "--out"};
  auto a = common, b = common;
  a.push_back(p("a"));
  b.push_back(p("b"));
  ASSERT_EQ(run(a), 0);
  ASSERT_EQ(run(b), 0);
  for (const char* f : {"fused.txt", "scales.txt", "run.log"}) EXPECT_EQ(slurp(p("a/") + f), slurp(p("b/") + f)) << f;
}
