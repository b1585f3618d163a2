// Copyright 2026 The qlatt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qlatt/serialization.hpp"
#include "qlatt/virtual_experiment.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace qlatt {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string err;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::current_path() / "cli_test_work";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string in_dir(const std::string& name) { return (work_dir() / name).string(); }

CliRun run(const std::string& args, const std::string& env = "") {
  const std::string err_path = in_dir("stderr.txt");
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + QLATT_CLI_PATH + "' " + args + " > '" +
                          in_dir("stdout.txt") + "' 2> '" + err_path + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err_path);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& path) {
  std::ifstream in(path);
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

// Designs and patterns shared by several tests.
const std::string& design_file(const std::string& channel, const std::string& p) {
  static std::map<std::string, std::string> cache;
  const std::string key = channel + "_" + p;
  if (!cache.count(key)) {
    const std::string out = in_dir("design_" + key + ".json");
    const CliRun r = run("design --channel " + channel + " --p " + p + " -o '" + out + "'");
    EXPECT_EQ(r.code, 0) << r.err;
    cache[key] = out;
  }
  return cache[key];
}

const std::string& pattern_file(const std::string& channel, const std::string& p) {
  static std::map<std::string, std::string> cache;
  const std::string key = channel + "_" + p;
  if (!cache.count(key)) {
    const std::string out = in_dir("pattern_" + key + ".csv");
    const CliRun r = run("pattern '" + design_file(channel, p) + "' -o '" + out + "'");
    EXPECT_EQ(r.code, 0) << r.err;
    cache[key] = out;
  }
  return cache[key];
}

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("design --channel phase-flip --p 0.25 --n-max nope").code, 1);
  EXPECT_EQ(run("design --channel sideways --p 0.25 -o '" + in_dir("x.json") + "'").code, 1);
  EXPECT_EQ(run("pattern '" + in_dir("does_not_exist.json") + "'").code, 1);
}

TEST(Cli, DesignWritesDesignAndManifest) {
  const std::string& path = design_file("phase-flip", "0.25");
  const DesignFile d = design_file_from_json(read_json_file(path));
  EXPECT_EQ(d.channel.kind, ChannelKind::phase_flip);
  EXPECT_EQ(d.channel.p, 0.25);
  EXPECT_LE(d.result.report.f1_final, 1e-10);
  EXPECT_LE(d.result.report.f2_final, 1e-10);
  const Json m = read_json_file(path + ".manifest.json");
  EXPECT_EQ(m["command"], "design");
  EXPECT_EQ(m["outputs"][0], path);
  EXPECT_TRUE(m.contains("tool_version"));
  EXPECT_TRUE(m.contains("started_utc"));
  EXPECT_TRUE(m.contains("finished_utc"));
  EXPECT_TRUE(m.contains("seed"));
  EXPECT_EQ(m["channel"]["kind"], "phase_flip");
}

TEST(Cli, PatternHas125Rows) {
  const std::string& path = pattern_file("phase-flip", "0.25");
  EXPECT_EQ(count_lines(path), 126);
  std::ifstream in(path);
  const PatternProfile p = read_pattern_csv(in);
  EXPECT_EQ(p.size(), 125u);
  EXPECT_TRUE(fs::exists(path + ".manifest.json"));
}

TEST(Cli, VerifyAcceptsMatchAndRejectsMismatch) {
  const std::string& design = design_file("phase-flip", "0.25");
  const CliRun ok = run("verify '" + design + "' -o '" + in_dir("verify_ok.json") + "'");
  EXPECT_EQ(ok.code, 0) << ok.err;
  const CliRun bad =
      run("verify '" + design + "' --channel bit-flip --p 0.25 -o '" + in_dir("verify_bad.json") + "'");
  EXPECT_EQ(bad.code, 5) << bad.err;
  EXPECT_TRUE(fs::exists(in_dir("verify_ok.json.manifest.json")));
}

TEST(Cli, InfeasibleSpecExitsTwoAndNamesEntry) {
  const double g = 0.5;
  Json spec = {{"kind", "custom"},
               {"label", "amplitude damping"},
               {"kraus",
                {{{1, 0}, {0, 0}, {0, 0}, {std::sqrt(1 - g), 0}}, {{0, 0}, {std::sqrt(g), 0}, {0, 0}, {0, 0}}}}};
  const std::string path = in_dir("amplitude_damping.json");
  write_json_file(spec, path);
  const CliRun r = run("design --spec '" + path + "' -o '" + in_dir("ad.json") + "'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("M_03"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("not real"), std::string::npos) << r.err;
}

TEST(Cli, NonConvergenceExitsThree) {
  write_json_file({{"solver", {{"polish_iters", 0}}}}, in_dir("no_polish.json"));
  const CliRun r = run("design --channel depolarizing --p 0.5 --max-iters 1 --restarts 1 -o '" + in_dir("nc.json") + "'",
                    "QLATT_CONFIG='" + in_dir("no_polish.json") + "'");
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(Cli, SimulateRowsPerPatternAndInput) {
  std::string args = "simulate";
  for (const char* p : {"0", "0.125", "0.25", "0.5"}) args += " '" + pattern_file("phase-flip", p) + "'";
  const std::string out = in_dir("simulated.csv");
  const CliRun r = run(args + " --trials 20 -o '" + out + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out);
  const auto points = read_trajectory_csv(in);
  ASSERT_EQ(points.size(), 12u);
  for (const auto& pt : points) {
    EXPECT_EQ(pt.channel, "phase_flip");
    if (pt.input == "H") {
      EXPECT_NEAR(pt.theory.s1, 1 - 2 * pt.p, 1e-12);
    }
    EXPECT_GE(pt.fidelity, 0.9);
  }
  EXPECT_TRUE(fs::exists(out + ".manifest.json"));
}

TEST(Cli, TrajectoryDepolarizingOnD) {
  const std::string out = in_dir("traj_dep.csv");
  const CliRun r = run("trajectory --channel depolarizing --p-list 0,1/8,1/4,1/2 --inputs D --trials 10 -o '" + out + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out);
  const auto points = read_trajectory_csv(in);
  ASSERT_EQ(points.size(), 4u);
  for (const auto& pt : points) {
    EXPECT_EQ(pt.input, "D");
    EXPECT_NEAR(pt.theory.s2, 1 - 4 * pt.p / 3, 1e-12);
    EXPECT_NEAR(pt.simulated.s2, 1 - 4 * pt.p / 3, 0.05);
  }
  EXPECT_TRUE(fs::exists(out + ".manifest.json"));
  EXPECT_TRUE(fs::exists(out + ".plot.json"));
}

TEST(Cli, TrajectoryRejectsEmptyListAndBadConfig) {
  EXPECT_EQ(run("trajectory --channel phase-flip --p-list '' -o '" + in_dir("t.csv") + "'").code, 1);
  EXPECT_EQ(run("trajectory --channel phase-flip --p-list 0.1,abc -o '" + in_dir("t.csv") + "'").code, 1);
  std::ofstream(in_dir("broken.json")) << "{ not json";
  EXPECT_EQ(run("trajectory --channel phase-flip --p-list 0.25 -o '" + in_dir("t.csv") + "'",
                "QLATT_CONFIG='" + in_dir("broken.json") + "'")
                .code,
            1);
}

TEST(Cli, ConfigFromEnvironmentAndFlag) {
  write_json_file({{"solver", {{"n_max", 8}}}}, in_dir("small.json"));
  write_json_file({{"solver", {{"n_max", 10}}}}, in_dir("medium.json"));
  const std::string out = in_dir("env_design.json");
  ASSERT_EQ(run("design --channel bit-flip --p 0.125 -o '" + out + "'", "QLATT_CONFIG='" + in_dir("small.json") + "'")
                .code,
            0);
  EXPECT_EQ(design_file_from_json(read_json_file(out)).config.n_max, 8);
  ASSERT_EQ(run("--config '" + in_dir("medium.json") + "' design --channel bit-flip --p 0.125 -o '" + out + "'",
                "QLATT_CONFIG='" + in_dir("small.json") + "'")
                .code,
            0);
  EXPECT_EQ(design_file_from_json(read_json_file(out)).config.n_max, 10);
  ASSERT_EQ(run("design --channel bit-flip --p 0.125 --n-max 9 -o '" + out + "'",
                "QLATT_CONFIG='" + in_dir("small.json") + "'")
                .code,
            0);
  EXPECT_EQ(design_file_from_json(read_json_file(out)).config.n_max, 9);
}

TEST(Cli, OutputsAreReproducible) {
  const std::string a = in_dir("repeat_a.json"), b = in_dir("repeat_b.json");
  ASSERT_EQ(run("design --channel bit-phase-flip --p 0.25 -o '" + a + "'").code, 0);
  ASSERT_EQ(run("design --channel bit-phase-flip --p 0.25 -o '" + b + "'").code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  ASSERT_EQ(run("pattern '" + a + "' -o '" + in_dir("repeat_a.csv") + "'").code, 0);
  ASSERT_EQ(run("pattern '" + b + "' -o '" + in_dir("repeat_b.csv") + "'").code, 0);
  EXPECT_EQ(slurp(in_dir("repeat_a.csv")), slurp(in_dir("repeat_b.csv")));
  const std::string sim = " --trials 10 --seed 3 -o ";
  ASSERT_EQ(run("simulate '" + in_dir("repeat_a.csv") + "'" + sim + "'" + in_dir("sim_a.csv") + "'").code, 0);
  ASSERT_EQ(run("simulate '" + in_dir("repeat_a.csv") + "'" + sim + "'" + in_dir("sim_b.csv") + "'").code, 0);
  EXPECT_EQ(slurp(in_dir("sim_a.csv")), slurp(in_dir("sim_b.csv")));
}

}  // namespace
}  // namespace qlatt
