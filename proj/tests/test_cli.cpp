#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "driftguard/types.hpp"

namespace fs = std::filesystem;
using driftguard::json;

namespace {

const std::string kCli = DRIFTGUARD_CLI_PATH;
const std::string kConfigs = DRIFTGUARD_CONFIG_DIR;

fs::path fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / "driftguard_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const std::string& env = "") {
  std::string cmd = env + (env.empty() ? "" : " ") + "\"" + kCli + "\" " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

fs::path write_config(const fs::path& dir, const std::string& name, const json& j) {
  auto p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(CliRun, BeamExperimentWritesTrace) {
  auto out = fresh_dir("run_beam");
  EXPECT_EQ(run_cli("run --config " + kConfigs + "/beam_run.json --out " + out.string() + " --quiet"), 0);
  auto cfg = load_json(kConfigs + "/beam_run.json");
  std::string id = cfg.at("experiment");
  auto seed = cfg.at("seeds")[0].get<int>();
  EXPECT_TRUE(fs::exists(out / (id + "_seed" + std::to_string(seed) + ".jsonl")));
  auto summary = load_json(out / (id + "_summary.json"));
  EXPECT_FALSE(summary.at("runs").empty());
  EXPECT_TRUE(fs::exists(out / (id + "_metrics.json")));
}

TEST(CliRun, RerunIsByteIdentical) {
  auto a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
  std::string cfg = kConfigs + "/cp5_method_swap.json";
  ASSERT_EQ(run_cli("run --config " + cfg + " --seed-override 3 --quiet --out " + a.string()), 0);
  ASSERT_EQ(run_cli("run --config " + cfg + " --seed-override 3 --quiet --out " + b.string()), 0);
  std::size_t files = 0;
  for (auto& e : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
  }
  EXPECT_GE(files, 2u);
}

TEST(CliRun, SeedOverrideSelectsSingleTrace) {
  auto out = fresh_dir("seed_override");
  ASSERT_EQ(run_cli("run --config " + kConfigs + "/cp5_method_swap.json --seed-override 42 --quiet --out " + out.string()),
            0);
  EXPECT_TRUE(fs::exists(out / "cp5_method_swap_seed42.jsonl"));
  EXPECT_FALSE(fs::exists(out / "cp5_method_swap_seed1.jsonl"));
}

TEST(CliRun, EnvironmentOverridesOutDir) {
  auto flag = fresh_dir("env_flag"), env = fresh_dir("env_var");
  ASSERT_EQ(run_cli("run --config " + kConfigs + "/beam_run.json --quiet --out " + flag.string(),
                    "DRIFTGUARD_OUT=" + env.string()),
            0);
  EXPECT_TRUE(fs::is_empty(flag));
  EXPECT_FALSE(fs::is_empty(env));
}

TEST(CliRun, UnknownProblemIsBadConfig) {
  auto dir = fresh_dir("bad_problem");
  auto cfg = load_json(kConfigs + "/beam_run.json");
  cfg["problem"]["model_id"] = "no_such_model";
  auto path = write_config(dir, "bad.json", cfg);
  EXPECT_EQ(run_cli("run --config " + path.string() + " --quiet --out " + dir.string()), 1);
}

TEST(CliRun, MalformedInputsAreBadConfig) {
  auto dir = fresh_dir("malformed");
  std::ofstream(dir / "broken.json") << "{ \"experiment\": ";
  EXPECT_EQ(run_cli("run --config " + (dir / "broken.json").string() + " --quiet"), 1);
  EXPECT_EQ(run_cli("run --config " + (dir / "missing.json").string() + " --quiet"), 1);
  EXPECT_EQ(run_cli("run --quiet"), 1);
  EXPECT_EQ(run_cli("frobnicate --config x"), 1);
  auto cfg = load_json(kConfigs + "/beam_run.json");
  cfg["session"]["n_max"] = 0;
  EXPECT_EQ(run_cli("run --config " + write_config(dir, "nmax.json", cfg).string() + " --quiet"), 1);
}

TEST(CliRun, AbortedSessionExitsTwo) {
  auto dir = fresh_dir("aborted");
  auto cfg = load_json(kConfigs + "/cp5_method_swap.json");
  cfg["problem"]["n_budget"] = 0;  // nothing feasible: the gatekeeper stops the session
  cfg["seeds"] = json::array({1});
  auto path = write_config(dir, "abort.json", cfg);
  EXPECT_EQ(run_cli("run --config " + path.string() + " --quiet --out " + dir.string()), 2);
  auto summary = load_json(dir / "cp5_method_swap_summary.json");
  EXPECT_EQ(summary.at("runs")[0].at("outcome"), "aborted");
}

TEST(CliAblate, StructuralConfigGivesSixRowsWithMatchColumn) {
  auto out = fresh_dir("ablate_structural");
  ASSERT_EQ(run_cli("ablate --config " + kConfigs + "/structural_ablation.json --quiet --out " + out.string()), 0);
  auto rows = lines_of(slurp(out / "structural_ablation_ablation.csv"));
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_NE(rows[0].find(",match,"), std::string::npos);
}

TEST(CliAblate, Cp5ConfigHasIterationsColumn) {
  auto out = fresh_dir("ablate_cp5");
  ASSERT_EQ(run_cli("ablate --config " + kConfigs + "/cp5_method_swap.json --seed-override 1 --quiet --out " +
                    out.string()),
            0);
  auto rows = lines_of(slurp(out / "cp5_method_swap_ablation.csv"));
  ASSERT_GE(rows.size(), 3u);
  EXPECT_NE(rows[0].find("iterations_to_converge"), std::string::npos);
}

TEST(CliAblate, EmptyConditionListGivesHeaderOnly) {
  auto dir = fresh_dir("ablate_empty");
  auto cfg = load_json(kConfigs + "/structural_ablation.json");
  cfg["conditions"] = json::array();
  auto path = write_config(dir, "empty.json", cfg);
  ASSERT_EQ(run_cli("ablate --config " + path.string() + " --quiet --out " + dir.string()), 0);
  auto rows = lines_of(slurp(dir / (cfg.at("experiment").get<std::string>() + "_ablation.csv")));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].rfind("condition,", 0), 0u);
}

TEST(CliSessions, GFunctionBestRewardsNonDecreasing) {
  auto out = fresh_dir("sessions_g");
  ASSERT_EQ(run_cli("sessions --config " + kConfigs + "/g_function_sessions.json --seed-override 1 --quiet --out " +
                    out.string()),
            0);
  auto rows = lines_of(slurp(out / "g_function_sessions_sessions.csv"));
  ASSERT_EQ(rows.size(), 4u);
  std::vector<std::string> header;
  std::stringstream hs(rows[0]);
  for (std::string c; std::getline(hs, c, ',');) header.push_back(c);
  auto col = std::find(header.begin(), header.end(), "best_reward") - header.begin();
  double prev = -1;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    std::stringstream rs(rows[k]);
    std::string cell;
    for (long i = 0; i <= col; ++i) std::getline(rs, cell, ',');
    double v = std::stod(cell);
    EXPECT_GE(v, prev) << "session " << k;
    prev = v;
  }
}

TEST(CliSessions, Cp0ContrastReport) {
  auto out = fresh_dir("sessions_cp0");
  ASSERT_EQ(run_cli("sessions --config " + kConfigs + "/cp0_contrast.json --seed-override 1 --quiet --out " +
                    out.string()),
            0);
  auto report = slurp(out / "cp0_contrast_cp0.txt");
  EXPECT_NE(report.find("close"), std::string::npos);
  EXPECT_NE(report.find("exploit"), std::string::npos);
  EXPECT_NE(report.find("explore_max"), std::string::npos);
}

TEST(CliSessions, SingleSessionSingleRow) {
  auto dir = fresh_dir("sessions_one");
  auto cfg = load_json(kConfigs + "/g_function_sessions.json");
  cfg.erase("sessions");
  cfg["session_count"] = 1;
  cfg.erase("archive_path");
  auto path = write_config(dir, "one.json", cfg);
  ASSERT_EQ(run_cli("sessions --config " + path.string() + " --seed-override 2 --quiet --out " + dir.string()), 0);
  auto rows = lines_of(slurp(dir / (cfg.at("experiment").get<std::string>() + "_sessions.csv")));
  EXPECT_EQ(rows.size(), 2u);
}
