#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "driftguard/metrics.hpp"
#include "driftguard/pipeline.hpp"

namespace driftguard {

struct SessionStep {
  std::string label;
  ProblemDescription problem;
};

struct ExperimentConfig {
  std::string id = "experiment";
  ProblemDescription problem;
  SessionConfig session;
  std::vector<std::uint64_t> seeds{1};
  std::vector<AblationCondition> conditions;
  std::vector<SessionStep> sessions;  // cmd_sessions; empty: `session_count` copies of `problem`
  int session_count = 3;
  std::string archive_path;           // written after cmd_sessions when set
  std::string output_dir = "out";
};

void to_json(json& j, const AblationCondition& c);
void from_json(const json& j, AblationCondition& c);

// ConfigError on malformed documents; UnknownModel on problem ids outside the catalog.
ExperimentConfig parse_experiment(const json& j);
ExperimentConfig load_experiment(const std::string& path);

std::string default_config_dir();

enum ExitCode { kExitOk = 0, kExitBadConfig = 1, kExitAborted = 2 };

struct CommandOptions {
  std::string config_path;
  std::optional<std::string> out_dir;  // DRIFTGUARD_OUT takes precedence
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
};

int cmd_run(const CommandOptions& opt);
int cmd_ablate(const CommandOptions& opt);
int cmd_sessions(const CommandOptions& opt);

struct SessionRow {
  std::uint64_t seed = 0;
  int index = 0;
  std::string label;
  std::string first_estimator;
  std::string best_estimator;
  double best_reward = 0.0;
  int iterations_to_best = 0;
  std::optional<int> iterations_to_converge;
  double cp0_similarity = 0.0;
  std::string cp0_match;
  std::string exploration_mode;
  bool screening_first = false;
  std::string outcome;
};

// Runs the session sequence for one seed with a shared archive.
std::vector<SessionRow> run_session_sequence(const ExperimentConfig& cfg, std::uint64_t seed, Archive& archive,
                                             std::vector<SessionTrace>* traces = nullptr);
std::string sessions_csv(const std::vector<SessionRow>& rows);
std::string cp0_report(const std::vector<SessionRow>& rows);

}  // namespace driftguard
