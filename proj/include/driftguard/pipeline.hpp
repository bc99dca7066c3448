#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftguard/agents.hpp"
#include "driftguard/archive.hpp"
#include "driftguard/bandit.hpp"
#include "driftguard/checkpoints.hpp"
#include "driftguard/estimators.hpp"
#include "driftguard/reward.hpp"

namespace driftguard {

// Where observations come from. "numeric" runs the estimators on the catalog
// model; "simulated" draws the reward from per-estimator means.
struct EnvironmentConfig {
  std::string kind = "numeric";
  std::map<std::string, double> means;
  double default_mean = 50.0;
  double sigma = 0.0;
  std::map<std::string, std::vector<double>> reward_sequence;  // per estimator, consumed in order
};

void to_json(json& j, const EnvironmentConfig& e);
void from_json(const json& j, EnvironmentConfig& e);

struct SessionConfig {
  int n_max = 5;
  double r_threshold = 85.0;
  std::array<CheckpointSpec, 8> checkpoints = default_checkpoint_specs();
  std::vector<DriftSpec> drifts;
  std::uint64_t seed = 1;
  ScriptedAgentConfig script;
  bool policy_persistence = false;
  int max_debug_retries = 2;
  int cp_retry_budget = 3;
  std::optional<std::string> forced_first_estimator;
  std::vector<std::string> estimator_whitelist;  // empty: every feasible estimator
  EnvironmentConfig environment;
  RewardConfig reward;
  BanditConfig bandit;
  ActionSpaceConfig space;
  AdaptiveParams adaptive;
  Cp0Params cp0;
  std::string session_id;
};

void to_json(json& j, const SessionConfig& c);
void from_json(const json& j, SessionConfig& c);  // ConfigError on invalid values

// theta0 = -1 on CP1..CP7: every checkpoint passes unconditionally.
void ablate_all_checkpoints(SessionConfig& c);

// 0.95 quantile of the null similarity distribution for the default provider,
// computed once from the shipped corpus.
double default_null_quantile();

struct DriftEvent {
  std::string site;
  std::string from;
  std::string to;
  bool operator==(const DriftEvent&) const = default;
};

struct IterationRecord {
  int n = 0;
  ActionTuple action;
  ExecutionPlan plan;
  bool executed = false;
  bool failed = false;  // checkpoint retry budget exhausted
  Observation observation;
  RewardBreakdown reward;
  std::vector<CheckpointResult> checkpoint_events;
  std::vector<DriftEvent> drift_events;
  DiagnosticScheme diagnostic;
  std::string advisor_text;
  json strategist_input;
  std::vector<std::string> notes;

  // Estimator-level disagreement between the policy's action and the plan that ran.
  bool mismatch() const { return executed && action.estimator() != plan.estimator; }
};

void to_json(json& j, const IterationRecord& r);

enum class SessionOutcomeKind { Converged, BudgetExhausted, Aborted };
std::string to_string(SessionOutcomeKind k);

struct SessionTrace {
  json config;
  ProblemScheme problem;
  double cp0_similarity = 0.0;
  MatchClass cp0_match = MatchClass::None;
  ExplorationMode exploration_mode = ExplorationMode::ExploreMax;
  bool screening_first = false;
  std::vector<CheckpointResult> group_a_events;
  std::vector<IterationRecord> records;
  SessionOutcomeKind outcome = SessionOutcomeKind::BudgetExhausted;
  std::string abort_reason;
  double best_reward = 0.0;
  std::optional<int> iterations_to_converge;
  int iterations_to_best = 0;
  json policy_snapshot;

  std::string to_jsonl() const;  // header line, one line per record, summary line
};

// Mutable state of one session's bandit loop.
struct SessionState {
  SessionConfig cfg;
  ProblemScheme ps;
  const BenchmarkModel* model = nullptr;
  PolicyState policy;
  RegisterState reg;
  std::array<ThresholdState, 8> thresholds{};
  std::optional<ActionTuple> prev_action;
  std::map<std::string, Observation> prev_obs;  // last observation per estimator
  std::optional<DiagnosticScheme> last_diag;
  std::optional<std::string> advisor_warning;
  bool screening_first = false;
  int iteration = 0;
  std::map<std::string, std::size_t> sequence_pos;  // simulated reward sequences
};

// Builds the state a session's loop starts from; runs nothing.
SessionState init_session_state(const SessionConfig& cfg, const ProblemScheme& ps);

IterationRecord run_iteration(SessionState& st);

// Archive is read for CP0 and extended with the finished session.
SessionTrace run_session(const SessionConfig& cfg, const ProblemDescription& desc, Archive& archive);

Observation execute_plan(const ExecutionPlan& plan, const BenchmarkModel& model, const EnvironmentConfig& env,
                         int iteration, std::map<std::string, std::size_t>& sequence_pos);

struct AblationCondition {
  std::string name;
  std::vector<std::string> disabled;  // CP ids with theta0 forced to -1, or "all"
  std::vector<DriftSpec> drifts;
};

struct AblationRow {
  std::string condition;
  std::uint64_t seed = 0;
  int mismatches = 0;
  int records = 0;
  int blocking_events = 0;  // CP2/CP4/CP5 blocks
  int drift_events = 0;
  double first_reward = 0.0;
  double best_reward = 0.0;
  std::optional<int> iterations_to_converge;
  std::string outcome;
};

std::vector<AblationRow> run_ablation_suite(const SessionConfig& base, const ProblemDescription& desc,
                                            const std::vector<AblationCondition>& conditions,
                                            const std::vector<std::uint64_t>& seeds,
                                            std::vector<std::pair<std::string, SessionTrace>>* traces = nullptr);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace driftguard
