#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "driftguard/records.hpp"
#include "driftguard/schemes.hpp"

namespace driftguard {

enum class Role {
  Coordinator,
  Gatekeeper,
  ModelTranslator,
  Strategist,
  Critic,
  StudyAgent,
  RefactorAgent,
  Inspector,
  Debugger,
  Advisor
};

std::string to_string(Role r);
Role parse_role(std::string_view s);

// payload["kind"] names the payload type; see expected_kind().
struct AgentMessage {
  Role role = Role::Coordinator;
  json payload = json::object();
  std::string free_text;
  bool operator==(const AgentMessage&) const = default;
};

// Payload kind each role emits.
std::string expected_kind(Role r);

void to_json(json& j, const AgentMessage& m);
void from_json(const json& j, AgentMessage& m);

// Stand-in for generated code.
struct ExecutionPlan {
  std::string estimator;
  std::map<std::string, double> hyperparams;
  std::vector<std::string> output_bindings;
  std::string model_id;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> options;  // sampling, allocation, output
  bool operator==(const ExecutionPlan&) const = default;
};

void to_json(json& j, const ExecutionPlan& p);
void from_json(const json& j, ExecutionPlan& p);

// Strategist output.
struct StrategyReport {
  ActionTuple action;
  MethodScheme method_scheme;
  bool explored = false;
  bool novelty_warning = false;
  bool novelty_penalty_applied = false;
  bool operator==(const StrategyReport&) const = default;
};

void to_json(json& j, const StrategyReport& r);
void from_json(const json& j, StrategyReport& r);

// Study Agent output: the implementation plan before any code exists.
struct CellMap {
  std::string estimator;
  std::string library_class;
  std::map<std::string, double> hyperparams;
  std::vector<std::string> bindings;
  std::string model_id;
  std::string template_id;  // empty when built from the cheatsheet
  bool operator==(const CellMap&) const = default;
};

void to_json(json& j, const CellMap& c);
void from_json(const json& j, CellMap& c);

struct InspectionVerdict {
  bool approved = true;
  std::vector<std::string> reasons;
  bool operator==(const InspectionVerdict&) const = default;
};

struct FixInstructions {
  std::map<std::string, double> hyperparams;             // merged into the plan
  std::optional<std::vector<std::string>> output_bindings;  // replaces the plan's bindings
  bool operator==(const FixInstructions&) const = default;
};

void to_json(json& j, const FixInstructions& f);
void from_json(const json& j, FixInstructions& f);

enum class DriftKind { MethodSwap, FieldCorruption, None };
std::string to_string(DriftKind k);

struct DriftSpec {
  DriftKind kind = DriftKind::None;
  std::string target_field = "method";      // method | n_samples | output_bindings
  std::string replacement_value;            // estimator id, "uniform", a number or a binding list
  std::optional<std::string> source_value;  // only drift reports naming this estimator
  double probability = 0.0;
  std::optional<int> activation_iteration;  // first iteration the drift may fire
  std::string site = "refactor_agent";      // study_agent | refactor_agent
  bool operator==(const DriftSpec&) const = default;
};

void to_json(json& j, const DriftSpec& d);
void from_json(const json& j, DriftSpec& d);

struct DriftOutcome {
  AgentMessage message;
  bool fired = false;
  std::string from, to;
};

// Works on a strategy_report message. A method swap rebuilds the report's
// method scheme so the drifted report is internally consistent.
DriftOutcome inject_drift(const AgentMessage& msg, const DriftSpec& spec, std::uint64_t seed, int iteration,
                          const ProblemScheme& ps, const ActionSpaceConfig& cfg = {});

// Script table: entries match on role and optionally on input digest,
// iteration and attempt. A matched entry's output is merge-patched onto the
// role's default output, or used whole for roles without one.
struct ScriptEntry {
  Role role = Role::Advisor;
  std::optional<std::string> digest;
  std::optional<int> iteration;
  std::optional<int> attempt;
  json output = json::object();
  std::string free_text;
};

struct ScriptedAgentConfig {
  std::vector<ScriptEntry> entries;
  std::set<Role> no_default;  // roles that must be scripted
};

void to_json(json& j, const ScriptEntry& e);
void from_json(const json& j, ScriptEntry& e);
void to_json(json& j, const ScriptedAgentConfig& c);
void from_json(const json& j, ScriptedAgentConfig& c);

using AgentRule = std::function<AgentMessage(const AgentMessage& input, std::uint64_t seed)>;

struct AgentCall {
  int iteration = 0;
  int attempt = 0;
};

AgentMessage run_agent(Role role, const AgentMessage& input, const ScriptedAgentConfig& script, std::uint64_t seed,
                       const AgentRule& default_rule, AgentCall call = {});

// Default role rules.
ProblemScheme coordinator_parse(const ProblemDescription& desc, const ActionSpace& space);
InspectionVerdict gatekeeper_check(const ProblemScheme& ps);
InspectionVerdict critic_review(const StrategyReport& r, const ProblemScheme& ps, const ActionSpace& space);
CellMap study_agent_plan(const StrategyReport& r, const std::optional<std::string>& template_id,
                         const std::string& model_id);
ExecutionPlan refactor_build(const StrategyReport& r, const CellMap& cell_map, std::uint64_t seed);
InspectionVerdict inspector_check(const ExecutionPlan& plan, const MethodScheme& ms);
// Unrecoverable for error classes without a patch rule.
FixInstructions debugger_fix(const ExecutionPlan& plan, const std::string& error_class, const MethodScheme& ms);
void apply_fix(ExecutionPlan& plan, const FixInstructions& fix);
std::string advisor_diagnose(const Observation& obs, const std::string& requested_estimator, const MethodScheme& ms);

// Texts compared by the checkpoints.
std::string render_context_text(const ProblemScheme& ps);
std::string render_compatibility_text(const ProblemScheme& ps, const ActionSpaceConfig& cfg = {});
std::string render_action_text(const ActionTuple& a);    // CP7: full tuple
std::string render_proposal_text(const ActionTuple& a);  // CP2: method and output treatment
std::string render_strategy_text(const StrategyReport& r, bool with_attributes = true);
std::string render_cell_map_text(const CellMap& c);
std::string render_plan_text(const ExecutionPlan& p);
std::string render_observation_text(const Observation& o);

struct TemplateHit {
  std::optional<std::string> template_id;
  std::string text;
};

// Template corpus keyed by estimator; Generalized_Sobol has no template.
const std::map<std::string, std::string>& template_library();
TemplateHit retrieve_template(const std::string& estimator);

}  // namespace driftguard
