#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftguard/action_space.hpp"
#include "driftguard/records.hpp"
#include "driftguard/types.hpp"

namespace driftguard {

// Structured problem description handed to the Coordinator.
struct ProblemDescription {
  std::string model_id;
  std::string message;  // the user's free-text request
  int d_in = 0;
  int d_out = 0;
  long long n_budget = 0;
  double epsilon = 0.05;
  std::string task;
  std::vector<std::string> distributions;
  std::string output_class;  // optional override: scalar | vector | field
  std::string model_class = "unknown";
  bool has_dependence = false;
  bool limit_state_defined = false;
  bool low_fidelity_model = false;
  bool target_pdf_known = false;
  bool operator==(const ProblemDescription&) const = default;
};

struct EstimatorFlag {
  std::string estimator;
  bool feasible = true;
  std::vector<std::string> predicates;  // violated predicate ids
  std::string constraint;               // the constraint values that produced the flag
  bool operator==(const EstimatorFlag&) const = default;
};

struct ProblemScheme {
  std::string model_id;
  ContextVector context;
  std::string output_class = "scalar";
  std::string model_class = "unknown";
  bool has_dependence = false;
  bool limit_state_defined = false;
  bool low_fidelity_model = false;
  bool target_pdf_known = false;
  bool high_d_in_flag = false;
  bool field_out_flag = false;
  int screening_dim_threshold = 8;
  std::vector<std::string> feasible_sa_estimators;
  std::vector<std::string> feasible_uq_estimators;
  std::vector<EstimatorFlag> estimator_flags;
  bool operator==(const ProblemScheme&) const = default;
};

enum class BudgetStatus { Sufficient, Tight, Infeasible };

struct MethodScheme {
  ActionTuple action;
  std::string estimator;
  std::string index_type;
  std::vector<std::string> produces;
  std::string sampling_scheme;
  std::string n_min_formula;
  int d_in = 0;  // prices hyperparams that diverge from the scheme's
  long long n_min_value = 0;
  long long n_cost_actual = 0;
  BudgetStatus budget_status = BudgetStatus::Sufficient;
  std::string library_class;
  std::vector<std::string> required_attributes;
  std::vector<std::string> forbidden_attributes;
  std::map<std::string, double> hyperparams;
  std::vector<std::string> valid_when;
  std::vector<std::string> invalid_when;
  bool operator==(const MethodScheme&) const = default;
};

enum class ConvergenceStatus { Converged, Partial, Failed };
enum class RewardComponent { Integrity, Accuracy, Details, Optimality };
enum class RootCause { InsufficientN, WrongEstimator, AttributeError, NumericalDegeneracy, None };

struct DiagnosticScheme {
  ConvergenceStatus convergence_status = ConvergenceStatus::Partial;
  RewardComponent bottleneck_dim = RewardComponent::Integrity;
  double reward = 0.0;
  RootCause root_cause = RootCause::None;
  std::string subject_estimator;  // estimator the diagnosis refers to
  std::optional<std::string> prescribed_estimator;
  std::optional<double> prescribed_N_factor;
  std::optional<std::map<std::string, double>> prescribed_hyperparam;
  bool penalize_action = false;
  bool block_action = false;
  std::string physical_insight;
  bool operator==(const DiagnosticScheme&) const = default;
};

std::string to_string(BudgetStatus s);
std::string to_string(ConvergenceStatus s);
std::string to_string(RewardComponent c);
std::string to_string(RootCause c);

ProblemScheme build_problem_scheme(const ProblemDescription& desc, const ActionSpace& space = ActionSpace{});

// Caller may pass an infeasible action on purpose (negative tests); the
// budget status then reports it.
MethodScheme build_method_scheme(const ActionTuple& action, const ProblemScheme& ps,
                                 const std::map<std::string, double>& hyperparams,
                                 const ActionSpaceConfig& cfg = ActionSpaceConfig{});

DiagnosticScheme build_diagnostic_scheme(const std::string& report, const Observation& obs,
                                         const RewardBreakdown& breakdown, double r_threshold = 85.0);

void to_json(json& j, const ProblemDescription& d);
void from_json(const json& j, ProblemDescription& d);
void to_json(json& j, const EstimatorFlag& f);
void from_json(const json& j, EstimatorFlag& f);
void to_json(json& j, const ProblemScheme& s);
void from_json(const json& j, ProblemScheme& s);
void to_json(json& j, const MethodScheme& s);
void from_json(const json& j, MethodScheme& s);
void to_json(json& j, const DiagnosticScheme& s);
void from_json(const json& j, DiagnosticScheme& s);

// Canonical text: UTF-8 JSON object with sorted keys.
template <typename Scheme>
std::string serialize_scheme(const Scheme& s) {
  return json(s).dump();
}

json parse_json(const std::string& text);  // ParseError on malformed text

template <typename Scheme>
Scheme deserialize_scheme(const std::string& text) {
  json j = parse_json(text);
  try {
    return j.get<Scheme>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("scheme field error: ") + e.what());
  }
}

}  // namespace driftguard
