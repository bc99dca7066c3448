#pragma once

#include <optional>
#include <string>
#include <vector>

#include "driftguard/records.hpp"
#include "driftguard/schemes.hpp"

namespace driftguard {

struct RewardConfig {
  // Integrity sub-items.
  double clean_execution = 20, attribute_completeness = 10, no_critical_warnings = 5;
  // Accuracy sub-items.
  double precision = 20, sum_constraint = 8, total_ge_first = 7;
  double convergence_tol = 1e-3;
  double constraint_tol = 0.05;
  // Details.
  double details_max = 15, nan_penalty = 5, negative_variance_penalty = 5, inversion_penalty = 3,
         warning_penalty = 2, inversion_tol = 0.02;
  // Optimality.
  double efficiency = 9, cost_ratio = 6;
};

void to_json(json& j, const RewardConfig& c);
void from_json(const json& j, RewardConfig& c);

RewardBreakdown compute_reward(const Observation& obs, const MethodScheme& ms, const ContextVector& x,
                               const std::optional<std::vector<double>>& ref,
                               const std::optional<Observation>& prev_obs, const RewardConfig& cfg = {});

struct RegisterEntry {
  int n = 0;
  ActionTuple action;
  double reward = 0.0;
  bool operator==(const RegisterEntry&) const = default;
};

struct SubmartingaleViolation {
  int n = 0;
  double previous = 0.0;
  double current = 0.0;
  bool operator==(const SubmartingaleViolation&) const = default;
};

struct RegisterState {
  std::vector<RegisterEntry> history;
  std::vector<int> submartingale_flags;
  // Set on a violation, read and cleared by the next Strategist call.
  std::optional<SubmartingaleViolation> pending_violation;
};

RegisterState register_append(const RegisterState& st, const RegisterEntry& rec);
double cumulative_regret(const RegisterState& st, double r_star);

void to_json(json& j, const SubmartingaleViolation& v);
void from_json(const json& j, SubmartingaleViolation& v);

}  // namespace driftguard
