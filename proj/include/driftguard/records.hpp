#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftguard/types.hpp"

namespace driftguard {

struct WarningRecord {
  std::string code;
  std::string message;
  bool critical = false;
  bool addressed = false;
  bool operator==(const WarningRecord&) const = default;
};

// Output of one estimator call (the observation O_n's numerical payload).
struct SAResult {
  std::string estimator;
  std::optional<std::vector<double>> s1, st;
  std::optional<std::vector<double>> rank_indices;  // Chatterjee xi or CVM indices
  std::optional<std::vector<double>> mu_star, sigma;
  std::optional<std::vector<double>> generalized_s1, generalized_st;
  long long evaluations_used = 0;
  double runtime_seconds = 0.0;  // wall clock, kept out of traces
  std::vector<WarningRecord> warnings;
  int nan_count = 0;
  bool negative_variance_flag = false;
  bool simulated = false;
  std::optional<double> scripted_reward;  // simulated environments only

  // Attribute lookup by output name; nullptr when the attribute was not produced.
  const std::vector<double>* attribute(const std::string& name) const;
  std::vector<std::string> populated_attributes() const;
  // NaN-aware; runtime_seconds is excluded.
  bool operator==(const SAResult&) const;
};

enum class ExecStatus { Ok, Failed };

struct Observation {
  std::optional<ExecStatus> status;
  std::string error_class;  // empty when status == Ok
  std::string error_message;
  SAResult result;
  std::vector<std::string> read_attributes;  // output bindings the plan read
  std::map<std::string, double> hyperparams;
  bool operator==(const Observation&) const = default;
};

struct ScoredItem {
  std::string component;
  std::string item;
  double points = 0.0;
  bool operator==(const ScoredItem&) const = default;
};

struct RewardBreakdown {
  double integrity = 0, accuracy = 0, details = 0, optimality = 0, total = 0;
  std::vector<ScoredItem> notes;
  bool operator==(const RewardBreakdown&) const = default;
};

void to_json(json& j, const WarningRecord& w);
void from_json(const json& j, WarningRecord& w);
void to_json(json& j, const SAResult& r);
void from_json(const json& j, SAResult& r);
void to_json(json& j, const Observation& o);
void from_json(const json& j, Observation& o);
void to_json(json& j, const ScoredItem& s);
void from_json(const json& j, ScoredItem& s);
void to_json(json& j, const RewardBreakdown& b);
void from_json(const json& j, RewardBreakdown& b);

}  // namespace driftguard
