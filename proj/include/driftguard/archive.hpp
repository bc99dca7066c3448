#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftguard/schemes.hpp"
#include "driftguard/types.hpp"

namespace driftguard {

enum class MatchClass { Close, Weak, None };
enum class ExplorationMode { Exploit, Neutral, ExploreMax };

std::string to_string(MatchClass m);
std::string to_string(ExplorationMode m);
MatchClass parse_match_class(std::string_view s);
ExplorationMode parse_exploration_mode(std::string_view s);

struct ArmStats {
  long long count = 0;
  double mean_reward = 0.0;
  ActionTuple action;  // most rewarding action seen for this estimator
  std::string feature_digest;
  bool operator==(const ArmStats&) const = default;
};

struct ArchiveEntry {
  std::vector<double> problem_features;
  std::string model_id;
  Task task = Task::SA;
  int d_in = 0;
  ActionTuple best_action;
  double best_reward = 0.0;
  std::map<std::string, ArmStats> per_arm_stats;
  std::string session_id;
  long long timestamp = 0;  // logical clock: position in the archive's history
  std::optional<json> policy_snapshot;
  bool operator==(const ArchiveEntry&) const = default;
};

struct SimilarityWeights {
  double feature = 0.5;
  double task = 0.3;
  double dim = 0.2;
  double dim_width = 4.0;
};

struct Archive {
  std::vector<ArchiveEntry> entries;
  std::string path;  // empty: in-memory only
  bool operator==(const Archive& o) const { return entries == o.entries; }
};

// [d_in/50, log10(N)/6, task one-hot (2), dist histogram (3), multi_output, high_d_in]
std::vector<double> problem_features(const ProblemScheme& ps);

double similarity(const ProblemScheme& current, const ArchiveEntry& entry, const SimilarityWeights& w = {});

struct LookupResult {
  std::optional<ArchiveEntry> entry;
  double similarity = 0.0;
};

LookupResult lookup(const ProblemScheme& current, const Archive& a, const SimilarityWeights& w = {});

struct SessionOutcome {
  ProblemScheme problem;
  std::string session_id;
  // One (action, reward, feature digest) per executed iteration.
  struct Step {
    ActionTuple action;
    double reward = 0.0;
    std::string feature_digest;
  };
  std::vector<Step> steps;
  std::optional<json> policy_snapshot;
};

// Returns the extended archive; when a.path is set the file is rewritten
// atomically first and a failure leaves both file and input untouched.
Archive record_session(const Archive& a, const SessionOutcome& outcome);

void persist(const Archive& a, const std::string& path);
Archive load_archive(const std::string& path);  // missing file: empty archive

void to_json(json& j, const ArmStats& s);
void from_json(const json& j, ArmStats& s);
void to_json(json& j, const ArchiveEntry& e);
void from_json(const json& j, ArchiveEntry& e);

}  // namespace driftguard
