#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftguard/pipeline.hpp"

namespace driftguard {

struct OutcomeBinning {
  int bins = 10;
  double lo = 0.0;
  double hi = 100.0;
  int bin_of(double r) const;
};

// One (action, outcome) draw for the plug-in estimator.
struct ActionOutcome {
  std::string context;  // context digest
  std::string action;   // estimator id
  double reward = 0.0;
};

struct EmpowermentEstimate {
  double mi_bits = 0.0;      // conditional on context: sample-weighted mean over groups
  double pooled_bits = 0.0;  // all samples in one group
  std::map<std::string, double> per_context_bits;
  int n_traces = 0;
  int n_samples = 0;
  int action_support = 0;
  int outcome_bins = 0;
};

void to_json(json& j, const EmpowermentEstimate& e);

// Plug-in mutual information in bits over (action, bin) pairs.
double plugin_mi_bits(const std::vector<std::pair<std::string, int>>& samples);

EmpowermentEstimate estimate_empowerment(const std::vector<ActionOutcome>& samples, const OutcomeBinning& binning = {},
                                         int n_traces = 0);
// Uses each record's policy action and its reward total. NoData on empty input.
EmpowermentEstimate estimate_empowerment(const std::vector<SessionTrace>& traces, const OutcomeBinning& binning = {});

struct PathDependenceScore {
  double score = 0.0;
  std::map<std::string, std::vector<double>> per_start_best_rewards;
  std::vector<std::string> skipped;  // infeasible forced starts
};

void to_json(json& j, const PathDependenceScore& p);

// Population variance of the per-start means over their squared mean.
double normalized_variance(const std::vector<double>& means);

// Returns the session's best reward, or nullopt when the start is infeasible.
using StartRunner = std::function<std::optional<double>(const std::string& start, std::uint64_t seed)>;

PathDependenceScore path_dependence(const StartRunner& runner, const std::vector<std::string>& forced_starts,
                                    const std::vector<std::uint64_t>& seeds);

// Runner backed by run_session with a fresh archive per call.
StartRunner session_runner(const SessionConfig& base, const ProblemDescription& desc);

std::vector<double> regret_curve(const SessionTrace& trace, double r_star);
std::vector<double> regret_curve(const std::vector<double>& rewards, double r_star);

// Stationary simulated arms driven through select_action/update directly.
struct BanditSimConfig {
  ProblemScheme problem;
  std::map<std::string, double> means;  // estimator -> mean reward
  double sigma = 5.0;
  int iterations = 100;
  BanditConfig bandit;
  ActionSpaceConfig space;
  ExplorationMode mode = ExplorationMode::ExploreMax;
};

// Per-step regret against the best mean, one entry per iteration.
std::vector<double> simulate_bandit_regret(const BanditSimConfig& cfg, std::uint64_t seed);

}  // namespace driftguard
