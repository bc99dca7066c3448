#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "driftguard/archive.hpp"
#include "driftguard/schemes.hpp"

namespace driftguard {

struct BanditConfig {
  double prior_precision = 0.01;  // ridge lambda on every weight
  double noise_variance = 25.0;
  double novelty_rho = 5.0;
  double block_beta = 1000.0;
  double gamma = 0.6;
  double epsilon_floor = 0.02;
  double close_weight = 1.0;
  double weak_weight = 0.3;
};

void to_json(json& j, const BanditConfig& c);
void from_json(const json& j, BanditConfig& c);

// Layout: bias, 8 context features, SA one-hots, UQ one-hots, then the
// estimator x (d_in, log N) interaction block for both method catalogs.
class FeatureEncoder {
 public:
  explicit FeatureEncoder(ActionSpaceConfig cfg = {});
  std::size_t dim() const { return dim_; }
  Eigen::VectorXd encode(const ContextVector& x, const ActionTuple& a) const;  // DimensionError on a foreign value
  const ActionSpaceConfig& config() const { return cfg_; }

 private:
  ActionSpaceConfig cfg_;
  std::size_t sa_offset_ = 0, uq_offset_ = 0, inter_sa_ = 0, inter_uq_ = 0, dim_ = 0;
};

Eigen::VectorXd encode_features(const ContextVector& x, const ActionTuple& a, const ActionSpaceConfig& cfg = {});

struct PolicyState {
  Eigen::MatrixXd precision;
  Eigen::VectorXd b;  // precision * mean
  double noise_variance = 25.0;
  int iteration = 0;
  std::map<std::string, long long> estimator_counts;
  ExplorationMode exploration_mode = ExplorationMode::Neutral;

  Eigen::VectorXd posterior_mean() const;
};

PolicyState init_policy(std::size_t dim, const BanditConfig& cfg = {});

struct PolicyDecision {
  ActionTuple action;
  MethodScheme method_scheme;
  std::map<std::string, double> sampled_scores;  // keyed by action label
  ActionTuple top_scored;                        // argmax of the sampled scores
  bool explored = false;                         // epsilon branch taken
  bool novelty_penalty_applied = false;
};

double exploration_schedule(int n, ExplorationMode mode, const BanditConfig& cfg = {});

// x is ps.context; the scheme is needed to build the decision's MethodScheme.
PolicyDecision select_action(const PolicyState& st, const ProblemScheme& ps, const std::vector<ActionTuple>& feasible,
                             const std::optional<DiagnosticScheme>& diag, bool novelty_warning, std::uint64_t seed,
                             const BanditConfig& cfg = {}, const ActionSpaceConfig& space = {});

// reward must be finite and within [0, 100]; InvalidReward otherwise.
PolicyState update(const PolicyState& st, const Eigen::VectorXd& phi, double reward, const std::string& estimator);

// Pseudo-observation replay of an archive entry's arm statistics.
// Weak matches move the posterior mean weak_weight of the way a close match would.
PolicyState warm_start(const PolicyState& st, const ArchiveEntry& entry, MatchClass match, const ContextVector& x,
                       const BanditConfig& cfg = {}, const ActionSpaceConfig& space = {});

json policy_snapshot(const PolicyState& st);
PolicyState policy_from_snapshot(const json& j);  // ParseError on malformed input

}  // namespace driftguard
