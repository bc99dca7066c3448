#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "driftguard/types.hpp"

namespace driftguard {

enum class CostModel { PickFreeze, Trajectories, Single };
enum class ExecutorKind { Numeric, Simulated };

// Static description of one SA estimator family.
struct EstimatorInfo {
  std::string id;
  std::string index_type;       // variance_based | rank_based | screening
  std::vector<std::string> produces;
  std::vector<std::string> required;
  std::string n_min_formula;
  CostModel cost = CostModel::Single;
  std::string library_class;
  std::string sampling_scheme;  // pick_freeze | single_loop | trajectories | regression
  ExecutorKind executor = ExecutorKind::Numeric;
  std::vector<std::string> signature;  // vocabulary used when rendering checkpoint texts
  std::vector<std::string> valid_when;
  std::vector<std::string> invalid_when;
};

const std::vector<EstimatorInfo>& estimator_catalog();
const EstimatorInfo& estimator_info(const std::string& id);  // UnknownEstimator
bool is_known_estimator(const std::string& id);

// Attributes produced by any other family and not by this one.
std::vector<std::string> forbidden_attributes(const std::string& id);

// Evaluates a named minimum-sample formula. Values are model evaluations.
long long eval_n_min(const std::string& formula, int d_in, int d_out);
// Model evaluations per base sample (pick-freeze row, trajectory, or point).
long long evaluations_per_sample(const std::string& estimator, int d_in);
long long n_cost(const std::string& estimator, long long n_samples, int d_in);

struct ActionSpaceConfig {
  std::vector<std::vector<std::string>> sa_dims{
      {"MonteCarlo", "LatinHypercube"},
      {"Sobol", "Chatterjee", "CVM", "Morris", "PCE_SA", "Generalized_Sobol"},
      {"Fixed_N", "Staged"},
      {"Scalar", "Aggregated"}};
  std::vector<std::vector<std::string>> uq_dims{
      {"MonteCarlo", "LatinHypercube", "ImportanceSampling", "MCMC"},
      {"None", "PCE", "GaussianProcess"},
      {"Fixed_N", "Staged"},
      {"Scalar", "Aggregated"},
      {"None", "FORM", "SubsetSimulation"},
      {"Moments", "Distribution"}};
  // Named but not enumerated: confidence intervals, screening pre-filter, surrogate.
  std::vector<std::string> reserved_dims{"D5_confidence_intervals", "D6_screening_prefilter", "D7_surrogate"};
  int screening_dim_threshold = 8;
  std::string pce_rule = "500*d_in";
  double pick_freeze_factor = 500.0;

  const std::vector<std::vector<std::string>>& dims_for(Task t) const { return t == Task::SA ? sa_dims : uq_dims; }
  // Catalog of the estimator-bearing dimension for a task.
  const std::vector<std::string>& method_catalog(Task t) const { return t == Task::SA ? sa_dims[1] : uq_dims[0]; }
};

void to_json(json& j, const ActionSpaceConfig& c);
void from_json(const json& j, ActionSpaceConfig& c);

struct Violation {
  std::string predicate;
  std::string reason;
  std::map<std::string, double> values;
  bool operator==(const Violation&) const = default;
};

struct FeasibilityReport {
  ActionTuple action;
  bool verdict = true;
  std::vector<Violation> violated;
};

// A feasibility predicate is data: an id, a scope test over the action and a
// check over the context. Adding a method means registering another row.
struct Predicate {
  std::string id;
  Task task;
  std::function<bool(const ActionTuple&)> applies;
  std::function<std::optional<Violation>(const ContextVector&, const ActionSpaceConfig&)> check;
};

class ActionSpace {
 public:
  explicit ActionSpace(ActionSpaceConfig cfg = {});

  const ActionSpaceConfig& config() const { return cfg_; }
  void register_predicate(Predicate p) { preds_.push_back(std::move(p)); }
  const std::vector<Predicate>& predicates() const { return preds_; }

  std::vector<ActionTuple> enumerate_actions(Task task) const;
  FeasibilityReport validate_action(const ActionTuple& a, const ContextVector& x) const;
  std::vector<ActionTuple> filter_feasible(const ContextVector& x) const;

  // Per-method feasibility (any feasible action carries the method).
  std::vector<bool> feasibility_bits(const ContextVector& x) const;

  ContextVector make_context(int d_in, int d_out, long long n_budget, double epsilon, Task task,
                             const std::vector<DistFamily>& dists) const;

 private:
  ActionSpaceConfig cfg_;
  std::vector<Predicate> preds_;
};

std::vector<Predicate> default_predicates();

}  // namespace driftguard
