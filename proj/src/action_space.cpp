#include "driftguard/action_space.hpp"

#include <algorithm>
#include <set>

namespace driftguard {

const std::vector<EstimatorInfo>& estimator_catalog() {
  static const std::vector<EstimatorInfo> cat = {
      {"Sobol", "variance_based", {"first_order_indices", "total_order_indices"},
       {"first_order_indices", "total_order_indices"}, "500*(d_in+2)", CostModel::PickFreeze,
       "sensitivity.SobolSensitivity", "pick_freeze", ExecutorKind::Numeric,
       {"sobol", "saltelli", "jansen", "pickfreeze", "variance", "decomposition"},
       {"independent_inputs", "d_out_eq_1", "n_ge_500_d_in_plus_2"},
       {"correlated_inputs", "d_in_gt_30_without_screening"}},
      {"Chatterjee", "rank_based", {"chatterjee_indices"}, {"chatterjee_indices"}, "1000",
       CostModel::Single, "sensitivity.ChatterjeeSensitivity", "single_loop", ExecutorKind::Numeric,
       {"chatterjee", "rank", "correlation", "xi", "coefficient", "momentfree"},
       {"independent_inputs", "moment_free_requested"},
       {"n_lt_10"}},
      {"CVM", "rank_based", {"cvm_indices"}, {"cvm_indices"}, "500*(d_in+2)", CostModel::PickFreeze,
       "sensitivity.CramerVonMisesSensitivity", "pick_freeze", ExecutorKind::Numeric,
       {"cramer", "von", "mises", "cdf", "distributional", "pickfreezecdf"},
       {"independent_inputs", "n_ge_500_d_in_plus_2"},
       {"small_sample_instability"}},
      {"Morris", "screening", {"mu_star", "sigma"}, {"mu_star", "sigma"}, "20*(d_in+1)", CostModel::Trajectories,
       "sensitivity.MorrisSensitivity", "trajectories", ExecutorKind::Numeric,
       {"morris", "elementary", "effects", "screening", "trajectories", "oat"},
       {"d_in_ge_screening_threshold"},
       {"d_in_below_screening_threshold"}},
      {"PCE_SA", "variance_based", {"first_order_indices", "total_order_indices"},
       {"first_order_indices", "total_order_indices"}, "500*d_in", CostModel::Single,
       "sensitivity.PceSensitivity", "regression", ExecutorKind::Simulated,
       {"polynomial", "chaos", "expansion", "surrogate", "coefficients", "pce"},
       {"smooth_response", "n_ge_500_d_in"},
       {"non_smooth_response", "insufficient_basis_orthogonality"}},
      {"Generalized_Sobol", "variance_based",
       {"generalized_first_order_indices", "generalized_total_order_indices"},
       {"generalized_first_order_indices", "generalized_total_order_indices"}, "500*(d_in+2)",
       CostModel::PickFreeze, "sensitivity.GeneralisedSobolSensitivity", "pick_freeze",
       ExecutorKind::Simulated,
       {"generalised", "multioutput", "aggregated", "covariance", "vectorvalued", "gamboa"},
       {"d_out_gt_1"},
       {"scalar_output"}},
  };
  return cat;
}

bool is_known_estimator(const std::string& id) {
  for (auto& e : estimator_catalog())
    if (e.id == id) return true;
  return false;
}

const EstimatorInfo& estimator_info(const std::string& id) {
  for (auto& e : estimator_catalog())
    if (e.id == id) return e;
  throw UnknownEstimator("unknown estimator: " + id);
}

std::vector<std::string> forbidden_attributes(const std::string& id) {
  const auto& own = estimator_info(id).produces;
  std::set<std::string> out;
  for (auto& e : estimator_catalog()) {
    if (e.id == id) continue;
    for (auto& p : e.produces)
      if (std::find(own.begin(), own.end(), p) == own.end()) out.insert(p);
  }
  return {out.begin(), out.end()};
}

long long eval_n_min(const std::string& f, int d_in, int /*d_out*/) {
  if (f == "500*(d_in+2)") return 500LL * (d_in + 2);
  if (f == "500*d_in") return 500LL * d_in;
  if (f == "2*C(d_in+3,3)") {
    long long n = d_in + 3;
    return 2 * (n * (n - 1) * (n - 2) / 6);
  }
  if (f == "1000") return 1000;
  if (f == "20*(d_in+1)") return 20LL * (d_in + 1);
  throw ConfigError("unknown n_min formula: " + f);
}

long long evaluations_per_sample(const std::string& est, int d_in) {
  switch (estimator_info(est).cost) {
    case CostModel::PickFreeze: return d_in + 2;
    case CostModel::Trajectories: return d_in + 1;
    case CostModel::Single: return 1;
  }
  return 1;
}

long long n_cost(const std::string& est, long long n, int d_in) { return n * evaluations_per_sample(est, d_in); }

void to_json(json& j, const ActionSpaceConfig& c) {
  j = json{{"sa_dims", c.sa_dims},
           {"uq_dims", c.uq_dims},
           {"reserved_dims", c.reserved_dims},
           {"screening_dim_threshold", c.screening_dim_threshold},
           {"pce_rule", c.pce_rule},
           {"pick_freeze_factor", c.pick_freeze_factor}};
}

void from_json(const json& j, ActionSpaceConfig& c) {
  ActionSpaceConfig d;
  c.sa_dims = j.value("sa_dims", d.sa_dims);
  c.uq_dims = j.value("uq_dims", d.uq_dims);
  c.reserved_dims = j.value("reserved_dims", d.reserved_dims);
  c.screening_dim_threshold = j.value("screening_dim_threshold", d.screening_dim_threshold);
  c.pce_rule = j.value("pce_rule", d.pce_rule);
  c.pick_freeze_factor = j.value("pick_freeze_factor", d.pick_freeze_factor);
  if (c.sa_dims.size() != 4) throw ConfigError("SA catalog must have 4 dimensions");
  if (c.uq_dims.size() != 6) throw ConfigError("UQ catalog must have 6 dimensions");
  for (auto& e : c.sa_dims[1])
    if (!is_known_estimator(e)) throw ConfigError("unknown estimator in SA catalog: " + e);
}

namespace {

std::function<bool(const ActionTuple&)> sa_estimator_is(std::string id) {
  return [id](const ActionTuple& a) { return a.task == Task::SA && a.estimator() == id; };
}

std::function<bool(const ActionTuple&)> uq_dim_is(std::size_t dim, std::string v) {
  return [dim, v](const ActionTuple& a) { return a.task == Task::UQ && a.dims.size() > dim && a.dims[dim] == v; };
}

std::optional<Violation> budget_at_least(const ContextVector& x, double need, const std::string& id,
                                         const std::string& rule) {
  if (static_cast<double>(x.n_budget) >= need) return std::nullopt;
  return Violation{id, "budget N=" + std::to_string(x.n_budget) + " below " + rule,
                   {{"n_budget", double(x.n_budget)}, {"required", need}}};
}

}  // namespace

std::vector<Predicate> default_predicates() {
  std::vector<Predicate> p;
  p.push_back({"morris_screening_high_dim", Task::SA, sa_estimator_is("Morris"),
               [](const ContextVector& x, const ActionSpaceConfig& c) -> std::optional<Violation> {
                 if (x.d_in >= c.screening_dim_threshold) return std::nullopt;
                 return Violation{"morris_screening_high_dim",
                                  "screening unreliable: d_in below threshold",
                                  {{"d_in", double(x.d_in)}, {"threshold", double(c.screening_dim_threshold)}}};
               }});
  p.push_back({"gen_sobol_multioutput", Task::SA, sa_estimator_is("Generalized_Sobol"),
               [](const ContextVector& x, const ActionSpaceConfig&) -> std::optional<Violation> {
                 if (x.d_out > 1) return std::nullopt;
                 return Violation{"gen_sobol_multioutput", "requires vector-valued output",
                                  {{"d_out", double(x.d_out)}}};
               }});
  p.push_back({"aggregation_multioutput", Task::SA,
               [](const ActionTuple& a) { return a.task == Task::SA && a.dims.size() > 3 && a.dims[3] == "Aggregated"; },
               [](const ContextVector& x, const ActionSpaceConfig&) -> std::optional<Violation> {
                 if (x.d_out > 1) return std::nullopt;
                 return Violation{"aggregation_multioutput", "aggregation requires vector-valued output",
                                  {{"d_out", double(x.d_out)}}};
               }});
  p.push_back({"pce_budget", Task::SA, sa_estimator_is("PCE_SA"),
               [](const ContextVector& x, const ActionSpaceConfig& c) {
                 return budget_at_least(x, double(eval_n_min(c.pce_rule, x.d_in, x.d_out)), "pce_budget", c.pce_rule);
               }});
  for (const char* id : {"Sobol", "CVM"}) {
    std::string pid = std::string(id) == "Sobol" ? "sobol_budget" : "cvm_budget";
    p.push_back({pid, Task::SA, sa_estimator_is(id),
                 [pid](const ContextVector& x, const ActionSpaceConfig& c) {
                   return budget_at_least(x, c.pick_freeze_factor * (x.d_in + 2), pid, "factor*(d_in+2)");
                 }});
  }
  p.push_back({"uq_pce_surrogate_budget", Task::UQ, uq_dim_is(1, "PCE"),
               [](const ContextVector& x, const ActionSpaceConfig&) {
                 return budget_at_least(x, 500.0 * x.d_in, "uq_pce_surrogate_budget", "500*d_in");
               }});
  p.push_back({"uq_gp_surrogate_dim", Task::UQ, uq_dim_is(1, "GaussianProcess"),
               [](const ContextVector& x, const ActionSpaceConfig&) -> std::optional<Violation> {
                 if (x.d_in <= 20) return std::nullopt;
                 return Violation{"uq_gp_surrogate_dim", "Gaussian process surrogate limited to d_in <= 20",
                                  {{"d_in", double(x.d_in)}}};
               }});
  p.push_back({"uq_mcmc_budget", Task::UQ, uq_dim_is(0, "MCMC"),
               [](const ContextVector& x, const ActionSpaceConfig&) {
                 return budget_at_least(x, 1000.0 * x.d_in, "uq_mcmc_budget", "1000*d_in");
               }});
  p.push_back({"uq_subset_simulation_budget", Task::UQ, uq_dim_is(4, "SubsetSimulation"),
               [](const ContextVector& x, const ActionSpaceConfig&) {
                 return budget_at_least(x, 10000.0, "uq_subset_simulation_budget", "10000");
               }});
  return p;
}

ActionSpace::ActionSpace(ActionSpaceConfig cfg) : cfg_(std::move(cfg)), preds_(default_predicates()) {}

std::vector<ActionTuple> ActionSpace::enumerate_actions(Task task) const {
  const auto& dims = cfg_.dims_for(task);
  std::vector<ActionTuple> out;
  std::vector<std::size_t> idx(dims.size(), 0);
  for (auto& d : dims)
    if (d.empty()) return out;
  while (true) {
    ActionTuple a{task, {}};
    for (std::size_t k = 0; k < dims.size(); ++k) a.dims.push_back(dims[k][idx[k]]);
    out.push_back(std::move(a));
    std::size_t k = dims.size();
    while (k > 0) {
      --k;
      if (++idx[k] < dims[k].size()) break;
      idx[k] = 0;
      if (k == 0) {
        std::sort(out.begin(), out.end());
        return out;
      }
    }
  }
}

FeasibilityReport ActionSpace::validate_action(const ActionTuple& a, const ContextVector& x) const {
  if (a.task != x.task) throw TaskMismatch("action task " + to_string(a.task) + " vs context " + to_string(x.task));
  FeasibilityReport r{a, true, {}};
  for (auto& p : preds_) {
    if (p.task != a.task || !p.applies(a)) continue;
    if (auto v = p.check(x, cfg_)) r.violated.push_back(*v);
  }
  r.verdict = r.violated.empty();
  return r;
}

std::vector<ActionTuple> ActionSpace::filter_feasible(const ContextVector& x) const {
  std::vector<ActionTuple> out;
  for (auto& a : enumerate_actions(x.task))
    if (validate_action(a, x).verdict) out.push_back(a);
  return out;
}

std::vector<bool> ActionSpace::feasibility_bits(const ContextVector& x) const {
  const auto& cat = cfg_.method_catalog(x.task);
  std::vector<bool> bits(cat.size(), false);
  for (auto& a : filter_feasible(x)) {
    auto it = std::find(cat.begin(), cat.end(), a.estimator());
    if (it != cat.end()) bits[it - cat.begin()] = true;
  }
  return bits;
}

ContextVector ActionSpace::make_context(int d_in, int d_out, long long n_budget, double epsilon, Task task,
                                        const std::vector<DistFamily>& dists) const {
  ContextVector x;
  x.d_in = d_in;
  x.d_out = d_out;
  x.n_budget = n_budget;
  x.epsilon = epsilon;
  x.task = task;
  x.dist_family = dists;
  // Mode of the per-input families; ties resolve to the earliest enum value.
  int counts[3] = {0, 0, 0};
  for (auto f : dists) ++counts[static_cast<int>(f)];
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (counts[k] > counts[best]) best = k;
  x.dist_mode = static_cast<DistFamily>(best);
  x.multi_output_flag = d_out > 1;
  x.feasibility_bits = feasibility_bits(x);
  return x;
}

}  // namespace driftguard
