#include "driftguard/reward.hpp"

#include <algorithm>
#include <cmath>

namespace driftguard {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / double(a.size());
}

int rank_inversions(const std::vector<double>& cur, const std::vector<double>& prev, double tol) {
  int n = 0;
  for (std::size_t i = 0; i < cur.size(); ++i)
    for (std::size_t j = i + 1; j < cur.size(); ++j) {
      double dc = cur[i] - cur[j], dp = prev[i] - prev[j];
      if (std::abs(dc) > tol && std::abs(dp) > tol && (dc > 0) != (dp > 0)) ++n;
    }
  return n;
}

// Main index vector scored for this scheme: first-order for variance-based
// families, the first required attribute otherwise.
const std::vector<double>* primary(const SAResult& r, const MethodScheme& ms) {
  if (ms.required_attributes.empty()) return nullptr;
  return r.attribute(ms.required_attributes.front());
}

}  // namespace

void to_json(json& j, const RewardConfig& c) {
  j = json{{"clean_execution", c.clean_execution},
           {"attribute_completeness", c.attribute_completeness},
           {"no_critical_warnings", c.no_critical_warnings},
           {"precision", c.precision},
           {"sum_constraint", c.sum_constraint},
           {"total_ge_first", c.total_ge_first},
           {"convergence_tol", c.convergence_tol},
           {"constraint_tol", c.constraint_tol},
           {"details_max", c.details_max},
           {"nan_penalty", c.nan_penalty},
           {"negative_variance_penalty", c.negative_variance_penalty},
           {"inversion_penalty", c.inversion_penalty},
           {"warning_penalty", c.warning_penalty},
           {"inversion_tol", c.inversion_tol},
           {"efficiency", c.efficiency},
           {"cost_ratio", c.cost_ratio}};
}

void from_json(const json& j, RewardConfig& c) {
  RewardConfig d;
  c.clean_execution = j.value("clean_execution", d.clean_execution);
  c.attribute_completeness = j.value("attribute_completeness", d.attribute_completeness);
  c.no_critical_warnings = j.value("no_critical_warnings", d.no_critical_warnings);
  c.precision = j.value("precision", d.precision);
  c.sum_constraint = j.value("sum_constraint", d.sum_constraint);
  c.total_ge_first = j.value("total_ge_first", d.total_ge_first);
  c.convergence_tol = j.value("convergence_tol", d.convergence_tol);
  c.constraint_tol = j.value("constraint_tol", d.constraint_tol);
  c.details_max = j.value("details_max", d.details_max);
  c.nan_penalty = j.value("nan_penalty", d.nan_penalty);
  c.negative_variance_penalty = j.value("negative_variance_penalty", d.negative_variance_penalty);
  c.inversion_penalty = j.value("inversion_penalty", d.inversion_penalty);
  c.warning_penalty = j.value("warning_penalty", d.warning_penalty);
  c.inversion_tol = j.value("inversion_tol", d.inversion_tol);
  c.efficiency = j.value("efficiency", d.efficiency);
  c.cost_ratio = j.value("cost_ratio", d.cost_ratio);
  if (c.clean_execution + c.attribute_completeness + c.no_critical_warnings != 35 ||
      c.precision + c.sum_constraint + c.total_ge_first != 35 || c.details_max != 15 ||
      c.efficiency + c.cost_ratio != 15)
    throw ConfigError("reward sub-items must sum to the component caps 35/35/15/15");
}

RewardBreakdown compute_reward(const Observation& obs, const MethodScheme& ms, const ContextVector& x,
                               const std::optional<std::vector<double>>& ref,
                               const std::optional<Observation>& prev_obs, const RewardConfig& cfg) {
  if (!obs.status) throw MalformedObservation("observation has no execution status");
  RewardBreakdown b;
  auto note = [&](const char* comp, std::string item, double pts) { b.notes.push_back({comp, std::move(item), pts}); };
  const SAResult& r = obs.result;

  if (r.scripted_reward) {
    double t = std::clamp(*r.scripted_reward, 0.0, 100.0);
    b.integrity = 0.35 * t;
    b.accuracy = 0.35 * t;
    b.details = 0.15 * t;
    b.optimality = 0.15 * t;
    b.total = b.integrity + b.accuracy + b.details + b.optimality;
    note("total", "scripted_reward", b.total);
    return b;
  }

  bool executed = *obs.status == ExecStatus::Ok;
  bool forbidden_read = std::any_of(obs.read_attributes.begin(), obs.read_attributes.end(),
                                    [&](const std::string& a) { return contains(ms.forbidden_attributes, a); });
  bool complete = executed && std::all_of(ms.required_attributes.begin(), ms.required_attributes.end(),
                                          [&](const std::string& a) {
                                            return r.attribute(a) != nullptr && contains(obs.read_attributes, a);
                                          });
  bool critical = std::any_of(r.warnings.begin(), r.warnings.end(), [](auto& w) { return w.critical; });

  // Integrity.
  if (executed && !forbidden_read) {
    b.integrity += cfg.clean_execution;
    note("integrity", "clean_execution", cfg.clean_execution);
  } else {
    note("integrity", executed ? "forbidden_attribute_read" : "execution_failed", 0);
  }
  if (complete) {
    b.integrity += cfg.attribute_completeness;
    note("integrity", "attribute_completeness", cfg.attribute_completeness);
  } else {
    note("integrity", "missing_required_attribute", 0);
  }
  if (executed && !critical) {
    b.integrity += cfg.no_critical_warnings;
    note("integrity", "no_critical_warnings", cfg.no_critical_warnings);
  }

  // Accuracy.
  const std::vector<double>* main = complete ? primary(r, ms) : nullptr;
  bool variance_based = contains(ms.produces, "first_order_indices") ||
                        contains(ms.produces, "generalized_first_order_indices");
  const std::vector<double>* prev_main = nullptr;
  if (prev_obs && prev_obs->status == ExecStatus::Ok && prev_obs->result.estimator == r.estimator)
    prev_main = primary(prev_obs->result, ms);
  if (main && all_finite(*main)) {
    if (variance_based && ref && ref->size() == main->size()) {
      double mae = mean_abs_diff(*main, *ref);
      double pts = cfg.precision * std::max(0.0, 1.0 - mae / x.epsilon);
      b.accuracy += pts;
      note("accuracy", "precision_vs_reference", pts);
    } else if (prev_main && prev_main->size() == main->size() && all_finite(*prev_main)) {
      double d = mean_abs_diff(*main, *prev_main);
      double pts = d < cfg.convergence_tol ? cfg.precision : cfg.precision * std::max(0.0, 1.0 - d / x.epsilon);
      b.accuracy += pts;
      note("accuracy", "convergence_vs_previous", pts);
    } else {
      note("accuracy", "no_precision_reference", 0);
    }
    const std::vector<double>* total = nullptr;
    if (contains(ms.produces, "total_order_indices")) total = r.attribute("total_order_indices");
    if (contains(ms.produces, "generalized_total_order_indices"))
      total = r.attribute("generalized_total_order_indices");
    if (variance_based) {
      double sum = 0;
      for (double s : *main) sum += s;
      if (sum >= -cfg.constraint_tol && sum <= 1.0 + cfg.constraint_tol) {
        b.accuracy += cfg.sum_constraint;
        note("accuracy", "sum_first_order_in_unit_interval", cfg.sum_constraint);
      } else {
        note("accuracy", "sum_first_order_out_of_range", 0);
      }
      if (total && total->size() == main->size() && all_finite(*total)) {
        bool ok = true;
        for (std::size_t i = 0; i < main->size(); ++i)
          if ((*total)[i] < (*main)[i] - cfg.constraint_tol) ok = false;
        if (ok) {
          b.accuracy += cfg.total_ge_first;
          note("accuracy", "total_ge_first_order", cfg.total_ge_first);
        } else {
          note("accuracy", "total_below_first_order", 0);
        }
      }
    }
  }

  // Details.
  double details = cfg.details_max;
  if (r.nan_count > 0) {
    details -= cfg.nan_penalty * r.nan_count;
    note("details", "nan_indices", -cfg.nan_penalty * r.nan_count);
  }
  if (r.negative_variance_flag) {
    details -= cfg.negative_variance_penalty;
    note("details", "negative_variance", -cfg.negative_variance_penalty);
  }
  if (main && prev_main && main->size() == prev_main->size()) {
    int inv = rank_inversions(*main, *prev_main, cfg.inversion_tol);
    if (inv > 0) {
      details -= cfg.inversion_penalty * inv;
      note("details", "rank_inversions", -cfg.inversion_penalty * inv);
    }
  }
  int unaddressed = static_cast<int>(std::count_if(r.warnings.begin(), r.warnings.end(),
                                                   [](auto& w) { return !w.addressed; }));
  if (unaddressed > 0) {
    details -= cfg.warning_penalty * unaddressed;
    note("details", "unaddressed_warnings", -cfg.warning_penalty * unaddressed);
  }
  b.details = std::max(0.0, details);

  // Optimality: deterministic cost proxy, only for runs that delivered the
  // required outputs.
  if (complete && r.evaluations_used > 0) {
    double eff = cfg.efficiency * std::min(1.0, double(ms.n_min_value) / double(r.evaluations_used));
    double ratio = ms.n_cost_actual > 0
                       ? cfg.cost_ratio * std::min(1.0, double(ms.n_min_value) / double(ms.n_cost_actual))
                       : 0.0;
    b.optimality = eff + ratio;
    note("optimality", "evaluation_efficiency", eff);
    note("optimality", "cost_vs_minimum", ratio);
  }

  b.integrity = std::clamp(b.integrity, 0.0, 35.0);
  b.accuracy = std::clamp(b.accuracy, 0.0, 35.0);
  b.details = std::clamp(b.details, 0.0, 15.0);
  b.optimality = std::clamp(b.optimality, 0.0, 15.0);
  b.total = b.integrity + b.accuracy + b.details + b.optimality;
  return b;
}

RegisterState register_append(const RegisterState& st, const RegisterEntry& rec) {
  if (!std::isfinite(rec.reward)) throw InvalidReward("register entry reward is not finite");
  RegisterState out = st;
  if (!out.history.empty() && rec.reward < out.history.back().reward) {
    out.submartingale_flags.push_back(rec.n);
    out.pending_violation = SubmartingaleViolation{rec.n, out.history.back().reward, rec.reward};
  }
  out.history.push_back(rec);
  return out;
}

double cumulative_regret(const RegisterState& st, double r_star) {
  double s = 0;
  for (auto& e : st.history) s += r_star - e.reward;
  return s;
}

void to_json(json& j, const SubmartingaleViolation& v) {
  j = json{{"n", v.n}, {"previous", v.previous}, {"current", v.current}};
}

void from_json(const json& j, SubmartingaleViolation& v) {
  v.n = j.at("n").get<int>();
  v.previous = j.at("previous").get<double>();
  v.current = j.at("current").get<double>();
}

}  // namespace driftguard
