#include "driftguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace driftguard {

int OutcomeBinning::bin_of(double r) const {
  if (bins < 1 || !(hi > lo)) throw ConfigError("outcome binning needs bins >= 1 and hi > lo");
  double u = (std::clamp(r, lo, hi) - lo) / (hi - lo);
  return std::min(bins - 1, static_cast<int>(u * bins));
}

void to_json(json& j, const EmpowermentEstimate& e) {
  j = json{{"mi_bits", e.mi_bits},
           {"pooled_bits", e.pooled_bits},
           {"per_context_bits", e.per_context_bits},
           {"n_traces", e.n_traces},
           {"n_samples", e.n_samples},
           {"action_support", e.action_support},
           {"outcome_bins", e.outcome_bins}};
}

double plugin_mi_bits(const std::vector<std::pair<std::string, int>>& samples) {
  if (samples.empty()) return 0.0;
  std::map<std::pair<std::string, int>, double> joint;
  std::map<std::string, double> pa;
  std::map<int, double> po;
  for (auto& s : samples) {
    joint[s] += 1;
    pa[s.first] += 1;
    po[s.second] += 1;
  }
  const double n = double(samples.size());
  double mi = 0.0;
  for (auto& [k, c] : joint) mi += c / n * std::log2(c * n / (pa[k.first] * po[k.second]));
  return std::max(0.0, mi);
}

EmpowermentEstimate estimate_empowerment(const std::vector<ActionOutcome>& samples, const OutcomeBinning& binning,
                                         int n_traces) {
  if (samples.empty()) throw NoData("no action/outcome samples");
  std::map<std::string, std::vector<std::pair<std::string, int>>> groups;
  std::vector<std::pair<std::string, int>> pooled;
  std::set<std::string> actions;
  for (auto& s : samples) {
    std::pair<std::string, int> p{s.action, binning.bin_of(s.reward)};
    groups[s.context].push_back(p);
    pooled.push_back(p);
    actions.insert(s.action);
  }
  EmpowermentEstimate e;
  for (auto& [ctx, g] : groups) {
    double bits = plugin_mi_bits(g);
    e.per_context_bits[ctx] = bits;
    e.mi_bits += bits * double(g.size()) / double(samples.size());
  }
  e.pooled_bits = plugin_mi_bits(pooled);
  e.n_traces = n_traces;
  e.n_samples = static_cast<int>(samples.size());
  e.action_support = static_cast<int>(actions.size());
  e.outcome_bins = binning.bins;
  return e;
}

EmpowermentEstimate estimate_empowerment(const std::vector<SessionTrace>& traces, const OutcomeBinning& binning) {
  std::vector<ActionOutcome> samples;
  for (auto& t : traces) {
    std::string ctx = digest(json(t.problem.context));
    for (auto& r : t.records)
      if (!r.action.dims.empty()) samples.push_back({ctx, r.action.estimator(), r.reward.total});
  }
  if (samples.empty()) throw NoData("traces carry no iteration records");
  return estimate_empowerment(samples, binning, static_cast<int>(traces.size()));
}

void to_json(json& j, const PathDependenceScore& p) {
  j = json{{"score", p.score}, {"per_start_best_rewards", p.per_start_best_rewards}, {"skipped", p.skipped}};
}

double normalized_variance(const std::vector<double>& means) {
  if (means.empty()) throw NoData("no per-start means");
  double m = 0;
  for (double v : means) m += v;
  m /= double(means.size());
  if (m <= 0) return 0.0;
  double var = 0;
  for (double v : means) var += (v - m) * (v - m);
  var /= double(means.size());
  return var / (m * m);
}

PathDependenceScore path_dependence(const StartRunner& runner, const std::vector<std::string>& forced_starts,
                                    const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty() || forced_starts.empty()) throw NoData("path dependence needs starts and seeds");
  PathDependenceScore out;
  std::vector<double> means;
  for (auto& start : forced_starts) {
    std::vector<double> best;
    for (auto seed : seeds) {
      auto r = runner(start, seed);
      if (!r) break;
      best.push_back(*r);
    }
    if (best.size() != seeds.size()) {
      out.skipped.push_back(start);
      continue;
    }
    double m = 0;
    for (double v : best) m += v;
    means.push_back(m / double(best.size()));
    out.per_start_best_rewards[start] = std::move(best);
  }
  if (means.empty()) throw NoData("every forced start was infeasible");
  out.score = normalized_variance(means);
  return out;
}

StartRunner session_runner(const SessionConfig& base, const ProblemDescription& desc) {
  return [base, desc](const std::string& start, std::uint64_t seed) -> std::optional<double> {
    ActionSpace space(base.space);
    auto ps = build_problem_scheme(desc, space);
    bool feasible = false;
    for (auto& a : space.filter_feasible(ps.context)) feasible = feasible || a.estimator() == start;
    if (!feasible) return std::nullopt;
    SessionConfig cfg = base;
    cfg.seed = seed;
    cfg.forced_first_estimator = start;
    Archive archive;
    auto trace = run_session(cfg, desc, archive);
    if (trace.outcome == SessionOutcomeKind::Aborted) return std::nullopt;
    return trace.best_reward;
  };
}

std::vector<double> regret_curve(const std::vector<double>& rewards, double r_star) {
  std::vector<double> out;
  out.reserve(rewards.size());
  double acc = 0;
  for (double r : rewards) out.push_back(acc += r_star - r);
  return out;
}

std::vector<double> regret_curve(const SessionTrace& trace, double r_star) {
  std::vector<double> rewards;
  for (auto& r : trace.records) rewards.push_back(r.reward.total);
  return regret_curve(rewards, r_star);
}

std::vector<double> simulate_bandit_regret(const BanditSimConfig& cfg, std::uint64_t seed) {
  if (cfg.means.empty()) throw ConfigError("bandit simulation needs arm means");
  ActionSpace space(cfg.space);
  std::vector<ActionTuple> arms;
  for (auto& a : space.filter_feasible(cfg.problem.context))
    if (cfg.means.count(a.estimator())) arms.push_back(a);
  if (arms.empty()) throw NoFeasibleAction("no feasible action carries a simulated arm");
  double best = -INFINITY;
  for (auto& [est, m] : cfg.means) best = std::max(best, m);

  FeatureEncoder enc(cfg.space);
  PolicyState st = init_policy(enc.dim(), cfg.bandit);
  st.exploration_mode = cfg.mode;
  Rng noise(mix_seed(seed, "bandit_sim_noise"));
  std::vector<double> regret;
  for (int n = 1; n <= cfg.iterations; ++n) {
    auto d = select_action(st, cfg.problem, arms, std::nullopt, false, mix_seed(seed, "bandit_sim", n), cfg.bandit,
                           cfg.space);
    double mean = cfg.means.at(d.action.estimator());
    double r = std::clamp(mean + cfg.sigma * noise.normal(), 0.0, 100.0);
    st = update(st, enc.encode(cfg.problem.context, d.action), r, d.action.estimator());
    regret.push_back(best - mean);
  }
  return regret;
}

}  // namespace driftguard
