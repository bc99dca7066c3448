#include "driftguard/bandit.hpp"

#include <algorithm>
#include <cmath>

namespace driftguard {

void to_json(json& j, const BanditConfig& c) {
  j = json{{"prior_precision", c.prior_precision}, {"noise_variance", c.noise_variance},
           {"novelty_rho", c.novelty_rho},         {"block_beta", c.block_beta},
           {"gamma", c.gamma},                     {"epsilon_floor", c.epsilon_floor},
           {"close_weight", c.close_weight},       {"weak_weight", c.weak_weight}};
}

void from_json(const json& j, BanditConfig& c) {
  BanditConfig d;
  c.prior_precision = j.value("prior_precision", d.prior_precision);
  c.noise_variance = j.value("noise_variance", d.noise_variance);
  c.novelty_rho = j.value("novelty_rho", d.novelty_rho);
  c.block_beta = j.value("block_beta", d.block_beta);
  c.gamma = j.value("gamma", d.gamma);
  c.epsilon_floor = j.value("epsilon_floor", d.epsilon_floor);
  c.close_weight = j.value("close_weight", d.close_weight);
  c.weak_weight = j.value("weak_weight", d.weak_weight);
  if (!(c.prior_precision > 0) || !(c.noise_variance > 0)) throw ConfigError("bandit variances must be positive");
}

namespace {

std::size_t width(const std::vector<std::vector<std::string>>& dims) {
  std::size_t w = 0;
  for (auto& d : dims) w += d.size();
  return w;
}

double scaled_d_in(const ContextVector& x) { return std::min(1.0, x.d_in / 50.0); }
double scaled_log_n(const ContextVector& x) {
  return x.n_budget > 0 ? std::min(1.0, std::log10(double(x.n_budget)) / 7.0) : 0.0;
}

}  // namespace

FeatureEncoder::FeatureEncoder(ActionSpaceConfig cfg) : cfg_(std::move(cfg)) {
  sa_offset_ = 1 + 8;
  uq_offset_ = sa_offset_ + width(cfg_.sa_dims);
  inter_sa_ = uq_offset_ + width(cfg_.uq_dims);
  inter_uq_ = inter_sa_ + 2 * cfg_.sa_dims[1].size();
  dim_ = inter_uq_ + 2 * cfg_.uq_dims[0].size();
}

Eigen::VectorXd FeatureEncoder::encode(const ContextVector& x, const ActionTuple& a) const {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  phi[0] = 1.0;
  phi[1] = scaled_d_in(x);
  phi[2] = std::min(1.0, x.d_out / 10.0);
  phi[3] = scaled_log_n(x);
  phi[4] = std::clamp(x.epsilon, 0.0, 1.0);
  phi[5] = x.task == Task::SA ? 0.0 : 1.0;
  phi[6] = static_cast<int>(x.dist_mode) / 2.0;
  phi[7] = x.multi_output_flag ? 1.0 : 0.0;
  double feasible = 0;
  for (bool bit : x.feasibility_bits) feasible += bit ? 1.0 : 0.0;
  phi[8] = x.feasibility_bits.empty() ? 0.0 : feasible / double(x.feasibility_bits.size());

  const auto& dims = cfg_.dims_for(a.task);
  if (a.dims.size() != dims.size()) throw DimensionError("action has wrong number of dimensions: " + a.label());
  std::size_t off = a.task == Task::SA ? sa_offset_ : uq_offset_;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    auto it = std::find(dims[k].begin(), dims[k].end(), a.dims[k]);
    if (it == dims[k].end()) throw DimensionError("value outside catalog: " + a.dims[k]);
    phi[static_cast<Eigen::Index>(off + static_cast<std::size_t>(it - dims[k].begin()))] = 1.0;
    off += dims[k].size();
  }
  const auto& methods = cfg_.method_catalog(a.task);
  auto mi = static_cast<std::size_t>(std::find(methods.begin(), methods.end(), a.estimator()) - methods.begin());
  std::size_t base = (a.task == Task::SA ? inter_sa_ : inter_uq_) + 2 * mi;
  phi[static_cast<Eigen::Index>(base)] = scaled_d_in(x);
  phi[static_cast<Eigen::Index>(base + 1)] = scaled_log_n(x);
  return phi;
}

Eigen::VectorXd encode_features(const ContextVector& x, const ActionTuple& a, const ActionSpaceConfig& cfg) {
  return FeatureEncoder(cfg).encode(x, a);
}

Eigen::VectorXd PolicyState::posterior_mean() const { return precision.llt().solve(b); }

PolicyState init_policy(std::size_t dim, const BanditConfig& cfg) {
  PolicyState st;
  auto n = static_cast<Eigen::Index>(dim);
  st.precision = cfg.prior_precision * Eigen::MatrixXd::Identity(n, n);
  st.b = Eigen::VectorXd::Zero(n);
  st.noise_variance = cfg.noise_variance;
  return st;
}

double exploration_schedule(int n, ExplorationMode mode, const BanditConfig& cfg) {
  if (n < 1) throw ConfigError("exploration schedule starts at n = 1");
  double base = mode == ExplorationMode::Exploit ? 0.1 : mode == ExplorationMode::Neutral ? 0.5 : 1.0;
  return std::max(cfg.epsilon_floor, base * std::pow(cfg.gamma, n - 1));
}

PolicyDecision select_action(const PolicyState& st, const ProblemScheme& ps, const std::vector<ActionTuple>& feasible,
                             const std::optional<DiagnosticScheme>& diag, bool novelty_warning, std::uint64_t seed,
                             const BanditConfig& cfg, const ActionSpaceConfig& space) {
  if (feasible.empty()) throw NoFeasibleAction("no feasible action for " + ps.model_id);
  const auto& x = ps.context;

  std::vector<ActionTuple> candidates = feasible;
  if (diag && diag->prescribed_estimator) {
    std::vector<ActionTuple> pinned;
    for (auto& a : feasible)
      if (a.estimator() == *diag->prescribed_estimator) pinned.push_back(a);
    if (!pinned.empty()) candidates = std::move(pinned);
  }
  auto blocked = [&](const ActionTuple& a) {
    return diag && diag->block_action && a.estimator() == diag->subject_estimator;
  };

  Rng rng(mix_seed(seed, "select", static_cast<std::uint64_t>(st.iteration)));
  Eigen::LLT<Eigen::MatrixXd> llt(st.precision);
  if (llt.info() != Eigen::Success) throw InvalidReward("policy precision is not positive definite");
  Eigen::VectorXd mean = llt.solve(st.b);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  // Precision = L L^T, so L^{-T} z has covariance precision^{-1}.
  Eigen::VectorXd w = mean + llt.matrixU().solve(z);

  FeatureEncoder enc(space);
  PolicyDecision d;
  double best = -INFINITY;
  for (auto& a : candidates) {
    double s = w.dot(enc.encode(x, a));
    if (novelty_warning) {
      auto it = st.estimator_counts.find(a.estimator());
      if (it != st.estimator_counts.end() && it->second > 0) {
        s -= cfg.novelty_rho * double(it->second);
        d.novelty_penalty_applied = true;
      }
    }
    if (blocked(a)) s -= cfg.block_beta;
    d.sampled_scores[a.label()] = s;
    if (s > best) {
      best = s;
      d.top_scored = a;
    }
  }
  d.action = d.top_scored;

  double eps = exploration_schedule(st.iteration + 1, st.exploration_mode, cfg);
  if (rng.uniform() < eps) {
    std::vector<ActionTuple> pool;
    for (auto& a : candidates)
      if (!blocked(a)) pool.push_back(a);
    if (pool.empty()) pool = candidates;
    d.action = pool[rng.below(pool.size())];
    d.explored = true;
  }

  std::map<std::string, double> hp;
  if (diag && diag->prescribed_hyperparam &&
      (!diag->prescribed_estimator || *diag->prescribed_estimator == d.action.estimator()))
    hp = *diag->prescribed_hyperparam;
  d.method_scheme = build_method_scheme(d.action, ps, hp, space);
  return d;
}

PolicyState update(const PolicyState& st, const Eigen::VectorXd& phi, double reward, const std::string& estimator) {
  if (!std::isfinite(reward) || reward < 0.0 || reward > 100.0)
    throw InvalidReward("reward outside [0, 100]: " + std::to_string(reward));
  if (phi.size() != st.b.size()) throw DimensionError("feature dimension mismatch");
  PolicyState out = st;
  out.precision += phi * phi.transpose() / st.noise_variance;
  out.b += phi * (reward / st.noise_variance);
  out.iteration += 1;
  out.estimator_counts[estimator] += 1;
  return out;
}

PolicyState warm_start(const PolicyState& st, const ArchiveEntry& entry, MatchClass match, const ContextVector& x,
                       const BanditConfig& cfg, const ActionSpaceConfig& space) {
  if (match == MatchClass::None) throw ConfigError("warm start requires a close or weak match");
  FeatureEncoder enc(space);
  Eigen::MatrixXd dP = Eigen::MatrixXd::Zero(st.precision.rows(), st.precision.cols());
  Eigen::VectorXd db = Eigen::VectorXd::Zero(st.b.size());
  for (auto& [est, arm] : entry.per_arm_stats) {
    if (arm.action.task != x.task || arm.count <= 0) continue;
    Eigen::VectorXd phi = enc.encode(x, arm.action);
    dP += double(arm.count) * phi * phi.transpose() / st.noise_variance;
    db += double(arm.count) * arm.mean_reward * phi / st.noise_variance;
  }
  PolicyState out = st;
  Eigen::VectorXd m0 = st.posterior_mean();
  Eigen::VectorXd m_close = (st.precision + dP).llt().solve(st.b + db);
  double wgt = match == MatchClass::Close ? cfg.close_weight : cfg.weak_weight;
  out.precision = st.precision + wgt * dP;
  out.b = out.precision * (m0 + wgt * (m_close - m0));
  out.exploration_mode = match == MatchClass::Close ? ExplorationMode::Exploit : ExplorationMode::Neutral;
  return out;
}

json policy_snapshot(const PolicyState& st) {
  std::vector<double> p(st.precision.data(), st.precision.data() + st.precision.size());
  std::vector<double> b(st.b.data(), st.b.data() + st.b.size());
  return json{{"dim", st.b.size()},
              {"precision", p},
              {"b", b},
              {"noise_variance", st.noise_variance},
              {"iteration", st.iteration},
              {"estimator_counts", st.estimator_counts},
              {"exploration_mode", to_string(st.exploration_mode)}};
}

PolicyState policy_from_snapshot(const json& j) {
  try {
    PolicyState st;
    auto n = j.at("dim").get<Eigen::Index>();
    auto p = j.at("precision").get<std::vector<double>>();
    auto b = j.at("b").get<std::vector<double>>();
    if (n <= 0 || static_cast<Eigen::Index>(p.size()) != n * n || static_cast<Eigen::Index>(b.size()) != n)
      throw ParseError("policy snapshot has inconsistent sizes");
    st.precision = Eigen::Map<Eigen::MatrixXd>(p.data(), n, n);
    st.b = Eigen::Map<Eigen::VectorXd>(b.data(), n);
    st.noise_variance = j.at("noise_variance").get<double>();
    st.iteration = j.at("iteration").get<int>();
    st.estimator_counts = j.at("estimator_counts").get<std::map<std::string, long long>>();
    st.exploration_mode = parse_exploration_mode(j.at("exploration_mode").get<std::string>());
    return st;
  } catch (const json::exception& e) {
    throw ParseError(std::string("policy snapshot: ") + e.what());
  }
}

}  // namespace driftguard
