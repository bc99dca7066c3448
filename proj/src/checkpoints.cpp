#include "driftguard/checkpoints.hpp"

#include <algorithm>
#include <cmath>

namespace driftguard {

namespace {

constexpr EnumNames<CpId, 8> kCpNames{{{{CpId::CP0, "CP0"},
                                        {CpId::CP1, "CP1"},
                                        {CpId::CP2, "CP2"},
                                        {CpId::CP3, "CP3"},
                                        {CpId::CP4, "CP4"},
                                        {CpId::CP5, "CP5"},
                                        {CpId::CP6, "CP6"},
                                        {CpId::CP7, "CP7"}}}};
constexpr EnumNames<FailureAction, 8> kActionNames{{{{FailureAction::RepromptCoordinator, "reprompt_coordinator"},
                                                     {FailureAction::CriticReject, "critic_reject"},
                                                     {FailureAction::WarnStudyAgent, "warn_study_agent"},
                                                     {FailureAction::StudyAgentRetry, "study_agent_retry"},
                                                     {FailureAction::InspectorReject, "inspector_reject"},
                                                     {FailureAction::WarnAdvisor, "warn_advisor"},
                                                     {FailureAction::WarnStrategist, "warn_strategist"},
                                                     {FailureAction::NeutralWarmStart, "neutral_warm_start"}}}};
constexpr EnumNames<Verdict, 3> kVerdictNames{
    {{{Verdict::Pass, "pass"}, {Verdict::Block, "block"}, {Verdict::Warn, "warn"}}}};

}  // namespace

std::string to_string(CpId id) { return kCpNames.name(id); }
std::string to_string(FailureAction a) { return kActionNames.name(a); }
std::string to_string(Verdict v) { return kVerdictNames.name(v); }
CpId parse_cp_id(std::string_view s) { return kCpNames.parse(s); }
FailureAction parse_failure_action(std::string_view s) { return kActionNames.parse(s); }
Verdict parse_verdict(std::string_view s) { return kVerdictNames.parse(s); }

const std::array<CheckpointSpec, 8>& default_checkpoint_specs() {
  using F = FailureAction;
  static const std::array<CheckpointSpec, 8> specs = {{
      {CpId::CP0, "problem_scheme", "archive", false, false, 0.70, 0.70, false, true, F::NeutralWarmStart},
      {CpId::CP1, "user_message", "context_vector", true, false, 0.25, 0.15, true, true, F::RepromptCoordinator},
      {CpId::CP2, "action", "context_vector", true, false, 0.30, 0.20, true, true, F::CriticReject},
      {CpId::CP3, "template", "strategy", false, false, 0.30, 0.20, true, true, F::WarnStudyAgent},
      {CpId::CP4, "cell_map", "strategy", true, false, 0.35, 0.25, true, true, F::StudyAgentRetry},
      {CpId::CP5, "assembled_plan", "strategy", true, false, 0.35, 0.25, true, true, F::InspectorReject},
      {CpId::CP6, "diagnosis", "observation", false, false, 0.30, 0.20, true, true, F::WarnAdvisor},
      {CpId::CP7, "new_action", "previous_action", false, true, 0.35, 0.25, true, true, F::WarnStrategist},
  }};
  return specs;
}

bool is_ablated(const CheckpointSpec& spec) { return spec.theta0 < 0.0; }

ThresholdState init_threshold(const CheckpointSpec& spec, double null_quantile) {
  ThresholdState st;
  st.theta0 = spec.theta0;
  st.ema_mean = spec.theta0;
  st.ema_var = 0.0;
  st.count = 0;
  if (is_ablated(spec)) {
    st.floor = spec.theta0;
    st.current = spec.theta0;
    return st;
  }
  st.floor = std::max(spec.theta_min, null_quantile);
  st.current = std::max(spec.theta0, st.floor);
  return st;
}

ThresholdState update_threshold(const ThresholdState& st, double observed, const AdaptiveParams& p) {
  ThresholdState out = st;
  if (st.theta0 < 0.0 || !std::isfinite(observed)) return out;
  double diff = observed - st.ema_mean;
  out.ema_mean = p.decay * st.ema_mean + (1.0 - p.decay) * observed;
  out.ema_var = p.decay * st.ema_var + (1.0 - p.decay) * diff * diff;
  out.count = st.count + 1;
  double cap = st.theta0 + p.cap_margin;
  if (out.count < p.warmup) {
    out.current = std::max(st.theta0, st.floor);
  } else {
    double target = out.ema_mean - p.std_multiplier * std::sqrt(out.ema_var);
    // Floor wins when it sits above the cap.
    out.current = std::max(st.floor, std::min(target, cap));
  }
  return out;
}

CheckpointResult evaluate_similarity(const CheckpointSpec& spec, double s, const ThresholdState& st) {
  CheckpointResult r;
  r.cp_id = spec.id;
  r.similarity = s;
  r.threshold = is_ablated(spec) ? spec.theta0 : st.current;
  if (is_ablated(spec)) {
    r.verdict = Verdict::Pass;
    return r;
  }
  bool ok = spec.inverted ? s < r.threshold : s >= r.threshold;
  if (ok) {
    r.verdict = Verdict::Pass;
    return r;
  }
  r.verdict = spec.blocking ? Verdict::Block : Verdict::Warn;
  r.failure_action = spec.on_failure;
  r.novelty_flag = spec.inverted;
  return r;
}

CheckpointResult evaluate(const CheckpointSpec& spec, const std::string& up, const std::string& down,
                          const ThresholdState& st, const EmbeddingProvider& provider) {
  return evaluate_similarity(spec, cosine(provider.embed(up), provider.embed(down)), st);
}

Cp0Result evaluate_cp0(const ProblemScheme& ps, const Archive& archive, const Cp0Params& p) {
  Cp0Result r;
  auto found = lookup(ps, archive, p.weights);
  r.similarity = found.similarity;
  if (found.entry && found.similarity >= p.close) {
    r.match = MatchClass::Close;
    r.exploration_mode = ExplorationMode::Exploit;
    r.warm_start = found.entry;
  } else if (found.entry && found.similarity >= p.weak) {
    r.match = MatchClass::Weak;
    r.exploration_mode = ExplorationMode::Neutral;
    r.warm_start = found.entry;
  } else {
    r.match = MatchClass::None;
    r.exploration_mode = ExplorationMode::ExploreMax;
  }
  r.screening_first = r.match == MatchClass::None && ps.context.d_in >= ps.screening_dim_threshold;
  return r;
}

void to_json(json& j, const CheckpointResult& r) {
  j = json::object();
  j["cp_id"] = to_string(r.cp_id);
  j["similarity"] = r.similarity;
  j["threshold"] = r.threshold;
  j["verdict"] = to_string(r.verdict);
  j["failure_action"] = r.failure_action ? json(to_string(*r.failure_action)) : json(nullptr);
  j["retry_count"] = r.retry_count;
  j["novelty_flag"] = r.novelty_flag;
}

void from_json(const json& j, CheckpointResult& r) {
  r.cp_id = parse_cp_id(j.at("cp_id").get<std::string>());
  r.similarity = j.at("similarity").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.verdict = parse_verdict(j.at("verdict").get<std::string>());
  if (j.at("failure_action").is_null())
    r.failure_action.reset();
  else
    r.failure_action = parse_failure_action(j.at("failure_action").get<std::string>());
  r.retry_count = j.at("retry_count").get<int>();
  r.novelty_flag = j.at("novelty_flag").get<bool>();
}

void to_json(json& j, const ThresholdState& s) {
  j = json{{"theta0", s.theta0}, {"ema_mean", s.ema_mean}, {"ema_var", s.ema_var},
           {"count", s.count},   {"floor", s.floor},       {"current", s.current}};
}

void from_json(const json& j, ThresholdState& s) {
  s.theta0 = j.at("theta0").get<double>();
  s.ema_mean = j.at("ema_mean").get<double>();
  s.ema_var = j.at("ema_var").get<double>();
  s.count = j.at("count").get<int>();
  s.floor = j.at("floor").get<double>();
  s.current = j.at("current").get<double>();
}

}  // namespace driftguard
