#include "driftguard/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "driftguard/embedding.hpp"

namespace driftguard {

namespace {

constexpr EnumNames<SessionOutcomeKind, 3> kOutcomeNames{{{{SessionOutcomeKind::Converged, "converged"},
                                                           {SessionOutcomeKind::BudgetExhausted, "budget_exhausted"},
                                                           {SessionOutcomeKind::Aborted, "aborted"}}}};

std::size_t idx(CpId id) { return static_cast<std::size_t>(id); }

json cp_spec_json(const CheckpointSpec& s) {
  return json{{"theta0", s.theta0}, {"theta_min", s.theta_min}, {"adaptive", s.adaptive}, {"enabled", s.enabled}};
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string to_string(SessionOutcomeKind k) { return kOutcomeNames.name(k); }

void to_json(json& j, const EnvironmentConfig& e) {
  j = json{{"kind", e.kind},
           {"means", e.means},
           {"default_mean", e.default_mean},
           {"sigma", e.sigma},
           {"reward_sequence", e.reward_sequence}};
}

void from_json(const json& j, EnvironmentConfig& e) {
  EnvironmentConfig d;
  e.kind = j.value("kind", d.kind);
  e.means = j.value("means", d.means);
  e.default_mean = j.value("default_mean", d.default_mean);
  e.sigma = j.value("sigma", d.sigma);
  e.reward_sequence = j.value("reward_sequence", d.reward_sequence);
  if (e.kind != "numeric" && e.kind != "simulated") throw ConfigError("unknown environment kind: " + e.kind);
  if (e.sigma < 0) throw ConfigError("environment sigma must be non-negative");
}

void to_json(json& j, const SessionConfig& c) {
  json cps = json::object();
  for (auto& s : c.checkpoints) cps[to_string(s.id)] = cp_spec_json(s);
  j = json{{"n_max", c.n_max},
           {"r_threshold", c.r_threshold},
           {"checkpoints", cps},
           {"drifts", c.drifts},
           {"seed", c.seed},
           {"script", c.script},
           {"policy_persistence", c.policy_persistence},
           {"max_debug_retries", c.max_debug_retries},
           {"cp_retry_budget", c.cp_retry_budget},
           {"estimator_whitelist", c.estimator_whitelist},
           {"environment", c.environment},
           {"reward", c.reward},
           {"bandit", c.bandit},
           {"space", c.space},
           {"adaptive",
            {{"decay", c.adaptive.decay},
             {"warmup", c.adaptive.warmup},
             {"cap_margin", c.adaptive.cap_margin},
             {"std_multiplier", c.adaptive.std_multiplier}}},
           {"cp0", {{"close", c.cp0.close}, {"weak", c.cp0.weak}}},
           {"session_id", c.session_id}};
  put_opt(j, "forced_first_estimator", c.forced_first_estimator);
}

void from_json(const json& j, SessionConfig& c) {
  try {
    SessionConfig d;
    c = d;
    c.n_max = j.value("n_max", d.n_max);
    c.r_threshold = j.value("r_threshold", d.r_threshold);
    if (j.contains("checkpoints")) {
      for (auto& [name, v] : j.at("checkpoints").items()) {
        auto& s = c.checkpoints[idx(parse_cp_id(name))];
        s.theta0 = v.value("theta0", s.theta0);
        s.theta_min = v.value("theta_min", s.theta_min);
        s.adaptive = v.value("adaptive", s.adaptive);
        s.enabled = v.value("enabled", s.enabled);
        if (!is_ablated(s) && s.theta_min > s.theta0) throw ConfigError("theta_min above theta0 for " + name);
      }
    }
    c.drifts = j.value("drifts", d.drifts);
    c.seed = j.value("seed", d.seed);
    c.script = j.value("script", d.script);
    c.policy_persistence = j.value("policy_persistence", d.policy_persistence);
    c.max_debug_retries = j.value("max_debug_retries", d.max_debug_retries);
    c.cp_retry_budget = j.value("cp_retry_budget", d.cp_retry_budget);
    get_opt(j, "forced_first_estimator", c.forced_first_estimator);
    c.estimator_whitelist = j.value("estimator_whitelist", d.estimator_whitelist);
    c.environment = j.value("environment", d.environment);
    c.reward = j.value("reward", d.reward);
    c.bandit = j.value("bandit", d.bandit);
    c.space = j.value("space", d.space);
    if (j.contains("adaptive")) {
      auto& a = j.at("adaptive");
      c.adaptive.decay = a.value("decay", d.adaptive.decay);
      c.adaptive.warmup = a.value("warmup", d.adaptive.warmup);
      c.adaptive.cap_margin = a.value("cap_margin", d.adaptive.cap_margin);
      c.adaptive.std_multiplier = a.value("std_multiplier", d.adaptive.std_multiplier);
    }
    if (j.contains("cp0")) {
      c.cp0.close = j.at("cp0").value("close", d.cp0.close);
      c.cp0.weak = j.at("cp0").value("weak", d.cp0.weak);
    }
    c.session_id = j.value("session_id", d.session_id);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("session config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("session config: ") + e.what());
  }
  if (c.n_max < 1) throw ConfigError("n_max must be at least 1");
  if (!(c.r_threshold > 0 && c.r_threshold <= 100)) throw ConfigError("r_threshold must lie in (0, 100]");
  if (c.max_debug_retries < 0 || c.cp_retry_budget < 0) throw ConfigError("retry budgets must be non-negative");
  for (auto& e : c.estimator_whitelist)
    if (!is_known_estimator(e)) throw ConfigError("unknown estimator in whitelist: " + e);
  if (c.forced_first_estimator && !is_known_estimator(*c.forced_first_estimator))
    throw ConfigError("unknown forced first estimator: " + *c.forced_first_estimator);
}

void ablate_all_checkpoints(SessionConfig& c) {
  for (auto& s : c.checkpoints)
    if (s.id != CpId::CP0) s.theta0 = -1.0;
}

double default_null_quantile() {
  static const double q = [] {
    auto corpus = load_corpus(default_null_corpus_path());
    return calibrate_null(corpus, 2000, 7).quantile(0.95);
  }();
  return q;
}

void to_json(json& j, const IterationRecord& r) {
  json drifts = json::array();
  for (auto& d : r.drift_events) drifts.push_back({{"site", d.site}, {"from", d.from}, {"to", d.to}});
  j = json{{"n", r.n},
           {"action", r.action},
           {"plan", r.plan},
           {"executed", r.executed},
           {"failed", r.failed},
           {"mismatch", r.mismatch()},
           {"observation", r.observation},
           {"reward", r.reward},
           {"checkpoint_events", r.checkpoint_events},
           {"drift_events", drifts},
           {"diagnostic", r.diagnostic},
           {"advisor_text", r.advisor_text},
           {"strategist_input", r.strategist_input},
           {"notes", r.notes}};
}

std::string SessionTrace::to_jsonl() const {
  std::ostringstream os;
  json header{{"type", "header"},
              {"schema_version", 1},
              {"config_digest", digest(config)},
              {"config", config},
              {"problem", problem},
              {"cp0",
               {{"similarity", cp0_similarity},
                {"match", to_string(cp0_match)},
                {"exploration_mode", to_string(exploration_mode)},
                {"screening_first", screening_first}}},
              {"group_a_events", group_a_events}};
  os << header.dump() << "\n";
  for (auto& r : records) {
    json line = r;
    line["type"] = "iteration";
    os << line.dump() << "\n";
  }
  json summary{{"type", "summary"},
               {"outcome", to_string(outcome)},
               {"abort_reason", abort_reason},
               {"best_reward", best_reward},
               {"iterations_to_best", iterations_to_best},
               {"records", records.size()}};
  put_opt(summary, "iterations_to_converge", iterations_to_converge);
  os << summary.dump() << "\n";
  return os.str();
}

Observation execute_plan(const ExecutionPlan& plan, const BenchmarkModel& model, const EnvironmentConfig& env,
                         int iteration, std::map<std::string, std::size_t>& sequence_pos) {
  Observation obs;
  obs.hyperparams = plan.hyperparams;
  obs.read_attributes = plan.output_bindings;
  obs.result.estimator = plan.estimator;
  try {
    if (!is_known_estimator(plan.estimator)) throw UnknownEstimator("unknown estimator " + plan.estimator);
    if (plan.model_id != model.id) throw UnknownModel("plan targets " + plan.model_id);
    if (env.kind == "simulated") {
      const auto& info = estimator_info(plan.estimator);
      SAResult r;
      r.estimator = plan.estimator;
      r.simulated = true;
      std::vector<double> fill = model.analytic_s1.value_or(std::vector<double>(model.d_in, 0.0));
      for (auto& p : info.produces) {
        const std::vector<double>& v = p.find("total") != std::string::npos && model.analytic_st ? *model.analytic_st : fill;
        if (p == "first_order_indices") r.s1 = v;
        else if (p == "total_order_indices") r.st = v;
        else if (p == "chatterjee_indices" || p == "cvm_indices") r.rank_indices = v;
        else if (p == "mu_star") r.mu_star = v;
        else if (p == "sigma") r.sigma = v;
        else if (p == "generalized_first_order_indices") r.generalized_s1 = v;
        else if (p == "generalized_total_order_indices") r.generalized_st = v;
      }
      auto it = plan.hyperparams.find("n_samples");
      r.evaluations_used = n_cost(plan.estimator, it == plan.hyperparams.end() ? 1 : std::llround(it->second), model.d_in);
      double reward;
      auto seq = env.reward_sequence.find(plan.estimator);
      if (seq != env.reward_sequence.end() && !seq->second.empty()) {
        auto& pos = sequence_pos[plan.estimator];
        reward = seq->second[std::min(pos, seq->second.size() - 1)];
        ++pos;
      } else {
        auto m = env.means.find(plan.estimator);
        double mean = m == env.means.end() ? env.default_mean : m->second;
        Rng rng(mix_seed(plan.seed, "simulated_reward", static_cast<std::uint64_t>(iteration)));
        reward = mean + env.sigma * rng.normal();
      }
      r.scripted_reward = std::clamp(reward, 0.0, 100.0);
      obs.result = r;
    } else {
      RunOptions opt;
      auto get = [&](const char* k) {
        auto it = plan.options.find(k);
        return it == plan.options.end() ? std::string() : it->second;
      };
      opt.sampling = get("sampling") == "LatinHypercube" ? Sampling::LatinHypercube : Sampling::MonteCarlo;
      opt.staged = get("allocation") == "Staged";
      opt.treatment = get("output") == "Aggregated" ? OutputTreatment::Aggregated : OutputTreatment::Scalar;
      obs.result = run_estimator(plan.estimator, model, plan.hyperparams, plan.seed, opt);
    }
    for (auto& b : plan.output_bindings)
      if (!obs.result.attribute(b))
        throw UnknownAttribute(estimator_info(plan.estimator).library_class + " has no attribute '" + b + "'");
    obs.status = ExecStatus::Ok;
  } catch (const Error& e) {
    obs.status = ExecStatus::Failed;
    obs.error_class = e.kind();
    obs.error_message = e.what();
    obs.result.s1.reset();
    obs.result.st.reset();
    obs.result.rank_indices.reset();
    obs.result.mu_star.reset();
    obs.result.sigma.reset();
    obs.result.generalized_s1.reset();
    obs.result.generalized_st.reset();
    obs.result.scripted_reward.reset();
    obs.result.estimator = plan.estimator;
  }
  return obs;
}

SessionState init_session_state(const SessionConfig& cfg, const ProblemScheme& ps) {
  SessionState st;
  st.cfg = cfg;
  st.ps = ps;
  st.model = &benchmark_model(ps.model_id);
  st.policy = init_policy(FeatureEncoder(cfg.space).dim(), cfg.bandit);
  double q = default_null_quantile();
  for (auto& s : cfg.checkpoints) st.thresholds[idx(s.id)] = init_threshold(s, q);
  return st;
}

namespace {

// Evaluates one checkpoint, records it and adapts its threshold.
CheckpointResult run_cp(SessionState& st, CpId id, const std::string& up, const std::string& down, int retry,
                        std::vector<CheckpointResult>& events) {
  const auto& spec = st.cfg.checkpoints[idx(id)];
  if (!spec.enabled) return CheckpointResult{id, 1.0, 0.0, Verdict::Pass, std::nullopt, retry, false};
  auto r = evaluate(spec, up, down, st.thresholds[idx(id)]);
  r.retry_count = retry;
  events.push_back(r);
  if (spec.adaptive && !is_ablated(spec))
    st.thresholds[idx(id)] = update_threshold(st.thresholds[idx(id)], r.similarity, st.cfg.adaptive);
  return r;
}

StrategyReport report_of(const AgentMessage& m) { return m.payload.at("report").get<StrategyReport>(); }

AgentMessage report_message(Role role, const StrategyReport& r) {
  return AgentMessage{role, json{{"kind", "strategy_report"}, {"report", r}}, ""};
}

// A scripted strategist may name an action without a matching scheme.
StrategyReport normalize_report(StrategyReport r, const SessionState& st) {
  if (r.method_scheme.estimator != r.action.estimator() || r.method_scheme.action != r.action)
    r.method_scheme = build_method_scheme(r.action, st.ps, {}, st.cfg.space);
  return r;
}

std::vector<ActionTuple> candidate_actions(const SessionState& st, const std::vector<std::string>& rejected) {
  ActionSpace space(st.cfg.space);
  auto feasible = space.filter_feasible(st.ps.context);
  auto keep = [&](auto pred) {
    std::vector<ActionTuple> out;
    for (auto& a : feasible)
      if (pred(a)) out.push_back(a);
    if (!out.empty()) feasible = std::move(out);
  };
  if (!st.cfg.estimator_whitelist.empty()) {
    std::vector<ActionTuple> out;
    for (auto& a : feasible)
      if (std::find(st.cfg.estimator_whitelist.begin(), st.cfg.estimator_whitelist.end(), a.estimator()) !=
          st.cfg.estimator_whitelist.end())
        out.push_back(a);
    feasible = std::move(out);
  }
  if (feasible.empty()) return feasible;
  keep([&](const ActionTuple& a) { return std::find(rejected.begin(), rejected.end(), a.estimator()) == rejected.end(); });
  if (st.iteration == 1 && st.cfg.forced_first_estimator)
    keep([&](const ActionTuple& a) { return a.estimator() == *st.cfg.forced_first_estimator; });
  else if (st.iteration == 1 && st.screening_first)
    keep([&](const ActionTuple& a) {
      return a.task == Task::SA && estimator_info(a.estimator()).index_type == "screening";
    });
  return feasible;
}

AgentMessage call_strategist(SessionState& st, const json& input_payload, int attempt) {
  AgentMessage input{Role::Strategist, input_payload, ""};
  auto rule = [&st](const AgentMessage& in, std::uint64_t seed) {
    std::vector<std::string> rejected = in.payload.value("rejected", std::vector<std::string>{});
    bool novelty = in.payload.value("novelty_warning", false);
    auto feasible = candidate_actions(st, rejected);
    auto d = select_action(st.policy, st.ps, feasible, st.last_diag, novelty, seed, st.cfg.bandit, st.cfg.space);
    StrategyReport r{d.action, d.method_scheme, d.explored, novelty, d.novelty_penalty_applied};
    return report_message(Role::Strategist, r);
  };
  std::uint64_t seed = mix_seed(st.cfg.seed, "strategist", static_cast<std::uint64_t>(st.iteration),
                                static_cast<std::uint64_t>(attempt) + (input_payload.value("novelty_warning", false) ? 100 : 0));
  auto out = run_agent(Role::Strategist, input, st.cfg.script, seed, rule, {st.iteration, attempt});
  auto r = normalize_report(report_of(out), st);
  out.payload["report"] = r;
  return out;
}

std::optional<DriftOutcome> drift_at(const SessionState& st, const std::string& site, const AgentMessage& msg) {
  for (std::size_t k = 0; k < st.cfg.drifts.size(); ++k) {
    const auto& spec = st.cfg.drifts[k];
    if (spec.site != site) continue;
    auto out = inject_drift(msg, spec, mix_seed(st.cfg.seed, "drift_spec", k), st.iteration, st.ps, st.cfg.space);
    if (out.fired) return out;
  }
  return std::nullopt;
}

void fail_iteration(IterationRecord& rec, const std::string& why) {
  rec.failed = true;
  rec.notes.push_back(why);
  rec.reward = RewardBreakdown{};
  rec.reward.notes.push_back({"total", why, 0.0});
  rec.diagnostic = DiagnosticScheme{};
  rec.diagnostic.convergence_status = ConvergenceStatus::Failed;
  rec.diagnostic.penalize_action = true;
  rec.diagnostic.subject_estimator = rec.action.estimator();
  rec.diagnostic.physical_insight = why;
}

}  // namespace

IterationRecord run_iteration(SessionState& st) {
  st.iteration += 1;
  IterationRecord rec;
  rec.n = st.iteration;
  const auto n = static_cast<std::uint64_t>(st.iteration);

  // Policy: Strategist, Critic and CP2, with the register's pending violation attached.
  json request{{"kind", "strategy_request"}, {"iteration", st.iteration}, {"context", st.ps.context}};
  put_opt(request, "pending_violation", st.reg.pending_violation);
  put_opt(request, "diagnostic", st.last_diag);
  put_opt(request, "advisor_warning", st.advisor_warning);
  st.reg.pending_violation.reset();
  st.advisor_warning.reset();
  rec.strategist_input = request;

  std::optional<StrategyReport> report;
  std::vector<std::string> rejected;
  const std::string compat = render_compatibility_text(st.ps, st.cfg.space);
  ActionSpace space(st.cfg.space);
  for (int attempt = 0; attempt <= st.cfg.cp_retry_budget; ++attempt) {
    json in = request;
    in["rejected"] = rejected;
    auto r = report_of(call_strategist(st, in, attempt));
    rec.action = r.action;
    auto critique = critic_review(r, st.ps, space);
    auto cp2 = run_cp(st, CpId::CP2, render_proposal_text(r.action), compat, attempt, rec.checkpoint_events);
    if (critique.approved && cp2.verdict != Verdict::Block) {
      report = r;
      break;
    }
    rec.notes.push_back("critic_reject:" + r.action.estimator());
    rejected.push_back(r.action.estimator());
  }
  if (!report) {
    fail_iteration(rec, "cp2_retry_exhausted");
    return rec;
  }

  // CP7: a repeated action earns one re-selection under a novelty warning.
  if (st.prev_action) {
    auto cp7 = run_cp(st, CpId::CP7, render_action_text(report->action), render_action_text(*st.prev_action), 0,
                      rec.checkpoint_events);
    if (cp7.verdict == Verdict::Warn) {
      json in = request;
      in["novelty_warning"] = true;
      in["rejected"] = rejected;
      auto r = report_of(call_strategist(st, in, 0));
      auto critique = critic_review(r, st.ps, space);
      auto cp2 = run_cp(st, CpId::CP2, render_proposal_text(r.action), compat, 0, rec.checkpoint_events);
      if (critique.approved && cp2.verdict != Verdict::Block) report = r;
      rec.notes.push_back("novelty_reselect:" + report->action.estimator());
    }
  }
  rec.action = report->action;
  const StrategyReport original = *report;
  const std::string strategy_text = render_strategy_text(original);

  // Implementation: Study Agent with CP3 and CP4.
  auto study_drift = drift_at(st, "study_agent", report_message(Role::Strategist, original));
  if (study_drift) rec.drift_events.push_back({"study_agent", study_drift->from, study_drift->to});
  std::optional<CellMap> cell_map;
  StrategyReport carried = original;  // the report the accepted cell map was built from
  for (int attempt = 0; attempt <= st.cfg.cp_retry_budget; ++attempt) {
    // Retries work from the orchestrator's copy of the report.
    StrategyReport seen = attempt == 0 && study_drift ? report_of(study_drift->message) : original;
    auto tpl = retrieve_template(seen.action.estimator());
    auto cp3 = run_cp(st, CpId::CP3, tpl.text, render_strategy_text(seen), attempt, rec.checkpoint_events);
    AgentMessage in{Role::Strategist, json{{"kind", "study_request"}, {"report", seen}}, ""};
    if (tpl.template_id) in.payload["template_id"] = *tpl.template_id;
    if (cp3.verdict == Verdict::Warn) in.payload["cp3_warning"] = "no close template; build from cheatsheet";
    auto rule = [&](const AgentMessage& m, std::uint64_t) {
      auto rep = m.payload.at("report").get<StrategyReport>();
      std::optional<std::string> tid;
      if (m.payload.contains("template_id")) tid = m.payload.at("template_id").get<std::string>();
      return AgentMessage{Role::StudyAgent, json{{"kind", "cell_map"}, {"cell_map", study_agent_plan(rep, tid, st.ps.model_id)}}, ""};
    };
    auto out = run_agent(Role::StudyAgent, in, st.cfg.script, mix_seed(st.cfg.seed, "study", n, attempt), rule,
                         {st.iteration, attempt});
    auto cm = out.payload.at("cell_map").get<CellMap>();
    auto cp4 = run_cp(st, CpId::CP4, strategy_text, render_cell_map_text(cm), attempt, rec.checkpoint_events);
    if (cp4.verdict != Verdict::Block) {
      cell_map = cm;
      carried = seen;
      break;
    }
    rec.notes.push_back("study_agent_retry");
  }
  if (!cell_map) {
    fail_iteration(rec, "cp4_retry_exhausted");
    return rec;
  }

  // Refactor Agent, Inspector and CP5.
  auto refactor_drift = drift_at(st, "refactor_agent", report_message(Role::Strategist, carried));
  if (refactor_drift) rec.drift_events.push_back({"refactor_agent", refactor_drift->from, refactor_drift->to});
  const std::string strategy_text_cp5 = render_strategy_text(original, false);
  std::optional<ExecutionPlan> plan;
  std::optional<MethodScheme> plan_scheme;
  for (int attempt = 0; attempt <= st.cfg.cp_retry_budget; ++attempt) {
    StrategyReport seen = attempt > 0 ? original : refactor_drift ? report_of(refactor_drift->message) : carried;
    AgentMessage in{Role::StudyAgent, json{{"kind", "refactor_request"}, {"report", seen}, {"cell_map", *cell_map}}, ""};
    auto rule = [&](const AgentMessage& m, std::uint64_t) {
      auto rep = m.payload.at("report").get<StrategyReport>();
      auto cm = m.payload.at("cell_map").get<CellMap>();
      auto p = refactor_build(rep, cm, mix_seed(st.cfg.seed, "exec", n));
      return AgentMessage{Role::RefactorAgent, json{{"kind", "execution_plan"}, {"plan", p}}, ""};
    };
    auto out = run_agent(Role::RefactorAgent, in, st.cfg.script, mix_seed(st.cfg.seed, "refactor", n, attempt), rule,
                         {st.iteration, attempt});
    auto p = out.payload.at("plan").get<ExecutionPlan>();

    AgentMessage insp_in{Role::RefactorAgent,
                         json{{"kind", "inspection_request"}, {"plan", p}, {"method_scheme", seen.method_scheme}}, ""};
    auto insp_rule = [&](const AgentMessage& m, std::uint64_t) {
      auto v = inspector_check(m.payload.at("plan").get<ExecutionPlan>(), m.payload.at("method_scheme").get<MethodScheme>());
      return AgentMessage{Role::Inspector, json{{"kind", "inspection"}, {"approved", v.approved}, {"reasons", v.reasons}}, ""};
    };
    auto verdict = run_agent(Role::Inspector, insp_in, st.cfg.script, mix_seed(st.cfg.seed, "inspector", n, attempt),
                             insp_rule, {st.iteration, attempt});
    bool approved = verdict.payload.value("approved", false);
    auto cp5 = run_cp(st, CpId::CP5, strategy_text_cp5, render_plan_text(p), attempt, rec.checkpoint_events);
    if (approved && cp5.verdict != Verdict::Block) {
      plan = p;
      plan_scheme = seen.method_scheme;
      break;
    }
    std::string why = "inspector_reject";
    for (auto& reason : verdict.payload.value("reasons", std::vector<std::string>{})) why += ":" + reason;
    rec.notes.push_back(why);
  }
  if (!plan) {
    fail_iteration(rec, "cp5_retry_exhausted");
    return rec;
  }

  // Execution with the Debugger's self-healing loop.
  Observation obs = execute_plan(*plan, *st.model, st.cfg.environment, st.iteration, st.sequence_pos);
  for (int k = 0; k < st.cfg.max_debug_retries && obs.status == ExecStatus::Failed; ++k) {
    AgentMessage in{Role::RefactorAgent,
                    json{{"kind", "debug_request"}, {"plan", *plan}, {"error_class", obs.error_class},
                         {"error_message", obs.error_message}, {"method_scheme", original.method_scheme}},
                    ""};
    auto rule = [&](const AgentMessage& m, std::uint64_t) {
      auto f = debugger_fix(m.payload.at("plan").get<ExecutionPlan>(), m.payload.at("error_class").get<std::string>(),
                            m.payload.at("method_scheme").get<MethodScheme>());
      return AgentMessage{Role::Debugger, json{{"kind", "fix"}, {"fix", f}}, ""};
    };
    try {
      auto out = run_agent(Role::Debugger, in, st.cfg.script, mix_seed(st.cfg.seed, "debugger", n, k), rule,
                           {st.iteration, k});
      apply_fix(*plan, out.payload.at("fix").get<FixInstructions>());
      rec.notes.push_back("debugger_patch:" + obs.error_class);
    } catch (const Unrecoverable& e) {
      rec.notes.push_back(std::string("unrecoverable:") + e.what());
      break;
    }
    obs = execute_plan(*plan, *st.model, st.cfg.environment, st.iteration, st.sequence_pos);
  }
  rec.plan = *plan;
  rec.executed = true;

  // Evaluation: Advisor and CP6.
  AgentMessage adv_in{Role::RefactorAgent,
                      json{{"kind", "advice_request"},
                           {"observation", obs},
                           {"requested_estimator", original.action.estimator()},
                           {"method_scheme", original.method_scheme}},
                      ""};
  auto adv_rule = [&](const AgentMessage& m, std::uint64_t) {
    auto text = advisor_diagnose(m.payload.at("observation").get<Observation>(),
                                 m.payload.at("requested_estimator").get<std::string>(),
                                 m.payload.at("method_scheme").get<MethodScheme>());
    return AgentMessage{Role::Advisor, json{{"kind", "diagnosis"}, {"text", text}}, ""};
  };
  auto advice = run_agent(Role::Advisor, adv_in, st.cfg.script, mix_seed(st.cfg.seed, "advisor", n), adv_rule,
                          {st.iteration, 0});
  rec.advisor_text = advice.payload.value("text", std::string());
  auto cp6 = run_cp(st, CpId::CP6, rec.advisor_text, render_observation_text(obs), 0, rec.checkpoint_events);
  if (cp6.verdict == Verdict::Warn) st.advisor_warning = "diagnosis not grounded in the observation";
  const std::string advice_lower = lower(rec.advisor_text);
  for (auto& w : obs.result.warnings)
    if (advice_lower.find(lower(w.code)) != std::string::npos) w.addressed = true;
  rec.observation = obs;

  // Reward, register, diagnosis and policy update.
  std::optional<Observation> prev;
  if (auto it = st.prev_obs.find(obs.result.estimator); it != st.prev_obs.end()) prev = it->second;
  rec.reward = compute_reward(obs, original.method_scheme, st.ps.context, st.model->analytic_s1, prev, st.cfg.reward);
  rec.diagnostic = build_diagnostic_scheme(rec.advisor_text, obs, rec.reward, st.cfg.r_threshold);
  rec.diagnostic.subject_estimator = rec.action.estimator();
  if (obs.status == ExecStatus::Ok) st.prev_obs[obs.result.estimator] = obs;
  return rec;
}

namespace {

// Register append, policy update and carry-over shared by completed and failed iterations.
void close_iteration(SessionState& st, const IterationRecord& rec) {
  st.reg = register_append(st.reg, {rec.n, rec.action, rec.reward.total});
  if (!rec.action.dims.empty()) {
    FeatureEncoder enc(st.cfg.space);
    double r = rec.diagnostic.penalize_action ? 0.0 : rec.reward.total;
    st.policy = update(st.policy, enc.encode(st.ps.context, rec.action), r, rec.action.estimator());
    st.prev_action = rec.action;
  }
  st.last_diag = rec.diagnostic;
}

}  // namespace

SessionTrace run_session(const SessionConfig& cfg, const ProblemDescription& desc, Archive& archive) {
  SessionTrace trace;
  trace.config = cfg;
  trace.config["problem"] = desc;
  ActionSpace space(cfg.space);

  // Group A: Coordinator, CP1, Gatekeeper, Model Translator.
  std::optional<ProblemScheme> ps;
  double q = default_null_quantile();
  ThresholdState cp1_state = init_threshold(cfg.checkpoints[idx(CpId::CP1)], q);
  for (int attempt = 0; attempt <= cfg.cp_retry_budget; ++attempt) {
    AgentMessage in{Role::Coordinator, json{{"kind", "problem_description"}, {"description", desc}}, desc.message};
    auto rule = [&](const AgentMessage& m, std::uint64_t) {
      auto d = m.payload.at("description").get<ProblemDescription>();
      return AgentMessage{Role::Coordinator, json{{"kind", "problem_scheme"}, {"scheme", coordinator_parse(d, space)}}, ""};
    };
    ProblemScheme parsed;
    try {
      auto out = run_agent(Role::Coordinator, in, cfg.script, mix_seed(cfg.seed, "coordinator", 0, attempt), rule,
                           {0, attempt});
      parsed = out.payload.at("scheme").get<ProblemScheme>();
    } catch (const InvalidProblem& e) {
      trace.outcome = SessionOutcomeKind::Aborted;
      trace.abort_reason = std::string("coordinator: ") + e.what();
      return trace;
    }
    const auto& spec = cfg.checkpoints[idx(CpId::CP1)];
    if (!spec.enabled || desc.message.empty()) {
      ps = parsed;
      break;
    }
    auto r = evaluate(spec, desc.message, render_context_text(parsed), cp1_state);
    r.retry_count = attempt;
    trace.group_a_events.push_back(r);
    if (spec.adaptive && !is_ablated(spec)) cp1_state = update_threshold(cp1_state, r.similarity, cfg.adaptive);
    if (r.verdict != Verdict::Block) {
      ps = parsed;
      break;
    }
  }
  if (!ps) {
    trace.outcome = SessionOutcomeKind::Aborted;
    trace.abort_reason = "cp1_retry_exhausted";
    return trace;
  }
  trace.problem = *ps;

  auto gate = run_agent(Role::Gatekeeper, AgentMessage{Role::Coordinator, json{{"kind", "problem_scheme"}, {"scheme", *ps}}, ""},
                        cfg.script, mix_seed(cfg.seed, "gatekeeper"), [&](const AgentMessage& m, std::uint64_t) {
                          auto v = gatekeeper_check(m.payload.at("scheme").get<ProblemScheme>());
                          return AgentMessage{Role::Gatekeeper, json{{"kind", "gate"}, {"approved", v.approved}, {"reasons", v.reasons}}, ""};
                        });
  if (!gate.payload.value("approved", false)) {
    trace.outcome = SessionOutcomeKind::Aborted;
    trace.abort_reason = "gatekeeper: " + gate.payload.value("reasons", json::array()).dump();
    return trace;
  }
  try {
    const auto& m = benchmark_model(ps->model_id);
    if (m.d_in != ps->context.d_in || m.d_out != ps->context.d_out)
      throw UnknownModel("model " + m.id + " does not match the parsed dimensions");
  } catch (const UnknownModel& e) {
    trace.outcome = SessionOutcomeKind::Aborted;
    trace.abort_reason = std::string("model_translator: ") + e.what();
    return trace;
  }

  SessionState st = init_session_state(cfg, *ps);
  st.thresholds[idx(CpId::CP1)] = cp1_state;

  // CP0: archive lookup, warm start or anomaly-directed exploration.
  auto cp0 = evaluate_cp0(*ps, archive, cfg.cp0);
  trace.cp0_similarity = cp0.similarity;
  trace.cp0_match = cp0.match;
  trace.exploration_mode = cp0.exploration_mode;
  trace.screening_first = cp0.screening_first;
  st.screening_first = cp0.screening_first;
  const ArchiveEntry* snapshot_entry = nullptr;
  if (cfg.policy_persistence)
    for (auto it = archive.entries.rbegin(); it != archive.entries.rend(); ++it)
      if (it->policy_snapshot) {
        snapshot_entry = &*it;
        break;
      }
  if (snapshot_entry) {
    st.policy = policy_from_snapshot(*snapshot_entry->policy_snapshot);
    // Counters are per session; the posterior carries over.
    st.policy.iteration = 0;
    st.policy.estimator_counts.clear();
  } else if (cp0.warm_start && cp0.match != MatchClass::None) {
    st.policy = warm_start(st.policy, *cp0.warm_start, cp0.match, ps->context, cfg.bandit, cfg.space);
  }
  st.policy.exploration_mode = cp0.exploration_mode;

  for (int k = 0; k < cfg.n_max; ++k) {
    auto rec = run_iteration(st);
    close_iteration(st, rec);
    trace.records.push_back(std::move(rec));
    const auto& last = trace.records.back();
    if (last.reward.total > trace.best_reward || trace.iterations_to_best == 0) {
      if (last.reward.total > trace.best_reward || trace.records.size() == 1) {
        trace.best_reward = last.reward.total;
        trace.iterations_to_best = last.n;
      }
    }
    if (last.reward.total >= cfg.r_threshold) {
      trace.outcome = SessionOutcomeKind::Converged;
      trace.iterations_to_converge = last.n;
      break;
    }
  }
  if (!trace.iterations_to_converge) trace.outcome = SessionOutcomeKind::BudgetExhausted;
  trace.policy_snapshot = policy_snapshot(st.policy);

  SessionOutcome outcome;
  outcome.problem = *ps;
  outcome.session_id = cfg.session_id.empty() ? "session-" + std::to_string(cfg.seed) : cfg.session_id;
  FeatureEncoder enc(cfg.space);
  for (auto& r : trace.records) {
    if (r.action.dims.empty()) continue;
    auto phi = enc.encode(ps->context, r.action);
    std::vector<double> v(phi.data(), phi.data() + phi.size());
    outcome.steps.push_back({r.action, r.reward.total, digest(json(v))});
  }
  if (cfg.policy_persistence) outcome.policy_snapshot = trace.policy_snapshot;
  if (!outcome.steps.empty()) archive = record_session(archive, outcome);
  return trace;
}

std::vector<AblationRow> run_ablation_suite(const SessionConfig& base, const ProblemDescription& desc,
                                            const std::vector<AblationCondition>& conditions,
                                            const std::vector<std::uint64_t>& seeds,
                                            std::vector<std::pair<std::string, SessionTrace>>* traces) {
  std::vector<AblationRow> rows;
  for (auto& cond : conditions) {
    for (auto seed : seeds) {
      SessionConfig cfg = base;
      cfg.seed = seed;
      cfg.drifts = cond.drifts;
      for (auto& name : cond.disabled) {
        if (name == "all")
          ablate_all_checkpoints(cfg);
        else
          cfg.checkpoints[idx(parse_cp_id(name))].theta0 = -1.0;
      }
      Archive archive;
      auto trace = run_session(cfg, desc, archive);
      AblationRow row;
      row.condition = cond.name;
      row.seed = seed;
      row.records = static_cast<int>(trace.records.size());
      row.outcome = to_string(trace.outcome);
      row.best_reward = trace.best_reward;
      row.iterations_to_converge = trace.iterations_to_converge;
      if (!trace.records.empty()) row.first_reward = trace.records.front().reward.total;
      for (auto& r : trace.records) {
        row.mismatches += r.mismatch() ? 1 : 0;
        row.drift_events += static_cast<int>(r.drift_events.size());
        for (auto& e : r.checkpoint_events)
          if (e.verdict == Verdict::Block && (e.cp_id == CpId::CP2 || e.cp_id == CpId::CP4 || e.cp_id == CpId::CP5))
            ++row.blocking_events;
      }
      rows.push_back(row);
      if (traces) traces->emplace_back(cond.name, std::move(trace));
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "condition,seed,records,match,mismatches,blocking_events,drift_events,first_reward,best_reward,"
        "iterations_to_converge,outcome\n";
  for (auto& r : rows) {
    os << r.condition << "," << r.seed << "," << r.records << "," << (r.mismatches == 0 ? "true" : "false") << ","
       << r.mismatches << "," << r.blocking_events << "," << r.drift_events << "," << r.first_reward << ","
       << r.best_reward << "," << (r.iterations_to_converge ? std::to_string(*r.iterations_to_converge) : "") << ","
       << r.outcome << "\n";
  }
  return os.str();
}

}  // namespace driftguard
