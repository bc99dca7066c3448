#include "driftguard/agents.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "driftguard/embedding.hpp"

namespace driftguard {

namespace {

constexpr EnumNames<Role, 10> kRoleNames{{{{Role::Coordinator, "coordinator"},
                                           {Role::Gatekeeper, "gatekeeper"},
                                           {Role::ModelTranslator, "model_translator"},
                                           {Role::Strategist, "strategist"},
                                           {Role::Critic, "critic"},
                                           {Role::StudyAgent, "study_agent"},
                                           {Role::RefactorAgent, "refactor_agent"},
                                           {Role::Inspector, "inspector"},
                                           {Role::Debugger, "debugger"},
                                           {Role::Advisor, "advisor"}}}};

constexpr EnumNames<DriftKind, 3> kDriftNames{
    {{{DriftKind::MethodSwap, "method_swap"}, {DriftKind::FieldCorruption, "field_corruption"}, {DriftKind::None, "none"}}}};

std::string compact(const std::string& attr) {
  std::string out;
  for (char c : attr)
    if (c != '_') out.push_back(c);
  return out;
}

std::string class_name(const std::string& library_class) {
  auto dot = library_class.rfind('.');
  return dot == std::string::npos ? library_class : library_class.substr(dot + 1);
}

std::string signature_text(const std::string& estimator) {
  std::string out;
  for (auto& t : estimator_info(estimator).signature) out += " " + t;
  return out;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

std::string to_string(Role r) { return kRoleNames.name(r); }
Role parse_role(std::string_view s) { return kRoleNames.parse(s); }
std::string to_string(DriftKind k) { return kDriftNames.name(k); }

std::string expected_kind(Role r) {
  switch (r) {
    case Role::Coordinator: return "problem_scheme";
    case Role::Gatekeeper: return "gate";
    case Role::ModelTranslator: return "model_binding";
    case Role::Strategist: return "strategy_report";
    case Role::Critic: return "critique";
    case Role::StudyAgent: return "cell_map";
    case Role::RefactorAgent: return "execution_plan";
    case Role::Inspector: return "inspection";
    case Role::Debugger: return "fix";
    case Role::Advisor: return "diagnosis";
  }
  return "";
}

void to_json(json& j, const AgentMessage& m) {
  j = json{{"role", to_string(m.role)}, {"payload", m.payload}, {"free_text", m.free_text}};
}

void from_json(const json& j, AgentMessage& m) {
  m.role = parse_role(j.at("role").get<std::string>());
  m.payload = j.at("payload");
  m.free_text = j.value("free_text", std::string());
}

void to_json(json& j, const ExecutionPlan& p) {
  j = json{{"estimator", p.estimator},         {"hyperparams", p.hyperparams}, {"output_bindings", p.output_bindings},
           {"model_id", p.model_id},           {"seed", p.seed},               {"options", p.options}};
}

void from_json(const json& j, ExecutionPlan& p) {
  p.estimator = j.at("estimator").get<std::string>();
  p.hyperparams = j.value("hyperparams", std::map<std::string, double>{});
  p.output_bindings = j.value("output_bindings", std::vector<std::string>{});
  p.model_id = j.value("model_id", std::string());
  p.seed = j.value("seed", std::uint64_t{0});
  p.options = j.value("options", std::map<std::string, std::string>{});
}

void to_json(json& j, const StrategyReport& r) {
  j = json{{"action", r.action},
           {"method_scheme", r.method_scheme},
           {"explored", r.explored},
           {"novelty_warning", r.novelty_warning},
           {"novelty_penalty_applied", r.novelty_penalty_applied}};
}

void from_json(const json& j, StrategyReport& r) {
  r.action = j.at("action").get<ActionTuple>();
  r.method_scheme = j.at("method_scheme").get<MethodScheme>();
  r.explored = j.value("explored", false);
  r.novelty_warning = j.value("novelty_warning", false);
  r.novelty_penalty_applied = j.value("novelty_penalty_applied", false);
}

void to_json(json& j, const CellMap& c) {
  j = json{{"estimator", c.estimator}, {"library_class", c.library_class}, {"hyperparams", c.hyperparams},
           {"bindings", c.bindings},   {"model_id", c.model_id},           {"template_id", c.template_id}};
}

void from_json(const json& j, CellMap& c) {
  c.estimator = j.at("estimator").get<std::string>();
  c.library_class = j.value("library_class", std::string());
  c.hyperparams = j.value("hyperparams", std::map<std::string, double>{});
  c.bindings = j.value("bindings", std::vector<std::string>{});
  c.model_id = j.value("model_id", std::string());
  c.template_id = j.value("template_id", std::string());
}

void to_json(json& j, const FixInstructions& f) {
  j = json{{"hyperparams", f.hyperparams}};
  put_opt(j, "output_bindings", f.output_bindings);
}

void from_json(const json& j, FixInstructions& f) {
  f.hyperparams = j.value("hyperparams", std::map<std::string, double>{});
  get_opt(j, "output_bindings", f.output_bindings);
}

void to_json(json& j, const DriftSpec& d) {
  j = json{{"kind", to_string(d.kind)},
           {"target_field", d.target_field},
           {"replacement_value", d.replacement_value},
           {"probability", d.probability},
           {"site", d.site}};
  put_opt(j, "source_value", d.source_value);
  put_opt(j, "activation_iteration", d.activation_iteration);
}

void from_json(const json& j, DriftSpec& d) {
  DriftSpec def;
  d.kind = kDriftNames.parse(j.value("kind", std::string("none")));
  d.target_field = j.value("target_field", def.target_field);
  d.replacement_value = j.value("replacement_value", std::string());
  d.probability = j.value("probability", 0.0);
  d.site = j.value("site", def.site);
  get_opt(j, "source_value", d.source_value);
  get_opt(j, "activation_iteration", d.activation_iteration);
  if (!(d.probability >= 0.0 && d.probability <= 1.0)) throw ConfigError("drift probability outside [0, 1]");
  if (d.site != "study_agent" && d.site != "refactor_agent") throw ConfigError("unknown drift site: " + d.site);
}

DriftOutcome inject_drift(const AgentMessage& msg, const DriftSpec& spec, std::uint64_t seed, int iteration,
                          const ProblemScheme& ps, const ActionSpaceConfig& cfg) {
  DriftOutcome out{msg, false, "", ""};
  if (spec.kind == DriftKind::None) return out;
  if (msg.payload.value("kind", std::string()) != "strategy_report") return out;
  if (spec.activation_iteration && iteration < *spec.activation_iteration) return out;

  auto report = msg.payload.at("report").get<StrategyReport>();
  if (spec.source_value && report.action.estimator() != *spec.source_value) return out;
  Rng rng(mix_seed(seed, "drift", static_cast<std::uint64_t>(iteration)));
  if (!(rng.uniform() < spec.probability)) return out;

  bool swap = spec.kind == DriftKind::MethodSwap || spec.target_field == "method";
  if (swap) {
    std::string target = spec.replacement_value;
    if (target == "uniform") {
      const auto& pool = ps.context.task == Task::SA ? ps.feasible_sa_estimators : ps.feasible_uq_estimators;
      if (pool.empty()) return out;
      target = pool[rng.below(pool.size())];
    }
    if (report.action.task != Task::SA) return out;
    if (!is_known_estimator(target)) throw UnknownEstimator("drift replacement is not an estimator: " + target);
    out.from = report.action.estimator();
    out.to = target;
    if (out.from == out.to) return out;
    report.action.dims[1] = target;
    report.method_scheme = build_method_scheme(report.action, ps, {}, cfg);
  } else if (spec.target_field == "n_samples") {
    out.from = fmt(report.method_scheme.hyperparams["n_samples"]);
    out.to = spec.replacement_value;
    report.method_scheme.hyperparams["n_samples"] = std::stod(spec.replacement_value);
  } else if (spec.target_field == "output_bindings") {
    std::string before;
    for (auto& a : report.method_scheme.required_attributes) before += (before.empty() ? "" : ",") + a;
    out.from = before;
    out.to = spec.replacement_value;
    report.method_scheme.required_attributes = split_list(spec.replacement_value);
  } else {
    throw ConfigError("unknown drift target field: " + spec.target_field);
  }
  out.message.payload["report"] = report;
  out.fired = true;
  return out;
}

void to_json(json& j, const ScriptEntry& e) {
  j = json{{"role", to_string(e.role)}, {"output", e.output}, {"free_text", e.free_text}};
  json when = json::object();
  if (e.digest) when["digest"] = *e.digest;
  if (e.iteration) when["iteration"] = *e.iteration;
  if (e.attempt) when["attempt"] = *e.attempt;
  j["when"] = when;
}

void from_json(const json& j, ScriptEntry& e) {
  e.role = parse_role(j.at("role").get<std::string>());
  e.output = j.value("output", json::object());
  e.free_text = j.value("free_text", std::string());
  json when = j.value("when", json::object());
  get_opt(when, "digest", e.digest);
  get_opt(when, "iteration", e.iteration);
  get_opt(when, "attempt", e.attempt);
}

void to_json(json& j, const ScriptedAgentConfig& c) {
  std::vector<std::string> roles;
  for (auto r : c.no_default) roles.push_back(to_string(r));
  j = json{{"entries", c.entries}, {"no_default", roles}};
}

void from_json(const json& j, ScriptedAgentConfig& c) {
  c.entries = j.value("entries", std::vector<ScriptEntry>{});
  c.no_default.clear();
  for (auto& r : j.value("no_default", std::vector<std::string>{})) c.no_default.insert(parse_role(r));
}

AgentMessage run_agent(Role role, const AgentMessage& input, const ScriptedAgentConfig& script, std::uint64_t seed,
                       const AgentRule& default_rule, AgentCall call) {
  const std::string in_digest = digest(input.payload);
  const ScriptEntry* hit = nullptr;
  for (auto& e : script.entries) {
    if (e.role != role) continue;
    if (e.digest && *e.digest != in_digest) continue;
    if (e.iteration && *e.iteration != call.iteration) continue;
    if (e.attempt && *e.attempt != call.attempt) continue;
    hit = &e;
    break;
  }
  bool has_default = default_rule && !script.no_default.count(role);
  if (!hit && !has_default) throw ScriptMiss("no script entry for " + to_string(role) + " input " + in_digest);

  AgentMessage out;
  out.role = role;
  if (has_default) out = default_rule(input, mix_seed(seed, to_string(role)));
  if (hit) {
    out.payload.merge_patch(hit->output);
    if (!hit->free_text.empty()) out.free_text = hit->free_text;
  }
  out.role = role;
  if (!out.payload.contains("kind")) out.payload["kind"] = expected_kind(role);
  if (out.payload.at("kind") != expected_kind(role))
    throw ScriptMiss(to_string(role) + " emitted payload kind " + out.payload.at("kind").dump());
  return out;
}

ProblemScheme coordinator_parse(const ProblemDescription& desc, const ActionSpace& space) {
  return build_problem_scheme(desc, space);
}

InspectionVerdict gatekeeper_check(const ProblemScheme& ps) {
  InspectionVerdict v;
  const auto& pool = ps.context.task == Task::SA ? ps.feasible_sa_estimators : ps.feasible_uq_estimators;
  if (pool.empty()) v.reasons.push_back("no feasible method for the stated context");
  if (ps.context.n_budget <= 0) v.reasons.push_back("no evaluation budget");
  v.approved = v.reasons.empty();
  return v;
}

InspectionVerdict critic_review(const StrategyReport& r, const ProblemScheme& ps, const ActionSpace& space) {
  InspectionVerdict v;
  auto rep = space.validate_action(r.action, ps.context);
  for (auto& viol : rep.violated) v.reasons.push_back(viol.predicate + ": " + viol.reason);
  if (r.method_scheme.estimator != r.action.estimator())
    v.reasons.push_back("method scheme names " + r.method_scheme.estimator);
  v.approved = v.reasons.empty();
  return v;
}

CellMap study_agent_plan(const StrategyReport& r, const std::optional<std::string>& template_id,
                         const std::string& model_id) {
  CellMap c;
  c.estimator = r.action.estimator();
  c.library_class = estimator_info(c.estimator).library_class;
  c.hyperparams = r.method_scheme.hyperparams;
  c.bindings = r.method_scheme.required_attributes;
  c.model_id = model_id;
  c.template_id = template_id.value_or("");
  return c;
}

ExecutionPlan refactor_build(const StrategyReport& r, const CellMap& cell_map, std::uint64_t seed) {
  ExecutionPlan p;
  p.estimator = r.action.estimator();
  p.hyperparams = r.method_scheme.hyperparams;
  p.output_bindings = r.method_scheme.required_attributes;
  p.model_id = cell_map.model_id;
  p.seed = seed;
  if (r.action.task == Task::SA && r.action.dims.size() == 4)
    p.options = {{"sampling", r.action.dims[0]}, {"allocation", r.action.dims[2]}, {"output", r.action.dims[3]}};
  return p;
}

InspectionVerdict inspector_check(const ExecutionPlan& plan, const MethodScheme& ms) {
  InspectionVerdict v;
  if (plan.estimator != ms.estimator)
    v.reasons.push_back("estimator mismatch: plan runs " + plan.estimator + ", scheme requires " + ms.estimator);
  for (auto& req : ms.required_attributes)
    if (std::find(plan.output_bindings.begin(), plan.output_bindings.end(), req) == plan.output_bindings.end())
      v.reasons.push_back("missing required binding " + req);
  for (auto& b : plan.output_bindings)
    if (std::find(ms.forbidden_attributes.begin(), ms.forbidden_attributes.end(), b) != ms.forbidden_attributes.end())
      v.reasons.push_back("forbidden binding " + b);
  auto it = plan.hyperparams.find("n_samples");
  if (it == plan.hyperparams.end()) {
    v.reasons.push_back("n_samples not set");
  } else if (is_known_estimator(plan.estimator)) {
    long long cost = n_cost(plan.estimator, std::llround(it->second), ms.d_in);
    if (cost < ms.n_min_value)
      v.reasons.push_back("cost " + std::to_string(cost) + " below n_min " + std::to_string(ms.n_min_value));
  }
  v.approved = v.reasons.empty();
  return v;
}

FixInstructions debugger_fix(const ExecutionPlan& plan, const std::string& error_class, const MethodScheme& ms) {
  if (error_class.empty()) throw Unrecoverable("debugger called without an error");
  FixInstructions f;
  if (error_class == "InsufficientSamples") {
    long long per = std::max<long long>(1, n_cost(ms.estimator, 1, ms.d_in));
    long long needed = (ms.n_min_value + per - 1) / per;
    auto it = plan.hyperparams.find("n_samples");
    double current = it == plan.hyperparams.end() ? 0.0 : it->second;
    f.hyperparams["n_samples"] = std::max(current, double(needed));
    return f;
  }
  if (error_class == "UnknownAttribute") {
    f.output_bindings = ms.required_attributes;
    return f;
  }
  throw Unrecoverable("no patch rule for " + error_class);
}

void apply_fix(ExecutionPlan& plan, const FixInstructions& fix) {
  for (auto& [k, v] : fix.hyperparams) plan.hyperparams[k] = v;
  if (fix.output_bindings) plan.output_bindings = *fix.output_bindings;
}

std::string render_observation_text(const Observation& o) {
  std::ostringstream os;
  os << o.result.estimator;
  if (o.status && *o.status == ExecStatus::Failed) {
    os << " failed " << o.error_class << " " << o.error_message;
    return os.str();
  }
  os << " evaluations " << o.result.evaluations_used;
  for (auto& name : o.result.populated_attributes()) {
    os << " " << compact(name);
    for (double v : *o.result.attribute(name)) os << " " << fmt(v);
  }
  for (auto& w : o.result.warnings) os << " " << w.code;
  return os.str();
}

std::string advisor_diagnose(const Observation& obs, const std::string& requested_estimator, const MethodScheme& ms) {
  std::ostringstream os;
  if (obs.status && *obs.status == ExecStatus::Failed) {
    if (obs.error_class == "UnknownAttribute")
      os << "attribute binding failed: " << obs.error_message << ". ";
    else if (obs.error_class == "InsufficientSamples")
      os << "insufficient samples: " << obs.error_message << ". ";
    os << render_observation_text(obs);
    return os.str();
  }
  if (!requested_estimator.empty() && obs.result.estimator != requested_estimator)
    os << "mismatch: strategy requested " << requested_estimator << " but " << obs.result.estimator << " ran. ";
  for (auto& req : ms.required_attributes)
    if (!obs.result.attribute(req)) os << "missing " << compact(req) << ". ";
  if (obs.result.nan_count > 0) os << obs.result.nan_count << " nan entries. ";
  os << render_observation_text(obs);
  // Critical warnings are acknowledged by code so the reward counts them as addressed.
  for (auto& w : obs.result.warnings)
    if (w.critical) os << ". addressed " << w.code;
  return os.str();
}

std::string render_context_text(const ProblemScheme& ps) {
  const auto& x = ps.context;
  std::ostringstream os;
  os << (x.task == Task::SA ? "sensitivity analysis" : "uncertainty quantification") << " of " << ps.model_id << " with "
     << x.d_in << " inputs";
  std::map<std::string, int> fams;
  for (auto d : x.dist_family) fams[to_string(d)]++;
  for (auto& [f, n] : fams) os << " " << n << " " << f;
  os << " " << ps.output_class << " output budget " << x.n_budget << " evaluations precision " << x.epsilon;
  return os.str();
}

std::string render_compatibility_text(const ProblemScheme& ps, const ActionSpaceConfig& cfg) {
  std::ostringstream os;
  if (ps.context.task == Task::SA) {
    for (auto& e : ps.feasible_sa_estimators) os << e << signature_text(e) << " ";
    // Output treatments the context supports: aggregation needs a vector output.
    for (auto& v : cfg.sa_dims[3])
      if (v != "Aggregated" || ps.context.multi_output_flag) os << v << " ";
  } else {
    for (auto& e : ps.feasible_uq_estimators) os << e << " ";
    for (std::size_t k = 1; k < cfg.uq_dims.size(); ++k)
      for (auto& v : cfg.uq_dims[k]) os << v << " ";
  }
  return os.str();
}

std::string render_action_text(const ActionTuple& a) {
  std::ostringstream os;
  if (a.task == Task::SA && a.dims.size() == 4 && is_known_estimator(a.dims[1])) {
    os << a.dims[1] << signature_text(a.dims[1]) << " " << a.dims[0] << " " << a.dims[2] << " " << a.dims[3];
  } else {
    for (auto& d : a.dims) os << d << " ";
  }
  return os.str();
}

std::string render_proposal_text(const ActionTuple& a) {
  if (a.task == Task::SA && a.dims.size() == 4 && is_known_estimator(a.dims[1]))
    return a.dims[1] + signature_text(a.dims[1]) + " " + a.dims[3];
  return render_action_text(a);
}

std::string render_strategy_text(const StrategyReport& r, bool with_attributes) {
  std::ostringstream os;
  const auto& est = r.action.estimator();
  os << est;
  if (is_known_estimator(est)) os << signature_text(est) << " " << class_name(estimator_info(est).library_class);
  if (with_attributes)
    for (auto& a : r.method_scheme.required_attributes) os << " " << compact(a);
  return os.str();
}

std::string render_cell_map_text(const CellMap& c) {
  std::ostringstream os;
  os << "cells: load " << c.model_id << "; sample; run " << class_name(c.library_class);
  if (is_known_estimator(c.estimator)) os << " (" << c.estimator << signature_text(c.estimator) << ")";
  os << "; read";
  for (auto& b : c.bindings) os << " " << compact(b);
  return os.str();
}

std::string render_plan_text(const ExecutionPlan& p) {
  std::ostringstream os;
  std::string cls = is_known_estimator(p.estimator) ? class_name(estimator_info(p.estimator).library_class) : p.estimator;
  if (is_known_estimator(p.estimator)) os << "# " << p.estimator << signature_text(p.estimator) << "\n";
  os << "from sensitivity import " << cls << "\n";
  os << "runner = " << cls << "(" << p.model_id;
  for (auto& [k, v] : p.hyperparams) os << ", " << k << "=" << v;
  os << ")\n";
  for (auto& b : p.output_bindings) os << "save(runner." << b << ")\n";
  return os.str();
}

const std::map<std::string, std::string>& template_library() {
  static const std::map<std::string, std::string> lib = [] {
    std::map<std::string, std::string> m;
    for (auto& e : estimator_catalog()) {
      if (e.id == "Generalized_Sobol") continue;
      m[e.id] = "template " + class_name(e.library_class) + " " + e.id + signature_text(e.id);
    }
    return m;
  }();
  return lib;
}

TemplateHit retrieve_template(const std::string& estimator) {
  const auto& lib = template_library();
  auto it = lib.find(estimator);
  if (it == lib.end()) return {};
  return {it->first, it->second};
}

}  // namespace driftguard
