#include "driftguard/schemes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace driftguard {

namespace {

constexpr EnumNames<BudgetStatus, 3> kBudgetNames{{{{BudgetStatus::Sufficient, "sufficient"},
                                                    {BudgetStatus::Tight, "tight"},
                                                    {BudgetStatus::Infeasible, "infeasible"}}}};
constexpr EnumNames<ConvergenceStatus, 3> kConvNames{{{{ConvergenceStatus::Converged, "converged"},
                                                       {ConvergenceStatus::Partial, "partial"},
                                                       {ConvergenceStatus::Failed, "failed"}}}};
constexpr EnumNames<RewardComponent, 4> kComponentNames{{{{RewardComponent::Integrity, "integrity"},
                                                          {RewardComponent::Accuracy, "accuracy"},
                                                          {RewardComponent::Details, "details"},
                                                          {RewardComponent::Optimality, "optimality"}}}};
constexpr EnumNames<RootCause, 5> kRootNames{{{{RootCause::InsufficientN, "insufficient_N"},
                                               {RootCause::WrongEstimator, "wrong_estimator"},
                                               {RootCause::AttributeError, "attribute_error"},
                                               {RootCause::NumericalDegeneracy, "numerical_degeneracy"},
                                               {RootCause::None, "none"}}}};

std::vector<std::string> tokens_of(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool has_prefix(const std::vector<std::string>& toks, std::string_view p) {
  return std::any_of(toks.begin(), toks.end(), [&](const std::string& t) { return t.rfind(p, 0) == 0; });
}

bool has_token(const std::vector<std::string>& toks, std::string_view p) {
  return std::find(toks.begin(), toks.end(), p) != toks.end();
}

std::string format_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(BudgetStatus s) { return kBudgetNames.name(s); }
std::string to_string(ConvergenceStatus s) { return kConvNames.name(s); }
std::string to_string(RewardComponent c) { return kComponentNames.name(c); }
std::string to_string(RootCause c) { return kRootNames.name(c); }

ProblemScheme build_problem_scheme(const ProblemDescription& desc, const ActionSpace& space) {
  if (desc.d_in <= 0) throw InvalidProblem("d_in must be positive");
  if (desc.d_out <= 0) throw InvalidProblem("d_out must be positive");
  if (desc.n_budget < 0) throw InvalidProblem("negative budget");
  if (!(desc.epsilon > 0)) throw InvalidProblem("epsilon must be positive");
  Task task;
  try {
    task = parse_task(desc.task);
  } catch (const ParseError&) {
    throw InvalidProblem("unknown task: " + desc.task);
  }
  if (static_cast<int>(desc.distributions.size()) != desc.d_in)
    throw InvalidProblem("expected one distribution per input");
  std::vector<DistFamily> fams;
  for (auto& d : desc.distributions) {
    if (d == "Uniform")
      fams.push_back(DistFamily::Uniform);
    else if (d == "Normal")
      fams.push_back(DistFamily::Normal);
    else
      fams.push_back(DistFamily::Other);
  }

  const auto& cfg = space.config();
  ProblemScheme ps;
  ps.model_id = desc.model_id;
  ps.context = space.make_context(desc.d_in, desc.d_out, desc.n_budget, desc.epsilon, task, fams);
  ps.output_class = !desc.output_class.empty() ? desc.output_class : (desc.d_out > 1 ? "vector" : "scalar");
  if (ps.output_class != "scalar" && ps.output_class != "vector" && ps.output_class != "field")
    throw InvalidProblem("unknown output class: " + ps.output_class);
  ps.model_class = desc.model_class;
  if (ps.model_class != "additive" && ps.model_class != "multiplicative" && ps.model_class != "mixed" &&
      ps.model_class != "unknown")
    throw InvalidProblem("unknown model class: " + ps.model_class);
  ps.has_dependence = desc.has_dependence;
  ps.limit_state_defined = desc.limit_state_defined;
  ps.low_fidelity_model = desc.low_fidelity_model;
  ps.target_pdf_known = desc.target_pdf_known;
  ps.screening_dim_threshold = cfg.screening_dim_threshold;
  ps.high_d_in_flag = desc.d_in >= cfg.screening_dim_threshold;
  ps.field_out_flag = ps.output_class == "field";

  // Both estimator sets are precomputed regardless of the requested task.
  ContextVector sa = task == Task::SA ? ps.context
                                      : space.make_context(desc.d_in, desc.d_out, desc.n_budget, desc.epsilon,
                                                           Task::SA, fams);
  ContextVector uq = task == Task::UQ ? ps.context
                                      : space.make_context(desc.d_in, desc.d_out, desc.n_budget, desc.epsilon,
                                                           Task::UQ, fams);
  for (std::size_t i = 0; i < cfg.sa_dims[1].size(); ++i)
    if (sa.feasibility_bits[i]) ps.feasible_sa_estimators.push_back(cfg.sa_dims[1][i]);
  for (std::size_t i = 0; i < cfg.uq_dims[0].size(); ++i)
    if (uq.feasibility_bits[i]) ps.feasible_uq_estimators.push_back(cfg.uq_dims[0][i]);

  for (auto& est : cfg.sa_dims[1]) {
    ActionTuple probe{Task::SA, {cfg.sa_dims[0][0], est, cfg.sa_dims[2][0], cfg.sa_dims[3][0]}};
    auto rep = space.validate_action(probe, sa);
    EstimatorFlag f;
    f.estimator = est;
    f.feasible = rep.verdict;
    std::string constraint;
    for (auto& v : rep.violated) {
      f.predicates.push_back(v.predicate);
      for (auto& [k, val] : v.values) {
        if (!constraint.empty()) constraint += ", ";
        constraint += k + "=" + format_num(val);
      }
    }
    if (rep.verdict) {
      long long n_min = eval_n_min(est == "PCE_SA" ? cfg.pce_rule : estimator_info(est).n_min_formula, desc.d_in,
                                   desc.d_out);
      constraint = "n_min=" + std::to_string(n_min) + ", n_budget=" + std::to_string(desc.n_budget);
    }
    f.constraint = constraint;
    ps.estimator_flags.push_back(std::move(f));
  }
  return ps;
}

MethodScheme build_method_scheme(const ActionTuple& action, const ProblemScheme& ps,
                                 const std::map<std::string, double>& hyperparams, const ActionSpaceConfig& cfg) {
  if (action.task != Task::SA) throw UnknownEstimator("no SA estimator for a UQ action: " + action.label());
  const auto& info = estimator_info(action.estimator());
  const auto& x = ps.context;
  MethodScheme ms;
  ms.action = action;
  ms.estimator = info.id;
  ms.index_type = info.index_type;
  ms.produces = info.produces;
  ms.sampling_scheme = info.sampling_scheme;
  ms.n_min_formula = info.id == "PCE_SA" ? cfg.pce_rule : info.n_min_formula;
  ms.d_in = x.d_in;
  ms.n_min_value = eval_n_min(ms.n_min_formula, x.d_in, x.d_out);
  ms.library_class = info.library_class;
  ms.required_attributes = info.required;
  ms.forbidden_attributes = forbidden_attributes(info.id);
  ms.valid_when = info.valid_when;
  ms.invalid_when = info.invalid_when;
  ms.hyperparams = hyperparams;
  if (!ms.hyperparams.count("n_samples")) {
    long long target = std::min<long long>(x.n_budget, 2 * ms.n_min_value);
    ms.hyperparams["n_samples"] = double(std::max<long long>(1, target / evaluations_per_sample(info.id, x.d_in)));
  }
  if (info.id == "Morris" && !ms.hyperparams.count("levels")) ms.hyperparams["levels"] = 4.0;
  auto n_samples = static_cast<long long>(std::llround(ms.hyperparams.at("n_samples")));
  ms.n_cost_actual = n_cost(info.id, n_samples, x.d_in);
  if (ms.n_min_value > x.n_budget || ms.n_cost_actual < ms.n_min_value)
    ms.budget_status = BudgetStatus::Infeasible;
  else if (2 * ms.n_min_value > x.n_budget)
    ms.budget_status = BudgetStatus::Tight;
  else
    ms.budget_status = BudgetStatus::Sufficient;
  return ms;
}

DiagnosticScheme build_diagnostic_scheme(const std::string& report, const Observation& obs,
                                         const RewardBreakdown& b, double r_threshold) {
  DiagnosticScheme d;
  d.reward = b.total;
  d.subject_estimator = obs.result.estimator;
  d.physical_insight = report;

  const double parts[4] = {b.integrity / 35.0, b.accuracy / 35.0, b.details / 15.0, b.optimality / 15.0};
  int arg = 0;
  for (int k = 1; k < 4; ++k)
    if (parts[k] < parts[arg]) arg = k;
  d.bottleneck_dim = static_cast<RewardComponent>(arg);

  if (obs.status && *obs.status == ExecStatus::Failed)
    d.convergence_status = ConvergenceStatus::Failed;
  else if (b.total >= r_threshold)
    d.convergence_status = ConvergenceStatus::Converged;
  else
    d.convergence_status = ConvergenceStatus::Partial;

  auto toks = tokens_of(report);
  if (has_prefix(toks, "attribute")) {
    d.root_cause = RootCause::AttributeError;
    d.block_action = true;
    d.penalize_action = true;
  } else if (has_prefix(toks, "mismatch") || has_token(toks, "wrong")) {
    d.root_cause = RootCause::WrongEstimator;
    d.block_action = true;
    d.penalize_action = true;
  } else if (has_prefix(toks, "insufficient")) {
    d.root_cause = RootCause::InsufficientN;
    d.prescribed_N_factor = 2.0;
    if (!obs.result.estimator.empty()) d.prescribed_estimator = obs.result.estimator;
    if (auto it = obs.hyperparams.find("n_samples"); it != obs.hyperparams.end())
      d.prescribed_hyperparam = std::map<std::string, double>{{"n_samples", it->second * 2.0}};
  } else if (has_token(toks, "nan") || has_prefix(toks, "degenera")) {
    d.root_cause = RootCause::NumericalDegeneracy;
    d.penalize_action = true;
  }
  return d;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

void to_json(json& j, const ProblemDescription& d) {
  j = json{{"model_id", d.model_id},
           {"message", d.message},
           {"d_in", d.d_in},
           {"d_out", d.d_out},
           {"n_budget", d.n_budget},
           {"epsilon", d.epsilon},
           {"task", d.task},
           {"distributions", d.distributions},
           {"output_class", d.output_class},
           {"model_class", d.model_class},
           {"has_dependence", d.has_dependence},
           {"limit_state_defined", d.limit_state_defined},
           {"low_fidelity_model", d.low_fidelity_model},
           {"target_pdf_known", d.target_pdf_known}};
}

void from_json(const json& j, ProblemDescription& d) {
  ProblemDescription def;
  d.model_id = j.value("model_id", def.model_id);
  d.message = j.value("message", def.message);
  d.d_in = j.at("d_in").get<int>();
  d.d_out = j.at("d_out").get<int>();
  d.n_budget = j.at("n_budget").get<long long>();
  d.epsilon = j.value("epsilon", def.epsilon);
  d.task = j.at("task").get<std::string>();
  d.distributions = j.at("distributions").get<std::vector<std::string>>();
  d.output_class = j.value("output_class", def.output_class);
  d.model_class = j.value("model_class", def.model_class);
  d.has_dependence = j.value("has_dependence", def.has_dependence);
  d.limit_state_defined = j.value("limit_state_defined", def.limit_state_defined);
  d.low_fidelity_model = j.value("low_fidelity_model", def.low_fidelity_model);
  d.target_pdf_known = j.value("target_pdf_known", def.target_pdf_known);
}

void to_json(json& j, const EstimatorFlag& f) {
  j = json{{"estimator", f.estimator}, {"feasible", f.feasible}, {"predicates", f.predicates},
           {"constraint", f.constraint}};
}

void from_json(const json& j, EstimatorFlag& f) {
  f.estimator = j.at("estimator").get<std::string>();
  f.feasible = j.at("feasible").get<bool>();
  f.predicates = j.at("predicates").get<std::vector<std::string>>();
  f.constraint = j.at("constraint").get<std::string>();
}

void to_json(json& j, const ProblemScheme& s) {
  j = json{{"model_id", s.model_id},
           {"context", s.context},
           {"output_class", s.output_class},
           {"model_class", s.model_class},
           {"has_dependence", s.has_dependence},
           {"limit_state_defined", s.limit_state_defined},
           {"low_fidelity_model", s.low_fidelity_model},
           {"target_pdf_known", s.target_pdf_known},
           {"high_d_in_flag", s.high_d_in_flag},
           {"field_out_flag", s.field_out_flag},
           {"screening_dim_threshold", s.screening_dim_threshold},
           {"feasible_sa_estimators", s.feasible_sa_estimators},
           {"feasible_uq_estimators", s.feasible_uq_estimators},
           {"estimator_flags", s.estimator_flags}};
}

void from_json(const json& j, ProblemScheme& s) {
  s.model_id = j.at("model_id").get<std::string>();
  s.context = j.at("context").get<ContextVector>();
  s.output_class = j.at("output_class").get<std::string>();
  s.model_class = j.at("model_class").get<std::string>();
  s.has_dependence = j.at("has_dependence").get<bool>();
  s.limit_state_defined = j.at("limit_state_defined").get<bool>();
  s.low_fidelity_model = j.at("low_fidelity_model").get<bool>();
  s.target_pdf_known = j.at("target_pdf_known").get<bool>();
  s.high_d_in_flag = j.at("high_d_in_flag").get<bool>();
  s.field_out_flag = j.at("field_out_flag").get<bool>();
  s.screening_dim_threshold = j.at("screening_dim_threshold").get<int>();
  s.feasible_sa_estimators = j.at("feasible_sa_estimators").get<std::vector<std::string>>();
  s.feasible_uq_estimators = j.at("feasible_uq_estimators").get<std::vector<std::string>>();
  s.estimator_flags = j.at("estimator_flags").get<std::vector<EstimatorFlag>>();
}

void to_json(json& j, const MethodScheme& s) {
  j = json{{"action", s.action},
           {"estimator", s.estimator},
           {"index_type", s.index_type},
           {"produces", s.produces},
           {"sampling_scheme", s.sampling_scheme},
           {"n_min_formula", s.n_min_formula},
           {"d_in", s.d_in},
           {"n_min_value", s.n_min_value},
           {"n_cost_actual", s.n_cost_actual},
           {"budget_status", to_string(s.budget_status)},
           {"library_class", s.library_class},
           {"required_attributes", s.required_attributes},
           {"forbidden_attributes", s.forbidden_attributes},
           {"hyperparams", s.hyperparams},
           {"valid_when", s.valid_when},
           {"invalid_when", s.invalid_when}};
}

void from_json(const json& j, MethodScheme& s) {
  s.action = j.at("action").get<ActionTuple>();
  s.estimator = j.at("estimator").get<std::string>();
  s.index_type = j.at("index_type").get<std::string>();
  s.produces = j.at("produces").get<std::vector<std::string>>();
  s.sampling_scheme = j.at("sampling_scheme").get<std::string>();
  s.n_min_formula = j.at("n_min_formula").get<std::string>();
  s.d_in = j.at("d_in").get<int>();
  s.n_min_value = j.at("n_min_value").get<long long>();
  s.n_cost_actual = j.at("n_cost_actual").get<long long>();
  s.budget_status = kBudgetNames.parse(j.at("budget_status").get<std::string>());
  s.library_class = j.at("library_class").get<std::string>();
  s.required_attributes = j.at("required_attributes").get<std::vector<std::string>>();
  s.forbidden_attributes = j.at("forbidden_attributes").get<std::vector<std::string>>();
  s.hyperparams = j.at("hyperparams").get<std::map<std::string, double>>();
  s.valid_when = j.at("valid_when").get<std::vector<std::string>>();
  s.invalid_when = j.at("invalid_when").get<std::vector<std::string>>();
}

void to_json(json& j, const DiagnosticScheme& s) {
  j = json::object();
  j["convergence_status"] = to_string(s.convergence_status);
  j["bottleneck_dim"] = to_string(s.bottleneck_dim);
  j["reward"] = s.reward;
  j["root_cause"] = to_string(s.root_cause);
  j["subject_estimator"] = s.subject_estimator;
  put_opt(j, "prescribed_estimator", s.prescribed_estimator);
  put_opt(j, "prescribed_N_factor", s.prescribed_N_factor);
  put_opt(j, "prescribed_hyperparam", s.prescribed_hyperparam);
  j["penalize_action"] = s.penalize_action;
  j["block_action"] = s.block_action;
  j["physical_insight"] = s.physical_insight;
}

void from_json(const json& j, DiagnosticScheme& s) {
  s.convergence_status = kConvNames.parse(j.at("convergence_status").get<std::string>());
  s.bottleneck_dim = kComponentNames.parse(j.at("bottleneck_dim").get<std::string>());
  s.reward = j.at("reward").get<double>();
  s.root_cause = kRootNames.parse(j.at("root_cause").get<std::string>());
  s.subject_estimator = j.at("subject_estimator").get<std::string>();
  get_opt(j, "prescribed_estimator", s.prescribed_estimator);
  get_opt(j, "prescribed_N_factor", s.prescribed_N_factor);
  get_opt(j, "prescribed_hyperparam", s.prescribed_hyperparam);
  if (s.prescribed_N_factor && !(*s.prescribed_N_factor > 0)) throw ParseError("prescribed_N_factor must be > 0");
  s.penalize_action = j.at("penalize_action").get<bool>();
  s.block_action = j.at("block_action").get<bool>();
  s.physical_insight = j.at("physical_insight").get<std::string>();
}

}  // namespace driftguard
