#include "driftguard/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace driftguard {

namespace fs = std::filesystem;

void to_json(json& j, const AblationCondition& c) {
  j = json{{"name", c.name}, {"disabled", c.disabled}, {"drifts", c.drifts}};
}

void from_json(const json& j, AblationCondition& c) {
  c.name = j.at("name").get<std::string>();
  c.disabled = j.value("disabled", std::vector<std::string>{});
  c.drifts = j.value("drifts", std::vector<DriftSpec>{});
  for (auto& d : c.disabled)
    if (d != "all") parse_cp_id(d);
}

std::string default_config_dir() { return DRIFTGUARD_CONFIG_DIR; }

ExperimentConfig parse_experiment(const json& j) {
  ExperimentConfig c;
  try {
    c.id = j.value("experiment", c.id);
    c.problem = j.at("problem").get<ProblemDescription>();
    if (j.contains("session")) c.session = j.at("session").get<SessionConfig>();
    c.seeds = j.value("seeds", c.seeds);
    c.conditions = j.value("conditions", c.conditions);
    c.session_count = j.value("session_count", c.session_count);
    c.archive_path = j.value("archive_path", c.archive_path);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("sessions"))
      for (auto& s : j.at("sessions")) {
        SessionStep step;
        step.label = s.value("label", std::string());
        step.problem = s.contains("problem") ? s.at("problem").get<ProblemDescription>() : c.problem;
        c.sessions.push_back(step);
      }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  } catch (const InvalidProblem& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  if (c.seeds.empty()) throw ConfigError("experiment needs at least one seed");
  if (c.session_count < 1) throw ConfigError("session_count must be positive");
  benchmark_model(c.problem.model_id);
  for (auto& s : c.sessions) benchmark_model(s.problem.model_id);
  return c;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_experiment(j);
}

namespace {

struct Prepared {
  ExperimentConfig cfg;
  fs::path out;
};

// Resolves the output directory and seed override, or reports an exit code.
std::optional<Prepared> prepare(const CommandOptions& opt, int& code) {
  Prepared p;
  try {
    p.cfg = load_experiment(opt.config_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kExitBadConfig;
    return std::nullopt;
  }
  if (opt.seed_override) p.cfg.seeds = {*opt.seed_override};
  std::string out = p.cfg.output_dir;
  if (opt.out_dir) out = *opt.out_dir;
  if (const char* env = std::getenv("DRIFTGUARD_OUT"); env && *env) out = env;
  p.out = out;
  std::error_code ec;
  fs::create_directories(p.out, ec);
  if (ec || !fs::is_directory(p.out)) {
    std::cerr << "error: output directory " << out << " is not writable\n";
    code = kExitBadConfig;
    return std::nullopt;
  }
  return p;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw PersistError("cannot write " + path.string());
  f << text;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

json cp_event_counts(const SessionTrace& t) {
  std::map<std::string, std::map<std::string, int>> counts;
  for (auto& e : t.group_a_events) counts[to_string(e.cp_id)][to_string(e.verdict)] += 1;
  for (auto& r : t.records)
    for (auto& e : r.checkpoint_events) counts[to_string(e.cp_id)][to_string(e.verdict)] += 1;
  return counts;
}

void write_empowerment(const fs::path& path, const std::vector<SessionTrace>& traces, const json& extra) {
  json m = extra;
  try {
    m["empowerment"] = estimate_empowerment(traces);
  } catch (const NoData&) {
    m["empowerment"] = nullptr;
  }
  write_file(path, m.dump(2) + "\n");
}

}  // namespace

int cmd_run(const CommandOptions& opt) {
  int code = kExitOk;
  auto p = prepare(opt, code);
  if (!p) return code;
  std::vector<SessionTrace> traces;
  json summaries = json::array();
  for (auto seed : p->cfg.seeds) {
    SessionConfig sc = p->cfg.session;
    sc.seed = seed;
    Archive archive;
    auto trace = run_session(sc, p->cfg.problem, archive);
    write_file(p->out / (p->cfg.id + "_seed" + std::to_string(seed) + ".jsonl"), trace.to_jsonl());
    json s{{"seed", seed},
           {"outcome", to_string(trace.outcome)},
           {"abort_reason", trace.abort_reason},
           {"best_reward", trace.best_reward},
           {"iterations", trace.records.size()},
           {"iterations_to_best", trace.iterations_to_best},
           {"checkpoint_events", cp_event_counts(trace)}};
    put_opt(s, "iterations_to_converge", trace.iterations_to_converge);
    summaries.push_back(s);
    if (!opt.quiet)
      std::cout << p->cfg.id << " seed " << seed << ": " << to_string(trace.outcome) << ", best reward "
                << fmt(trace.best_reward) << " at iteration " << trace.iterations_to_best << " of "
                << trace.records.size() << (trace.abort_reason.empty() ? "" : " (" + trace.abort_reason + ")") << "\n";
    if (trace.outcome == SessionOutcomeKind::Aborted) code = kExitAborted;
    traces.push_back(std::move(trace));
  }
  write_file(p->out / (p->cfg.id + "_summary.json"), json{{"experiment", p->cfg.id}, {"runs", summaries}}.dump(2) + "\n");
  write_empowerment(p->out / (p->cfg.id + "_metrics.json"), traces, json{{"experiment", p->cfg.id}});
  return code;
}

int cmd_ablate(const CommandOptions& opt) {
  int code = kExitOk;
  auto p = prepare(opt, code);
  if (!p) return code;
  std::vector<std::pair<std::string, SessionTrace>> traces;
  auto rows = run_ablation_suite(p->cfg.session, p->cfg.problem, p->cfg.conditions, p->cfg.seeds, &traces);
  auto csv = ablation_csv(rows);
  write_file(p->out / (p->cfg.id + "_ablation.csv"), csv);
  json metrics{{"experiment", p->cfg.id}, {"conditions", json::object()}};
  for (auto& cond : p->cfg.conditions) {
    std::vector<SessionTrace> group;
    for (auto& [name, t] : traces)
      if (name == cond.name) group.push_back(t);
    try {
      metrics["conditions"][cond.name] = estimate_empowerment(group);
    } catch (const NoData&) {
      metrics["conditions"][cond.name] = nullptr;
    }
  }
  write_file(p->out / (p->cfg.id + "_metrics.json"), metrics.dump(2) + "\n");
  if (!opt.quiet) std::cout << csv;
  for (auto& r : rows)
    if (r.outcome == to_string(SessionOutcomeKind::Aborted)) code = kExitAborted;
  return code;
}

std::vector<SessionRow> run_session_sequence(const ExperimentConfig& cfg, std::uint64_t seed, Archive& archive,
                                             std::vector<SessionTrace>* traces) {
  std::vector<SessionStep> steps = cfg.sessions;
  if (steps.empty())
    for (int k = 0; k < cfg.session_count; ++k) steps.push_back({"session " + std::to_string(k + 1), cfg.problem});
  std::vector<SessionRow> rows;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    SessionConfig sc = cfg.session;
    sc.seed = mix_seed(seed, "session", k);
    sc.session_id = cfg.id + "-" + std::to_string(seed) + "-" + std::to_string(k + 1);
    auto trace = run_session(sc, steps[k].problem, archive);
    SessionRow row;
    row.seed = seed;
    row.index = static_cast<int>(k) + 1;
    row.label = steps[k].label;
    row.best_reward = trace.best_reward;
    row.iterations_to_best = trace.iterations_to_best;
    row.iterations_to_converge = trace.iterations_to_converge;
    row.cp0_similarity = trace.cp0_similarity;
    row.cp0_match = to_string(trace.cp0_match);
    row.exploration_mode = to_string(trace.exploration_mode);
    row.screening_first = trace.screening_first;
    row.outcome = to_string(trace.outcome);
    if (!trace.records.empty()) row.first_estimator = trace.records.front().action.estimator();
    if (trace.iterations_to_best > 0)
      row.best_estimator = trace.records[static_cast<std::size_t>(trace.iterations_to_best - 1)].action.estimator();
    rows.push_back(row);
    if (traces) traces->push_back(std::move(trace));
  }
  return rows;
}

std::string sessions_csv(const std::vector<SessionRow>& rows) {
  std::ostringstream os;
  os << "seed,session,label,first_estimator,best_estimator,best_reward,iterations_to_best,iterations_to_converge,"
        "cp0_similarity,cp0_match,exploration_mode,screening_first,outcome\n";
  for (auto& r : rows)
    os << r.seed << "," << r.index << "," << r.label << "," << r.first_estimator << "," << r.best_estimator << ","
       << fmt(r.best_reward) << "," << r.iterations_to_best << ","
       << (r.iterations_to_converge ? std::to_string(*r.iterations_to_converge) : "") << "," << fmt(r.cp0_similarity)
       << "," << r.cp0_match << "," << r.exploration_mode << "," << (r.screening_first ? "true" : "false") << ","
       << r.outcome << "\n";
  return os.str();
}

std::string cp0_report(const std::vector<SessionRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(6) << "seed" << std::setw(4) << "#" << std::setw(24) << "problem" << std::setw(12)
     << "similarity" << std::setw(8) << "match" << std::setw(13) << "mode" << std::setw(11) << "screening"
     << "first method\n";
  for (auto& r : rows)
    os << std::left << std::setw(6) << r.seed << std::setw(4) << r.index << std::setw(24) << r.label << std::setw(12)
       << fmt(r.cp0_similarity) << std::setw(8) << r.cp0_match << std::setw(13) << r.exploration_mode << std::setw(11)
       << (r.screening_first ? "yes" : "no") << r.first_estimator << "\n";
  return os.str();
}

int cmd_sessions(const CommandOptions& opt) {
  int code = kExitOk;
  auto p = prepare(opt, code);
  if (!p) return code;
  std::vector<SessionRow> rows;
  std::vector<SessionTrace> traces;
  Archive last;
  for (auto seed : p->cfg.seeds) {
    Archive archive;
    auto r = run_session_sequence(p->cfg, seed, archive, &traces);
    rows.insert(rows.end(), r.begin(), r.end());
    last = archive;
  }
  for (auto& r : rows)
    if (r.outcome == to_string(SessionOutcomeKind::Aborted)) code = kExitAborted;
  write_file(p->out / (p->cfg.id + "_sessions.csv"), sessions_csv(rows));
  auto report = cp0_report(rows);
  write_file(p->out / (p->cfg.id + "_cp0.txt"), report);
  write_empowerment(p->out / (p->cfg.id + "_metrics.json"), traces, json{{"experiment", p->cfg.id}});
  if (!p->cfg.archive_path.empty()) {
    try {
      persist(last, p->cfg.archive_path);
    } catch (const PersistError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitBadConfig;
    }
  }
  if (!opt.quiet) std::cout << sessions_csv(rows) << "\n" << report;
  return code;
}

}  // namespace driftguard
