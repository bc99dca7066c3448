#include "driftguard/archive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "driftguard/embedding.hpp"

namespace driftguard {

namespace {

constexpr EnumNames<MatchClass, 3> kMatchNames{
    {{{MatchClass::Close, "close"}, {MatchClass::Weak, "weak"}, {MatchClass::None, "none"}}}};
constexpr EnumNames<ExplorationMode, 3> kModeNames{{{{ExplorationMode::Exploit, "exploit"},
                                                     {ExplorationMode::Neutral, "neutral"},
                                                     {ExplorationMode::ExploreMax, "explore_max"}}}};
constexpr int kSchemaVersion = 1;

}  // namespace

std::string to_string(MatchClass m) { return kMatchNames.name(m); }
std::string to_string(ExplorationMode m) { return kModeNames.name(m); }
MatchClass parse_match_class(std::string_view s) { return kMatchNames.parse(s); }
ExplorationMode parse_exploration_mode(std::string_view s) { return kModeNames.parse(s); }

std::vector<double> problem_features(const ProblemScheme& ps) {
  const auto& x = ps.context;
  std::vector<double> f;
  f.push_back(std::min(1.0, x.d_in / 50.0));
  f.push_back(x.n_budget > 0 ? std::min(1.0, std::log10(double(x.n_budget)) / 6.0) : 0.0);
  f.push_back(x.task == Task::SA ? 1.0 : 0.0);
  f.push_back(x.task == Task::UQ ? 1.0 : 0.0);
  double hist[3] = {0, 0, 0};
  for (auto d : x.dist_family) hist[static_cast<int>(d)] += 1.0;
  for (double h : hist) f.push_back(x.dist_family.empty() ? 0.0 : h / double(x.dist_family.size()));
  f.push_back(x.multi_output_flag ? 1.0 : 0.0);
  f.push_back(ps.high_d_in_flag ? 1.0 : 0.0);
  return f;
}

double similarity(const ProblemScheme& current, const ArchiveEntry& e, const SimilarityWeights& w) {
  auto f = problem_features(current);
  double cos = f.size() == e.problem_features.size() ? cosine(f, e.problem_features) : 0.0;
  double task = current.context.task == e.task ? 1.0 : 0.0;
  double dim = std::exp(-std::abs(current.context.d_in - e.d_in) / w.dim_width);
  return std::clamp(w.feature * cos + w.task * task + w.dim * dim, 0.0, 1.0);
}

LookupResult lookup(const ProblemScheme& current, const Archive& a, const SimilarityWeights& w) {
  LookupResult r;
  for (auto& e : a.entries) {
    double s = similarity(current, e, w);
    // Entries are timestamp-ordered, so >= keeps the newest on ties.
    if (!r.entry || s >= r.similarity) {
      r.entry = e;
      r.similarity = s;
    }
  }
  return r;
}

Archive record_session(const Archive& a, const SessionOutcome& o) {
  ArchiveEntry e;
  e.problem_features = problem_features(o.problem);
  e.model_id = o.problem.model_id;
  e.task = o.problem.context.task;
  e.d_in = o.problem.context.d_in;
  e.session_id = o.session_id;
  e.timestamp = a.entries.empty() ? 1 : a.entries.back().timestamp + 1;
  e.policy_snapshot = o.policy_snapshot;
  std::map<std::string, double> best_per_arm;
  bool any = false;
  for (auto& s : o.steps) {
    auto& arm = e.per_arm_stats[s.action.estimator()];
    arm.count += 1;
    arm.mean_reward += (s.reward - arm.mean_reward) / double(arm.count);
    auto it = best_per_arm.find(s.action.estimator());
    if (it == best_per_arm.end() || s.reward > it->second) {
      best_per_arm[s.action.estimator()] = s.reward;
      arm.action = s.action;
      arm.feature_digest = s.feature_digest;
    }
    if (!any || s.reward > e.best_reward) {
      e.best_reward = s.reward;
      e.best_action = s.action;
      any = true;
    }
  }
  Archive out = a;
  out.entries.push_back(std::move(e));
  if (!out.path.empty()) persist(out, out.path);
  return out;
}

void persist(const Archive& a, const std::string& path) {
  json arr = json::array();
  for (auto& e : a.entries) arr.push_back(e);
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistError("cannot open " + tmp);
    out << arr.dump(1) << "\n";
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw PersistError("write failed: " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw PersistError("rename failed: " + path + ": " + ec.message());
  }
}

Archive load_archive(const std::string& path) {
  Archive a;
  a.path = path;
  if (!std::filesystem::exists(path)) return a;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot read archive: " + path);
  try {
    json arr = json::parse(in);
    if (!arr.is_array()) throw LoadError("archive is not a JSON array: " + path);
    for (auto& j : arr) a.entries.push_back(j.get<ArchiveEntry>());
  } catch (const json::exception& e) {
    throw LoadError("corrupt archive " + path + ": " + e.what());
  } catch (const ParseError& e) {
    throw LoadError("corrupt archive " + path + ": " + e.what());
  }
  return a;
}

void to_json(json& j, const ArmStats& s) {
  j = json{{"count", s.count}, {"mean_reward", s.mean_reward}, {"action", s.action},
           {"feature_digest", s.feature_digest}};
}

void from_json(const json& j, ArmStats& s) {
  s.count = j.at("count").get<long long>();
  s.mean_reward = j.at("mean_reward").get<double>();
  s.action = j.at("action").get<ActionTuple>();
  s.feature_digest = j.at("feature_digest").get<std::string>();
}

void to_json(json& j, const ArchiveEntry& e) {
  j = json::object();
  j["schema_version"] = kSchemaVersion;
  j["problem_features"] = e.problem_features;
  j["model_id"] = e.model_id;
  j["task"] = to_string(e.task);
  j["d_in"] = e.d_in;
  j["best_action"] = e.best_action;
  j["best_reward"] = e.best_reward;
  j["per_arm_stats"] = e.per_arm_stats;
  j["session_id"] = e.session_id;
  j["timestamp"] = e.timestamp;
  j["policy_snapshot"] = e.policy_snapshot ? *e.policy_snapshot : json(nullptr);
}

void from_json(const json& j, ArchiveEntry& e) {
  if (j.at("schema_version").get<int>() != kSchemaVersion) throw ParseError("unsupported archive schema version");
  e.problem_features = j.at("problem_features").get<std::vector<double>>();
  e.model_id = j.at("model_id").get<std::string>();
  e.task = parse_task(j.at("task").get<std::string>());
  e.d_in = j.at("d_in").get<int>();
  e.best_action = j.at("best_action").get<ActionTuple>();
  e.best_reward = j.at("best_reward").get<double>();
  e.per_arm_stats = j.at("per_arm_stats").get<std::map<std::string, ArmStats>>();
  e.session_id = j.at("session_id").get<std::string>();
  e.timestamp = j.at("timestamp").get<long long>();
  if (j.at("policy_snapshot").is_null())
    e.policy_snapshot.reset();
  else
    e.policy_snapshot = j.at("policy_snapshot");
  if (e.best_reward < 0 || e.best_reward > 100) throw ParseError("best_reward out of range");
}

}  // namespace driftguard
