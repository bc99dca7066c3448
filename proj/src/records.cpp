#include "driftguard/records.hpp"

#include <cmath>
#include <limits>

namespace driftguard {

namespace {

// JSON has no NaN; NaN entries travel as null.
json vec_to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return a;
}

std::vector<double> vec_from_json(const json& a) {
  std::vector<double> v;
  for (auto& x : a) v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
  return v;
}

void put_vec(json& j, const char* k, const std::optional<std::vector<double>>& v) {
  j[k] = v ? vec_to_json(*v) : json(nullptr);
}

void get_vec(const json& j, const char* k, std::optional<std::vector<double>>& v) {
  if (!j.contains(k) || j.at(k).is_null())
    v.reset();
  else
    v = vec_from_json(j.at(k));
}

bool same_vec(const std::optional<std::vector<double>>& a, const std::optional<std::vector<double>>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  if (a->size() != b->size()) return false;
  for (std::size_t i = 0; i < a->size(); ++i) {
    double x = (*a)[i], y = (*b)[i];
    if (std::isnan(x) && std::isnan(y)) continue;
    if (x != y) return false;
  }
  return true;
}

}  // namespace

const std::vector<double>* SAResult::attribute(const std::string& name) const {
  auto pick = [](const std::optional<std::vector<double>>& v) { return v ? &*v : nullptr; };
  if (name == "first_order_indices") return pick(s1);
  if (name == "total_order_indices") return pick(st);
  if (name == "chatterjee_indices") return estimator == "Chatterjee" ? pick(rank_indices) : nullptr;
  if (name == "cvm_indices") return estimator == "CVM" ? pick(rank_indices) : nullptr;
  if (name == "mu_star") return pick(mu_star);
  if (name == "sigma") return pick(sigma);
  if (name == "generalized_first_order_indices") return pick(generalized_s1);
  if (name == "generalized_total_order_indices") return pick(generalized_st);
  return nullptr;
}

bool SAResult::operator==(const SAResult& o) const {
  return estimator == o.estimator && same_vec(s1, o.s1) && same_vec(st, o.st) &&
         same_vec(rank_indices, o.rank_indices) && same_vec(mu_star, o.mu_star) && same_vec(sigma, o.sigma) &&
         same_vec(generalized_s1, o.generalized_s1) && same_vec(generalized_st, o.generalized_st) &&
         evaluations_used == o.evaluations_used && warnings == o.warnings && nan_count == o.nan_count &&
         negative_variance_flag == o.negative_variance_flag && simulated == o.simulated &&
         scripted_reward == o.scripted_reward;
}

std::vector<std::string> SAResult::populated_attributes() const {
  std::vector<std::string> out;
  for (const char* n : {"first_order_indices", "total_order_indices", "chatterjee_indices", "cvm_indices", "mu_star",
                        "sigma", "generalized_first_order_indices", "generalized_total_order_indices"})
    if (attribute(n)) out.push_back(n);
  return out;
}

void to_json(json& j, const WarningRecord& w) {
  j = json{{"code", w.code}, {"message", w.message}, {"critical", w.critical}, {"addressed", w.addressed}};
}

void from_json(const json& j, WarningRecord& w) {
  w.code = j.at("code").get<std::string>();
  w.message = j.at("message").get<std::string>();
  w.critical = j.at("critical").get<bool>();
  w.addressed = j.at("addressed").get<bool>();
}

void to_json(json& j, const SAResult& r) {
  j = json::object();
  j["estimator"] = r.estimator;
  put_vec(j, "s1", r.s1);
  put_vec(j, "st", r.st);
  put_vec(j, "rank_indices", r.rank_indices);
  put_vec(j, "mu_star", r.mu_star);
  put_vec(j, "sigma", r.sigma);
  put_vec(j, "generalized_s1", r.generalized_s1);
  put_vec(j, "generalized_st", r.generalized_st);
  j["evaluations_used"] = r.evaluations_used;
  j["warnings"] = r.warnings;
  j["nan_count"] = r.nan_count;
  j["negative_variance_flag"] = r.negative_variance_flag;
  j["simulated"] = r.simulated;
  put_opt(j, "scripted_reward", r.scripted_reward);
}

void from_json(const json& j, SAResult& r) {
  r.estimator = j.at("estimator").get<std::string>();
  get_vec(j, "s1", r.s1);
  get_vec(j, "st", r.st);
  get_vec(j, "rank_indices", r.rank_indices);
  get_vec(j, "mu_star", r.mu_star);
  get_vec(j, "sigma", r.sigma);
  get_vec(j, "generalized_s1", r.generalized_s1);
  get_vec(j, "generalized_st", r.generalized_st);
  r.evaluations_used = j.at("evaluations_used").get<long long>();
  r.runtime_seconds = 0.0;
  r.warnings = j.at("warnings").get<std::vector<WarningRecord>>();
  r.nan_count = j.at("nan_count").get<int>();
  r.negative_variance_flag = j.at("negative_variance_flag").get<bool>();
  r.simulated = j.at("simulated").get<bool>();
  get_opt(j, "scripted_reward", r.scripted_reward);
}

void to_json(json& j, const Observation& o) {
  j = json::object();
  j["status"] = o.status ? json(*o.status == ExecStatus::Ok ? "ok" : "failed") : json(nullptr);
  j["error_class"] = o.error_class;
  j["error_message"] = o.error_message;
  j["result"] = o.result;
  j["read_attributes"] = o.read_attributes;
  j["hyperparams"] = o.hyperparams;
}

void from_json(const json& j, Observation& o) {
  if (!j.contains("status") || j.at("status").is_null())
    o.status.reset();
  else {
    auto s = j.at("status").get<std::string>();
    if (s == "ok")
      o.status = ExecStatus::Ok;
    else if (s == "failed")
      o.status = ExecStatus::Failed;
    else
      throw ParseError("unknown execution status: " + s);
  }
  o.error_class = j.at("error_class").get<std::string>();
  o.error_message = j.at("error_message").get<std::string>();
  o.result = j.at("result").get<SAResult>();
  o.read_attributes = j.at("read_attributes").get<std::vector<std::string>>();
  o.hyperparams = j.at("hyperparams").get<std::map<std::string, double>>();
}

void to_json(json& j, const ScoredItem& s) {
  j = json{{"component", s.component}, {"item", s.item}, {"points", s.points}};
}

void from_json(const json& j, ScoredItem& s) {
  s.component = j.at("component").get<std::string>();
  s.item = j.at("item").get<std::string>();
  s.points = j.at("points").get<double>();
}

void to_json(json& j, const RewardBreakdown& b) {
  j = json{{"integrity", b.integrity}, {"accuracy", b.accuracy}, {"details", b.details},
           {"optimality", b.optimality}, {"total", b.total}, {"notes", b.notes}};
}

void from_json(const json& j, RewardBreakdown& b) {
  b.integrity = j.at("integrity").get<double>();
  b.accuracy = j.at("accuracy").get<double>();
  b.details = j.at("details").get<double>();
  b.optimality = j.at("optimality").get<double>();
  b.total = j.at("total").get<double>();
  b.notes = j.at("notes").get<std::vector<ScoredItem>>();
}

}  // namespace driftguard
