#include "driftguard/types.hpp"

#include <cmath>

namespace driftguard {

std::string to_string(Task t) { return kTaskNames.name(t); }
std::string to_string(DistFamily d) { return kDistNames.name(d); }
Task parse_task(std::string_view s) { return kTaskNames.parse(s); }
DistFamily parse_dist_family(std::string_view s) { return kDistNames.parse(s); }

const std::string& ActionTuple::estimator() const {
  std::size_t idx = task == Task::SA ? 1 : 0;
  if (dims.size() <= idx) throw ParseError("action tuple has too few dimensions");
  return dims[idx];
}

std::string ActionTuple::label() const {
  std::string s = to_string(task) + "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += dims[i];
  }
  return s + ")";
}

void to_json(json& j, const ContextVector& x) {
  std::vector<std::string> fams;
  for (auto f : x.dist_family) fams.push_back(to_string(f));
  j = json{{"d_in", x.d_in},
           {"d_out", x.d_out},
           {"n_budget", x.n_budget},
           {"epsilon", x.epsilon},
           {"task", to_string(x.task)},
           {"dist_family", fams},
           {"dist_mode", to_string(x.dist_mode)},
           {"multi_output_flag", x.multi_output_flag},
           {"feasibility_bits", x.feasibility_bits}};
}

void from_json(const json& j, ContextVector& x) {
  x.d_in = j.at("d_in").get<int>();
  x.d_out = j.at("d_out").get<int>();
  x.n_budget = j.at("n_budget").get<long long>();
  x.epsilon = j.at("epsilon").get<double>();
  x.task = parse_task(j.at("task").get<std::string>());
  x.dist_family.clear();
  for (auto& f : j.at("dist_family")) x.dist_family.push_back(parse_dist_family(f.get<std::string>()));
  x.dist_mode = parse_dist_family(j.at("dist_mode").get<std::string>());
  x.multi_output_flag = j.at("multi_output_flag").get<bool>();
  x.feasibility_bits = j.at("feasibility_bits").get<std::vector<bool>>();
}

void to_json(json& j, const ActionTuple& a) { j = json{{"task", to_string(a.task)}, {"dims", a.dims}}; }

void from_json(const json& j, ActionTuple& a) {
  a.task = parse_task(j.at("task").get<std::string>());
  a.dims = j.at("dims").get<std::vector<std::string>>();
}

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double th = 2.0 * M_PI * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) return 0;
  // Rejection sampling to avoid modulo bias.
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do v = eng_();
  while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

static std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t base, std::string_view tag, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix(base ^ fnv1a(tag));
  h = splitmix(h ^ a);
  return splitmix(h ^ (b * 0x2545f4914f6cdd1dull));
}

std::string digest(const json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

}  // namespace driftguard
