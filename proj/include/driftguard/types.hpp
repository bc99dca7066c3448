#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace driftguard {

using json = nlohmann::json;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define DRIFTGUARD_ERROR(Name)                                        \
  struct Name : Error {                                               \
    using Error::Error;                                               \
    const char* kind() const noexcept override { return #Name; }      \
  };

DRIFTGUARD_ERROR(InvalidProblem)
DRIFTGUARD_ERROR(UnknownEstimator)
DRIFTGUARD_ERROR(ParseError)
DRIFTGUARD_ERROR(TaskMismatch)
DRIFTGUARD_ERROR(DimensionError)
DRIFTGUARD_ERROR(InsufficientCorpus)
DRIFTGUARD_ERROR(NoFeasibleAction)
DRIFTGUARD_ERROR(InvalidReward)
DRIFTGUARD_ERROR(MalformedObservation)
DRIFTGUARD_ERROR(InsufficientSamples)
DRIFTGUARD_ERROR(UnknownModel)
DRIFTGUARD_ERROR(UnknownAttribute)
DRIFTGUARD_ERROR(ScriptMiss)
DRIFTGUARD_ERROR(Unrecoverable)
DRIFTGUARD_ERROR(LoadError)
DRIFTGUARD_ERROR(PersistError)
DRIFTGUARD_ERROR(NoData)
DRIFTGUARD_ERROR(ConfigError)

#undef DRIFTGUARD_ERROR

// Enum <-> string tables. Unknown strings raise ParseError so that
// deserialization stays total over valid input and loud otherwise.
template <typename E, std::size_t N>
struct EnumNames {
  std::array<std::pair<E, std::string_view>, N> items;

  std::string name(E e) const {
    for (auto& [v, s] : items)
      if (v == e) return std::string(s);
    throw ParseError("enum value out of range");
  }
  E parse(std::string_view s) const {
    for (auto& [v, n] : items)
      if (n == s) return v;
    throw ParseError("unknown enum name: " + std::string(s));
  }
};

enum class Task { SA, UQ };
enum class DistFamily { Uniform, Normal, Other };

inline constexpr EnumNames<Task, 2> kTaskNames{{{{Task::SA, "SA"}, {Task::UQ, "UQ"}}}};
inline constexpr EnumNames<DistFamily, 3> kDistNames{
    {{{DistFamily::Uniform, "Uniform"}, {DistFamily::Normal, "Normal"}, {DistFamily::Other, "Other"}}}};

std::string to_string(Task t);
std::string to_string(DistFamily d);
Task parse_task(std::string_view s);
DistFamily parse_dist_family(std::string_view s);

// Fixed 8-component problem descriptor. Built by make_context (action_space);
// feasibility_bits is always recomputed from the action space, never set by hand.
struct ContextVector {
  int d_in = 0;
  int d_out = 0;
  long long n_budget = 0;
  double epsilon = 0.0;
  Task task = Task::SA;
  std::vector<DistFamily> dist_family;
  DistFamily dist_mode = DistFamily::Uniform;
  bool multi_output_flag = false;
  std::vector<bool> feasibility_bits;

  bool operator==(const ContextVector&) const = default;
};

struct ActionTuple {
  Task task = Task::SA;
  std::vector<std::string> dims;

  // SA: D2 names the estimator. UQ: D1 names the propagation method.
  const std::string& estimator() const;
  std::string label() const;

  bool operator==(const ActionTuple&) const = default;
  auto operator<=>(const ActionTuple& o) const {
    if (auto c = task <=> o.task; c != 0) return c;
    return dims <=> o.dims;
  }
};

void to_json(json& j, const ContextVector& x);
void from_json(const json& j, ContextVector& x);
void to_json(json& j, const ActionTuple& a);
void from_json(const json& j, ActionTuple& a);

// Portable RNG: mt19937_64 plus hand-rolled transforms so draws do not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform();                       // [0, 1)
  double normal();                        // standard normal
  std::size_t below(std::size_t n);       // uniform integer in [0, n)
  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t base, std::string_view tag, std::uint64_t a = 0, std::uint64_t b = 0);

// FNV-1a over the canonical (sorted-key) JSON dump.
std::string digest(const json& j);
std::uint64_t fnv1a(std::string_view s);

template <typename T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}
template <typename T>
void get_opt(const json& j, const char* key, std::optional<T>& v) {
  if (!j.contains(key) || j.at(key).is_null())
    v.reset();
  else
    v = j.at(key).get<T>();
}

}  // namespace driftguard
