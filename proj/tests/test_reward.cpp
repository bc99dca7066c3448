#include <gtest/gtest.h>

#include <random>

#include "driftguard/estimators.hpp"
#include "driftguard/reward.hpp"
#include "test_util.hpp"

using namespace driftguard;
using driftguard::testing::make_desc;
using driftguard::testing::sa_action;

namespace {

struct Fixture {
  const BenchmarkModel& m = benchmark_model("ishigami");
  ProblemScheme ps = build_problem_scheme(make_desc("ishigami", 3, 1, 20000, "Uniform"));
  MethodScheme ms;
  Observation perfect;

  Fixture() {
    auto probe = build_method_scheme(sa_action("Sobol"), ps, {});
    ms = build_method_scheme(sa_action("Sobol"), ps, {{"n_samples", double(probe.n_min_value / (m.d_in + 2))}});
    perfect.status = ExecStatus::Ok;
    perfect.result.estimator = "Sobol";
    perfect.result.s1 = m.analytic_s1;
    perfect.result.st = m.analytic_st;
    perfect.result.evaluations_used = ms.n_min_value;
    perfect.read_attributes = ms.required_attributes;
  }

  RewardBreakdown score(const Observation& o, const std::optional<Observation>& prev = std::nullopt) const {
    return compute_reward(o, ms, ps.context, m.analytic_s1, prev);
  }
};

void expect_well_formed(const RewardBreakdown& b) {
  EXPECT_GE(b.integrity, 0);
  EXPECT_LE(b.integrity, 35);
  EXPECT_GE(b.accuracy, 0);
  EXPECT_LE(b.accuracy, 35);
  EXPECT_GE(b.details, 0);
  EXPECT_LE(b.details, 15);
  EXPECT_GE(b.optimality, 0);
  EXPECT_LE(b.optimality, 15);
  EXPECT_NEAR(b.total, b.integrity + b.accuracy + b.details + b.optimality, 1e-12);
}

}  // namespace

TEST(Reward, PerfectRunScoresFullMarks) {
  Fixture f;
  auto b = f.score(f.perfect);
  EXPECT_DOUBLE_EQ(b.integrity, 35);
  EXPECT_DOUBLE_EQ(b.accuracy, 35);
  EXPECT_DOUBLE_EQ(b.details, 15);
  EXPECT_DOUBLE_EQ(b.optimality, 15);
  EXPECT_DOUBLE_EQ(b.total, 100);
  EXPECT_FALSE(b.notes.empty());
}

TEST(Reward, NanAndNegativeVarianceLeaveFiveDetails) {
  Fixture f;
  auto o = f.perfect;
  o.result.nan_count = 1;
  o.result.negative_variance_flag = true;
  EXPECT_DOUBLE_EQ(f.score(o).details, 5);
}

TEST(Reward, DetailsFloorAtZero) {
  Fixture f;
  auto o = f.perfect;
  o.result.nan_count = 7;
  EXPECT_DOUBLE_EQ(f.score(o).details, 0);
}

TEST(Reward, CrashIsCappedAtThirty) {
  Fixture f;
  Observation crash;
  crash.status = ExecStatus::Failed;
  crash.error_class = "Unrecoverable";
  crash.result.estimator = "Sobol";
  auto b = f.score(crash);
  EXPECT_DOUBLE_EQ(b.accuracy, 0);
  EXPECT_LE(b.total, 30);
  EXPECT_DOUBLE_EQ(b.optimality, 0);
}

TEST(Reward, ForbiddenAttributeReadCostsIntegrity) {
  Fixture f;
  auto o = f.perfect;
  o.read_attributes.push_back("chatterjee_indices");
  EXPECT_DOUBLE_EQ(f.score(o).integrity, 15);
}

TEST(Reward, MissingRequiredAttributeCostsIntegrityAndAccuracy) {
  Fixture f;
  auto o = f.perfect;
  o.result.st.reset();
  auto b = f.score(o);
  EXPECT_DOUBLE_EQ(b.integrity, 25);
  EXPECT_DOUBLE_EQ(b.accuracy, 0);
}

TEST(Reward, RankInversionVersusPreviousRun) {
  Fixture f;
  auto prev = f.perfect;
  auto s = *f.m.analytic_s1;
  std::swap(s[0], s[1]);
  prev.result.s1 = s;
  EXPECT_DOUBLE_EQ(f.score(f.perfect, prev).details, 12);
}

TEST(Reward, UnaddressedWarningPenalty) {
  Fixture f;
  auto o = f.perfect;
  o.result.warnings.push_back({"low_samples", "few", false, false});
  o.result.warnings.push_back({"other", "handled", false, true});
  EXPECT_DOUBLE_EQ(f.score(o).details, 13);
  o.result.warnings.push_back({"fatal", "bad", true, true});
  EXPECT_DOUBLE_EQ(f.score(o).integrity, 30);
}

TEST(Reward, OverspendLowersOptimality) {
  Fixture f;
  auto o = f.perfect;
  o.result.evaluations_used = 2 * f.ms.n_min_value;
  EXPECT_NEAR(f.score(o).optimality, 9 * 0.5 + 6, 1e-12);
}

TEST(Reward, MissingStatusIsMalformed) {
  Fixture f;
  Observation o = f.perfect;
  o.status.reset();
  EXPECT_THROW(f.score(o), MalformedObservation);
}

TEST(Reward, ScriptedRewardSplitsAcrossComponents) {
  Fixture f;
  auto o = f.perfect;
  o.result.scripted_reward = 60;
  auto b = f.score(o);
  EXPECT_NEAR(b.total, 60, 1e-12);
  expect_well_formed(b);
}

TEST(Reward, PureAndDeterministic) {
  Fixture f;
  auto o = f.perfect;
  o.result.nan_count = 1;
  EXPECT_EQ(f.score(o), f.score(o));
}

TEST(Reward, AccuracyMonotoneInError) {
  Fixture f;
  const auto& ref = *f.m.analytic_s1;
  double last = 1e9;
  for (double err = 0.0; err <= 0.08; err += 0.005) {
    auto o = f.perfect;
    auto s = ref;
    for (auto& v : s) v += err;
    o.result.s1 = s;
    double acc = f.score(o).accuracy;
    EXPECT_LE(acc, last + 1e-12) << err;
    last = acc;
  }
}

TEST(Reward, ComponentsStayInRangeForRandomObservations) {
  Fixture f;
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int t = 0; t < 500; ++t) {
    Observation o = f.perfect;
    o.status = gen() % 5 == 0 ? ExecStatus::Failed : ExecStatus::Ok;
    std::vector<double> s1(3), st(3);
    for (auto& v : s1) v = u(gen);
    for (auto& v : st) v = u(gen);
    if (gen() % 7 == 0) s1[gen() % 3] = std::nan("");
    o.result.s1 = s1;
    if (gen() % 4) o.result.st = st;
    else o.result.st.reset();
    o.result.nan_count = int(gen() % 4);
    o.result.negative_variance_flag = gen() % 2;
    o.result.evaluations_used = (long long)(gen() % 50000);
    for (int w = int(gen() % 4); w > 0; --w) o.result.warnings.push_back({"w", "", bool(gen() % 2), bool(gen() % 2)});
    if (gen() % 3 == 0) o.read_attributes.push_back("mu_star");
    std::optional<Observation> prev;
    if (gen() % 2) {
      prev = f.perfect;
      prev->result.s1 = std::vector<double>{u(gen), u(gen), u(gen)};
    }
    std::optional<std::vector<double>> ref;
    if (gen() % 2) ref = f.m.analytic_s1;
    expect_well_formed(compute_reward(o, f.ms, f.ps.context, ref, prev));
  }
}

TEST(Register, DropFlagsAndSignalsViolation) {
  RegisterState st;
  st = register_append(st, {1, sa_action("Sobol"), 64.2});
  EXPECT_TRUE(st.submartingale_flags.empty());
  st = register_append(st, {2, sa_action("Sobol"), 60.8});
  EXPECT_EQ(st.submartingale_flags, std::vector<int>{2});
  ASSERT_TRUE(st.pending_violation);
  EXPECT_EQ(*st.pending_violation, (SubmartingaleViolation{2, 64.2, 60.8}));
}

TEST(Register, IncreasingRewardsNoFlags) {
  RegisterState st;
  int n = 1;
  for (double r : {56.6, 62.8, 68.8}) st = register_append(st, {n++, sa_action("Sobol"), r});
  EXPECT_TRUE(st.submartingale_flags.empty());
  EXPECT_FALSE(st.pending_violation);
  EXPECT_EQ(st.history.size(), 3u);
}

TEST(Register, FlagsConsistentWithHistory) {
  std::mt19937_64 gen(2);
  RegisterState st;
  for (int n = 1; n <= 200; ++n) {
    auto before = st.history;
    st = register_append(st, {n, sa_action("CVM"), double(gen() % 101)});
    ASSERT_EQ(st.history.size(), before.size() + 1);
    EXPECT_TRUE(std::equal(before.begin(), before.end(), st.history.begin()));
  }
  std::vector<int> expect;
  for (std::size_t k = 1; k < st.history.size(); ++k)
    if (st.history[k].reward < st.history[k - 1].reward) expect.push_back(st.history[k].n);
  EXPECT_EQ(st.submartingale_flags, expect);
  EXPECT_THROW(register_append(st, {201, sa_action("CVM"), std::nan("")}), InvalidReward);
}

TEST(Regret, CumulativeSums) {
  RegisterState st;
  st = register_append(st, {1, sa_action("Sobol"), 100});
  st = register_append(st, {2, sa_action("Sobol"), 100});
  EXPECT_DOUBLE_EQ(cumulative_regret(st, 100), 0);
  RegisterState one = register_append(RegisterState{}, {1, sa_action("Sobol"), 72});
  EXPECT_DOUBLE_EQ(cumulative_regret(one, 80), 8);
  std::mt19937_64 gen(4);
  RegisterState many;
  double brute = 0;
  for (int n = 1; n <= 50; ++n) {
    double r = double(gen() % 101);
    brute += 95 - r;
    many = register_append(many, {n, sa_action("Sobol"), r});
  }
  EXPECT_NEAR(cumulative_regret(many, 95), brute, 1e-9);
}

TEST(Config, JsonRoundTrip) {
  RewardConfig c;
  c.nan_penalty = 4;
  auto back = json(c).get<RewardConfig>();
  EXPECT_DOUBLE_EQ(back.nan_penalty, 4);
  EXPECT_DOUBLE_EQ(back.precision, 20);
}
