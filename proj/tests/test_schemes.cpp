#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "driftguard/schemes.hpp"
#include "test_util.hpp"

using namespace driftguard;
using driftguard::testing::beam_desc;
using driftguard::testing::make_desc;
using driftguard::testing::sa_action;

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

RewardBreakdown perfect() {
  RewardBreakdown b;
  b.integrity = 35;
  b.accuracy = 35;
  b.details = 15;
  b.optimality = 15;
  b.total = 100;
  return b;
}

Observation ok_obs(const std::string& est, double n) {
  Observation o;
  o.status = ExecStatus::Ok;
  o.result.estimator = est;
  o.hyperparams["n_samples"] = n;
  return o;
}

}  // namespace

TEST(ProblemScheme, BeamMorrisInfeasibleSobolFeasible) {
  auto ps = build_problem_scheme(beam_desc());
  EXPECT_FALSE(contains(ps.feasible_sa_estimators, "Morris"));
  EXPECT_TRUE(contains(ps.feasible_sa_estimators, "Sobol"));
  auto it = std::find_if(ps.estimator_flags.begin(), ps.estimator_flags.end(),
                         [](auto& f) { return f.estimator == "Morris"; });
  ASSERT_NE(it, ps.estimator_flags.end());
  EXPECT_FALSE(it->feasible);
  EXPECT_TRUE(contains(it->predicates, "morris_screening_high_dim"));
  auto ms = build_method_scheme(sa_action("Sobol"), ps, {});
  EXPECT_EQ(ms.n_min_value, 3000);
  EXPECT_FALSE(ps.high_d_in_flag);
  EXPECT_EQ(ps.output_class, "scalar");
}

TEST(ProblemScheme, TinyBudgetLeavesOnlyBudgetFreeRankEstimators) {
  auto ps = build_problem_scheme(make_desc("tiny", 1, 1, 10, "Uniform"));
  ASSERT_FALSE(ps.feasible_sa_estimators.empty());
  for (auto& e : ps.feasible_sa_estimators) {
    EXPECT_EQ(estimator_info(e).index_type, "rank_based") << e;
    EXPECT_NE(estimator_info(e).cost, CostModel::PickFreeze) << e;
  }
  EXPECT_FALSE(contains(ps.feasible_sa_estimators, "Sobol"));
  EXPECT_FALSE(contains(ps.feasible_sa_estimators, "PCE_SA"));
}

TEST(ProblemScheme, PceFeasibleAtFifteenInputs) {
  auto ps = build_problem_scheme(make_desc("g_function_15", 15, 1, 50000, "Uniform"));
  EXPECT_TRUE(contains(ps.feasible_sa_estimators, "PCE_SA"));
  EXPECT_TRUE(ps.high_d_in_flag);
}

TEST(ProblemScheme, FlagsConsistentWithFeasibleList) {
  for (auto desc : {beam_desc(), make_desc("a", 1, 1, 10, "Uniform"), make_desc("b", 20, 3, 100000, "Normal")}) {
    auto ps = build_problem_scheme(desc);
    for (auto& f : ps.estimator_flags) {
      EXPECT_EQ(f.feasible, contains(ps.feasible_sa_estimators, f.estimator)) << f.estimator;
      EXPECT_EQ(f.feasible, f.predicates.empty()) << f.estimator;
    }
  }
}

TEST(ProblemScheme, FeasibleListAgreesWithValidateOverCatalog) {
  ActionSpace space;
  for (auto desc : {beam_desc(), make_desc("a", 1, 1, 10, "Uniform"), make_desc("b", 9, 2, 6000, "Uniform"),
                    make_desc("c", 15, 1, 50000, "Uniform")}) {
    auto ps = build_problem_scheme(desc, space);
    for (auto& info : estimator_catalog()) {
      bool any = false;
      for (auto& a : space.enumerate_actions(Task::SA))
        if (a.estimator() == info.id) any = any || space.validate_action(a, ps.context).verdict;
      EXPECT_EQ(any, contains(ps.feasible_sa_estimators, info.id)) << info.id;
    }
  }
}

TEST(ProblemScheme, ScreeningFlagFollowsConfiguredThreshold) {
  ActionSpaceConfig cfg;
  cfg.screening_dim_threshold = 4;
  auto ps = build_problem_scheme(beam_desc(), ActionSpace(cfg));
  EXPECT_TRUE(ps.high_d_in_flag);
  EXPECT_TRUE(contains(ps.feasible_sa_estimators, "Morris"));
}

TEST(ProblemScheme, InvalidInputsRejected) {
  auto d = beam_desc();
  d.d_in = 0;
  EXPECT_THROW(build_problem_scheme(d), InvalidProblem);
  d = beam_desc();
  d.task = "XX";
  EXPECT_THROW(build_problem_scheme(d), InvalidProblem);
  d = beam_desc();
  d.d_out = 0;
  EXPECT_THROW(build_problem_scheme(d), InvalidProblem);
}

TEST(ProblemScheme, Deterministic) {
  EXPECT_EQ(build_problem_scheme(beam_desc()), build_problem_scheme(beam_desc()));
}

TEST(MethodScheme, SobolCostIsPickFreeze) {
  auto ps = build_problem_scheme(beam_desc());
  auto ms = build_method_scheme(sa_action("Sobol"), ps, {{"n_samples", 8500}});
  EXPECT_EQ(ms.n_min_value, 3000);
  EXPECT_EQ(ms.n_cost_actual, 51000);
  EXPECT_EQ(ms.sampling_scheme, "pick_freeze");
  EXPECT_EQ(ms.index_type, "variance_based");
}

TEST(MethodScheme, ZeroSamplesIsInfeasible) {
  auto ps = build_problem_scheme(beam_desc());
  auto ms = build_method_scheme(sa_action("Sobol"), ps, {{"n_samples", 0}});
  EXPECT_EQ(ms.n_cost_actual, 0);
  EXPECT_EQ(ms.budget_status, BudgetStatus::Infeasible);
}

TEST(MethodScheme, ChatterjeeSingleLoop) {
  auto ps = build_problem_scheme(beam_desc());
  auto ms = build_method_scheme(sa_action("Chatterjee"), ps, {{"n_samples", 10000}});
  EXPECT_EQ(ms.n_cost_actual, 10000);
  EXPECT_EQ(ms.required_attributes, std::vector<std::string>{"chatterjee_indices"});
  EXPECT_TRUE(contains(ms.forbidden_attributes, "first_order_indices"));
}

TEST(MethodScheme, BudgetStatusInfeasibleWhenNMinAboveBudget) {
  auto ps = build_problem_scheme(make_desc("small", 4, 1, 2000, "Uniform"));
  auto ms = build_method_scheme(sa_action("Sobol"), ps, {{"n_samples", 500}});
  EXPECT_GT(ms.n_min_value, ps.context.n_budget);
  EXPECT_EQ(ms.budget_status, BudgetStatus::Infeasible);
}

TEST(MethodScheme, DefaultSamplesAndMorrisLevels) {
  auto ps = build_problem_scheme(make_desc("g", 15, 1, 50000, "Uniform"));
  auto ms = build_method_scheme(sa_action("Morris"), ps, {});
  EXPECT_DOUBLE_EQ(ms.hyperparams.at("levels"), 4.0);
  EXPECT_EQ(ms.n_min_value, 320);
  EXPECT_GE(ms.n_cost_actual, ms.n_min_value);
  EXPECT_LE(ms.n_cost_actual, ps.context.n_budget);
}

TEST(MethodScheme, RequiredSubsetOfProducesAndDisjointFromForbidden) {
  auto ps = build_problem_scheme(make_desc("g", 15, 3, 500000, "Uniform"));
  for (auto& info : estimator_catalog()) {
    auto ms = build_method_scheme(sa_action(info.id), ps, {});
    for (auto& r : ms.required_attributes) {
      EXPECT_TRUE(contains(ms.produces, r));
      EXPECT_FALSE(contains(ms.forbidden_attributes, r));
    }
  }
}

TEST(MethodScheme, UnknownEstimatorThrows) {
  auto ps = build_problem_scheme(beam_desc());
  EXPECT_THROW(build_method_scheme(sa_action("Bogus"), ps, {}), UnknownEstimator);
}

TEST(DiagnosticScheme, InsufficientPrescribesDoubling) {
  auto b = perfect();
  b.accuracy = 10;
  b.total = 75;
  auto d = build_diagnostic_scheme("Indices unstable: insufficient samples for convergence", ok_obs("Sobol", 1000), b);
  EXPECT_EQ(d.root_cause, RootCause::InsufficientN);
  ASSERT_TRUE(d.prescribed_N_factor);
  EXPECT_DOUBLE_EQ(*d.prescribed_N_factor, 2.0);
  EXPECT_EQ(d.bottleneck_dim, RewardComponent::Accuracy);
  EXPECT_EQ(d.convergence_status, ConvergenceStatus::Partial);
  EXPECT_DOUBLE_EQ(d.prescribed_hyperparam->at("n_samples"), 2000.0);
  EXPECT_FALSE(d.block_action);
}

TEST(DiagnosticScheme, EmptyReportPerfectBreakdownConverges) {
  auto d = build_diagnostic_scheme("", ok_obs("Sobol", 1000), perfect());
  EXPECT_EQ(d.convergence_status, ConvergenceStatus::Converged);
  EXPECT_EQ(d.root_cause, RootCause::None);
  EXPECT_EQ(d.bottleneck_dim, RewardComponent::Integrity);
}

TEST(DiagnosticScheme, AttributeErrorBlocks) {
  auto d = build_diagnostic_scheme("attribute error: result has no first_order_indices", ok_obs("Sobol", 10), perfect());
  EXPECT_EQ(d.root_cause, RootCause::AttributeError);
  EXPECT_TRUE(d.block_action);
}

TEST(DiagnosticScheme, FailedExecutionStatus) {
  auto o = ok_obs("Sobol", 10);
  o.status = ExecStatus::Failed;
  RewardBreakdown zero;
  auto d = build_diagnostic_scheme("", o, zero);
  EXPECT_EQ(d.convergence_status, ConvergenceStatus::Failed);
}

TEST(DiagnosticScheme, BlockImpliesAttributeOrWrongEstimator) {
  std::vector<std::string> reports{"",        "insufficient N", "wrong estimator for this output",
                                   "NaN seen", "attribute missing", "mismatch between plan and code",
                                   "degenerate variance", "all fine"};
  for (auto& r : reports) {
    auto d = build_diagnostic_scheme(r, ok_obs("CVM", 100), perfect());
    if (d.block_action)
      EXPECT_TRUE(d.root_cause == RootCause::AttributeError || d.root_cause == RootCause::WrongEstimator) << r;
    if (d.prescribed_N_factor) EXPECT_GT(*d.prescribed_N_factor, 0);
    EXPECT_EQ(d, build_diagnostic_scheme(r, ok_obs("CVM", 100), perfect()));
  }
}

TEST(Serialization, BeamProblemSchemeRoundTrips) {
  auto ps = build_problem_scheme(beam_desc());
  auto text = serialize_scheme(ps);
  EXPECT_EQ(deserialize_scheme<ProblemScheme>(text), ps);
  EXPECT_EQ(serialize_scheme(deserialize_scheme<ProblemScheme>(text)), text);
}

TEST(Serialization, MethodSchemeEmptyHyperparamsRoundTrips) {
  auto ps = build_problem_scheme(beam_desc());
  auto ms = build_method_scheme(sa_action("Chatterjee"), ps, {});
  ms.hyperparams.clear();
  EXPECT_EQ(deserialize_scheme<MethodScheme>(serialize_scheme(ms)), ms);
}

TEST(Serialization, MalformedTextThrows) {
  EXPECT_THROW(deserialize_scheme<ProblemScheme>("{"), ParseError);
  EXPECT_THROW(deserialize_scheme<MethodScheme>("{\"estimator\": 3}"), ParseError);
}

TEST(Serialization, KeysAreSorted) {
  auto text = serialize_scheme(build_problem_scheme(beam_desc()));
  auto j = json::parse(text);
  std::string prev;
  for (auto& [k, v] : j.items()) {
    EXPECT_LT(prev, k);
    prev = k;
  }
}

TEST(Serialization, RandomizedSchemesRoundTrip) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::string> dists{"Uniform", "Normal", "Gumbel"};
  for (int trial = 0; trial < 60; ++trial) {
    int d_in = 1 + int(gen() % 25);
    int d_out = 1 + int(gen() % 4);
    auto desc = make_desc("m" + std::to_string(trial), d_in, d_out, (long long)(gen() % 200000), "Uniform");
    for (auto& d : desc.distributions) d = dists[gen() % dists.size()];
    desc.epsilon = 0.001 + u(gen);
    desc.has_dependence = gen() % 2;
    auto ps = build_problem_scheme(desc);
    ASSERT_EQ(deserialize_scheme<ProblemScheme>(serialize_scheme(ps)), ps);

    const auto& cat = estimator_catalog();
    auto ms = build_method_scheme(sa_action(cat[gen() % cat.size()].id), ps,
                                  {{"n_samples", double(gen() % 10000)}, {"alpha", u(gen)}});
    ASSERT_EQ(deserialize_scheme<MethodScheme>(serialize_scheme(ms)), ms);

    DiagnosticScheme d;
    d.reward = 100 * u(gen);
    d.root_cause = static_cast<RootCause>(gen() % 5);
    d.bottleneck_dim = static_cast<RewardComponent>(gen() % 4);
    d.convergence_status = static_cast<ConvergenceStatus>(gen() % 3);
    if (gen() % 2) d.prescribed_N_factor = 1 + u(gen);
    if (gen() % 2) d.prescribed_estimator = "Sobol";
    if (gen() % 2) d.prescribed_hyperparam = std::map<std::string, double>{{"n_samples", u(gen) * 1e4}};
    d.physical_insight = "x" + std::to_string(trial);
    ASSERT_EQ(deserialize_scheme<DiagnosticScheme>(serialize_scheme(d)), d);
  }
}
