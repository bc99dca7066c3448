#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "driftguard/checkpoints.hpp"
#include "test_util.hpp"

using namespace driftguard;
using driftguard::testing::beam_desc;
using driftguard::testing::make_desc;
using driftguard::testing::sa_action;

namespace {

const CheckpointSpec& spec(CpId id) { return default_checkpoint_specs()[static_cast<std::size_t>(id)]; }

ThresholdState fresh(const CheckpointSpec& s) { return init_threshold(s, 0.0); }

Archive beam_archive(int sessions) {
  Archive a;
  auto ps = build_problem_scheme(beam_desc());
  for (int k = 0; k < sessions; ++k)
    a = record_session(a, SessionOutcome{ps, "beam-" + std::to_string(k), {{sa_action("Sobol"), 92.0, "f"}}, {}});
  return a;
}

}  // namespace

TEST(Specs, TableInvariants) {
  const auto& t = default_checkpoint_specs();
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_EQ(static_cast<std::size_t>(t[k].id), k);
    EXPECT_LE(t[k].theta_min, t[k].theta0);
  }
  EXPECT_FALSE(spec(CpId::CP0).adaptive);
  EXPECT_TRUE(spec(CpId::CP7).inverted);
  EXPECT_FALSE(spec(CpId::CP7).blocking);
  EXPECT_DOUBLE_EQ(spec(CpId::CP1).theta0, 0.25);
  EXPECT_DOUBLE_EQ(spec(CpId::CP1).theta_min, 0.15);
  EXPECT_DOUBLE_EQ(spec(CpId::CP7).theta0, 0.35);
  EXPECT_DOUBLE_EQ(spec(CpId::CP7).theta_min, 0.25);
  EXPECT_EQ(spec(CpId::CP2).on_failure, FailureAction::CriticReject);
  EXPECT_EQ(spec(CpId::CP5).on_failure, FailureAction::InspectorReject);
}

TEST(Evaluate, Cp2LowSimilarityBlocksWithCriticReject) {
  auto& s = spec(CpId::CP2);
  auto r = evaluate_similarity(s, 0.10, fresh(s));
  EXPECT_DOUBLE_EQ(r.threshold, 0.30);
  EXPECT_EQ(r.verdict, Verdict::Block);
  ASSERT_TRUE(r.failure_action);
  EXPECT_EQ(*r.failure_action, FailureAction::CriticReject);
}

TEST(Evaluate, Cp7IdenticalTextsWarnNovelty) {
  auto& s = spec(CpId::CP7);
  auto r = evaluate(s, "Sobol pick freeze", "Sobol pick freeze", fresh(s));
  EXPECT_NEAR(r.similarity, 1.0, 1e-12);
  EXPECT_EQ(r.verdict, Verdict::Warn);
  EXPECT_TRUE(r.novelty_flag);
  auto low = evaluate(s, "Sobol pick freeze", "Morris elementary effects", fresh(s));
  EXPECT_EQ(low.verdict, Verdict::Pass);
}

TEST(Evaluate, IdenticalTextsPassEveryNonInvertedCheckpoint) {
  for (auto& s : default_checkpoint_specs()) {
    if (s.inverted) continue;
    auto r = evaluate(s, "first order indices", "first order indices", fresh(s));
    EXPECT_EQ(r.verdict, Verdict::Pass) << to_string(s.id);
  }
}

TEST(Evaluate, BlockingNeverWarnsAndWarningNeverBlocks) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& s : default_checkpoint_specs())
    for (int k = 0; k < 200; ++k) {
      auto r = evaluate_similarity(s, u(gen), fresh(s));
      if (s.blocking) EXPECT_NE(r.verdict, Verdict::Warn);
      else EXPECT_NE(r.verdict, Verdict::Block);
      EXPECT_EQ(r.failure_action.has_value(), r.verdict != Verdict::Pass);
    }
}

TEST(Evaluate, AblatedThresholdsPassUnconditionally) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto s : default_checkpoint_specs()) {
    if (s.inverted) continue;
    s.theta0 = -1;
    s.theta_min = -1;
    EXPECT_TRUE(is_ablated(s));
    auto st = init_threshold(s, 0.2);
    for (int k = 0; k < 100; ++k) EXPECT_EQ(evaluate_similarity(s, u(gen), st).verdict, Verdict::Pass);
    EXPECT_EQ(evaluate(s, "alpha beta", "gamma delta", st).verdict, Verdict::Pass);
  }
}

TEST(Evaluate, Cp7VerdictInvariantToTextScaling) {
  auto& s = spec(CpId::CP7);
  // Repeating every token scales the count vector, which leaves the cosine unchanged.
  auto a = evaluate(s, "sobol indices", "sobol variance", fresh(s));
  auto b = evaluate(s, "sobol indices sobol indices", "sobol variance sobol variance sobol variance", fresh(s));
  EXPECT_NEAR(a.similarity, b.similarity, 1e-12);
  EXPECT_EQ(a.verdict, b.verdict);
}

TEST(Threshold, InitUsesFloorFromNullQuantile) {
  auto& s = spec(CpId::CP2);
  auto st = init_threshold(s, 0.35);
  EXPECT_DOUBLE_EQ(st.floor, 0.35);
  EXPECT_DOUBLE_EQ(st.current, 0.35);
  auto st2 = init_threshold(s, 0.05);
  EXPECT_DOUBLE_EQ(st2.floor, 0.20);
  EXPECT_DOUBLE_EQ(st2.current, 0.30);
}

TEST(Threshold, WarmupKeepsTheta0) {
  auto& s = spec(CpId::CP2);
  auto st = fresh(s);
  st = update_threshold(st, 0.9);
  EXPECT_DOUBLE_EQ(st.current, 0.30);
  st = update_threshold(st, 0.0);
  EXPECT_DOUBLE_EQ(st.current, 0.30);
  EXPECT_EQ(st.count, 2);
}

TEST(Threshold, ConstantHighObservationsTighten) {
  // theta0 = 0.30, every observation 0.60. Closed form after k steps from mean 0.30, var 0:
  // mean_k = 0.6 - 0.3 * 0.8^k, var_k = 0.09 * 0.8^(k-1) * (1 - 0.8^k).
  auto& s = spec(CpId::CP2);
  auto st = fresh(s);
  for (int k = 1; k <= 5; ++k) st = update_threshold(st, 0.60);
  double p5 = std::pow(0.8, 5);
  double mean = 0.6 - 0.3 * p5;
  double var = 0.09 * std::pow(0.8, 4) * (1 - p5);
  EXPECT_NEAR(st.ema_mean, mean, 1e-12);
  EXPECT_NEAR(st.ema_var, var, 1e-12);
  EXPECT_NEAR(st.current, mean - std::sqrt(var), 1e-12);
  EXPECT_GT(st.current, 0.30);
  for (int k = 0; k < 60; ++k) st = update_threshold(st, 0.60);
  EXPECT_NEAR(st.current, 0.40, 1e-12);
}

TEST(Threshold, LowObservationsClampToFloor) {
  auto& s = spec(CpId::CP4);
  auto st = init_threshold(s, 0.0);
  for (int k = 0; k < 10; ++k) st = update_threshold(st, st.floor - 0.2);
  EXPECT_DOUBLE_EQ(st.current, st.floor);
}

TEST(Threshold, NeverBelowFloorOrAboveCapUnderAdversarialSequences) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& s : default_checkpoint_specs()) {
    for (double q : {0.0, 0.2, 0.5}) {
      for (int run = 0; run < 30; ++run) {
        auto st = init_threshold(s, q);
        for (int k = 0; k < 100; ++k) {
          double obs;
          switch (run % 4) {
            case 0: obs = u(gen); break;
            case 1: obs = (k % 2) ? 1.0 : -1.0; break;
            case 2: obs = -1.0; break;
            default: obs = 1.0;
          }
          st = update_threshold(st, obs);
          EXPECT_GE(st.current, st.floor);
          EXPECT_GE(st.floor, s.theta_min);
          EXPECT_LE(st.current, std::max(st.floor, s.theta0 + 0.10) + 1e-12);
        }
      }
    }
  }
}

TEST(Cp0, EmptyArchiveExploresMax) {
  auto r = evaluate_cp0(build_problem_scheme(beam_desc()), Archive{});
  EXPECT_DOUBLE_EQ(r.similarity, 0.0);
  EXPECT_EQ(r.match, MatchClass::None);
  EXPECT_EQ(r.exploration_mode, ExplorationMode::ExploreMax);
  EXPECT_FALSE(r.warm_start);
  EXPECT_FALSE(r.screening_first);
}

TEST(Cp0, BeamRerunIsCloseAndExploits) {
  auto r = evaluate_cp0(build_problem_scheme(beam_desc()), beam_archive(2));
  EXPECT_GE(r.similarity, 0.90);
  EXPECT_EQ(r.match, MatchClass::Close);
  EXPECT_EQ(r.exploration_mode, ExplorationMode::Exploit);
  ASSERT_TRUE(r.warm_start);
  EXPECT_EQ(r.warm_start->session_id, "beam-1");
}

TEST(Cp0, ThermalAgainstBeamArchiveIsAnomalous) {
  auto r = evaluate_cp0(build_problem_scheme(make_desc("thermal_stub", 20, 1, 100000, "Uniform")), beam_archive(2));
  EXPECT_LT(r.similarity, 0.70);
  EXPECT_EQ(r.match, MatchClass::None);
  EXPECT_EQ(r.exploration_mode, ExplorationMode::ExploreMax);
  EXPECT_TRUE(r.screening_first);
}

TEST(Cp0, WeakBandIsNeutral) {
  Cp0Params p;
  p.close = 1.01;
  auto r = evaluate_cp0(build_problem_scheme(beam_desc()), beam_archive(1), p);
  EXPECT_EQ(r.match, MatchClass::Weak);
  EXPECT_EQ(r.exploration_mode, ExplorationMode::Neutral);
  EXPECT_TRUE(r.warm_start);
}

TEST(Serialization, ResultAndStateRoundTrip) {
  CheckpointResult r{CpId::CP5, 0.42, 0.35, Verdict::Block, FailureAction::InspectorReject, 2, false};
  EXPECT_EQ(json(r).get<CheckpointResult>(), r);
  ThresholdState st{0.3, 0.31, 0.002, 4, 0.2, 0.29};
  EXPECT_EQ(json(st).get<ThresholdState>(), st);
  EXPECT_EQ(parse_cp_id("CP3"), CpId::CP3);
  EXPECT_THROW(parse_cp_id("CP9"), ParseError);
}
