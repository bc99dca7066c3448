#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "driftguard/experiment.hpp"
#include "driftguard/metrics.hpp"
#include "test_util.hpp"

using namespace driftguard;
using driftguard::testing::make_desc;
using driftguard::testing::sa_action;

namespace {

// H(A) + H(O) - H(A, O) from raw counts.
double entropy_mi(const std::vector<std::pair<std::string, int>>& s) {
  std::map<std::string, double> pa;
  std::map<int, double> po;
  std::map<std::pair<std::string, int>, double> pj;
  for (auto& x : s) {
    pa[x.first] += 1;
    po[x.second] += 1;
    pj[x] += 1;
  }
  auto h = [&](auto& m) {
    double out = 0;
    for (auto& [k, c] : m) {
      double p = c / double(s.size());
      out -= p * std::log2(p);
    }
    return out;
  };
  return h(pa) + h(po) - h(pj);
}

SessionTrace trace_with(const std::vector<std::pair<std::string, double>>& steps) {
  SessionTrace t;
  t.problem = build_problem_scheme(make_desc("g_function_8", 8, 1, 20000, "Uniform"));
  int n = 0;
  for (auto& [est, r] : steps) {
    IterationRecord rec;
    rec.n = ++n;
    rec.action = sa_action(est);
    rec.executed = true;
    rec.reward.total = r;
    t.records.push_back(rec);
  }
  return t;
}

}  // namespace

TEST(Binning, EdgesAndClamping) {
  OutcomeBinning b;
  EXPECT_EQ(b.bin_of(0.0), 0);
  EXPECT_EQ(b.bin_of(9.99), 0);
  EXPECT_EQ(b.bin_of(10.0), 1);
  EXPECT_EQ(b.bin_of(100.0), 9);
  EXPECT_EQ(b.bin_of(-5.0), 0);
  EXPECT_EQ(b.bin_of(120.0), 9);
}

TEST(Empowerment, UniformBijectionIsOneBit) {
  std::vector<ActionOutcome> s;
  for (int k = 0; k < 50; ++k) {
    s.push_back({"x", "Sobol", 95});
    s.push_back({"x", "Chatterjee", 35});
  }
  auto e = estimate_empowerment(s);
  EXPECT_NEAR(e.mi_bits, 1.0, 1e-12);
  EXPECT_EQ(e.action_support, 2);
  EXPECT_EQ(e.n_samples, 100);
}

TEST(Empowerment, SingleActionIsZero) {
  std::vector<ActionOutcome> s;
  for (int k = 0; k < 40; ++k) s.push_back({"x", "Sobol", double(k * 2)});
  EXPECT_DOUBLE_EQ(estimate_empowerment(s).mi_bits, 0.0);
}

TEST(Empowerment, IndependentOutcomeNearZeroAt500Samples) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> r(0, 100);
  std::vector<ActionOutcome> s;
  for (int k = 0; k < 500; ++k) s.push_back({"x", rng() % 2 ? "Sobol" : "Chatterjee", r(rng)});
  EXPECT_LE(estimate_empowerment(s).mi_bits, 0.05);
}

TEST(Empowerment, EmptyInputRaisesNoData) {
  EXPECT_THROW(estimate_empowerment(std::vector<SessionTrace>{}), NoData);
  EXPECT_THROW(estimate_empowerment(std::vector<ActionOutcome>{}), NoData);
}

TEST(Empowerment, PluginMatchesEntropyIdentity) {
  std::mt19937_64 rng(4);
  const char* acts[] = {"Sobol", "Chatterjee", "CVM", "Morris"};
  for (int t = 0; t < 100; ++t) {
    std::vector<std::pair<std::string, int>> s;
    int n = 1 + int(rng() % 200);
    int na = 1 + int(rng() % 4), nb = 1 + int(rng() % 10);
    for (int k = 0; k < n; ++k) s.push_back({acts[rng() % na], int(rng() % nb)});
    double mi = plugin_mi_bits(s);
    EXPECT_NEAR(mi, entropy_mi(s), 1e-9);
    EXPECT_GE(mi, -1e-12);
    std::set<std::string> as;
    std::set<int> os;
    for (auto& x : s) {
      as.insert(x.first);
      os.insert(x.second);
    }
    EXPECT_LE(mi, std::log2(double(std::min(as.size(), os.size()))) + 1e-9);
  }
}

TEST(Empowerment, MergingBinsNeverIncreasesInformation) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0, 12);
  for (int t = 0; t < 30; ++t) {
    std::vector<std::pair<std::string, double>> raw;
    for (int k = 0; k < 300; ++k) {
      bool a = rng() % 2;
      raw.push_back({a ? "Sobol" : "Chatterjee", std::clamp((a ? 75.0 : 45.0) + noise(rng), 0.0, 100.0)});
    }
    double prev = INFINITY;
    for (int bins : {20, 10, 5, 2, 1}) {
      std::vector<std::pair<std::string, int>> s;
      OutcomeBinning b{bins, 0, 100};
      // Coarser bins here are unions of finer ones because each bin count divides the next.
      for (auto& [a, r] : raw) s.push_back({a, b.bin_of(r)});
      double mi = plugin_mi_bits(s);
      EXPECT_LE(mi, prev + 1e-12) << bins;
      prev = mi;
    }
    EXPECT_NEAR(prev, 0.0, 1e-12);
  }
}

TEST(Empowerment, ConditionsOnContextDigest) {
  std::vector<ActionOutcome> s;
  // Within each context the outcome is fixed, but the contexts differ, so pooling invents information.
  for (int k = 0; k < 20; ++k) {
    s.push_back({"c1", "Sobol", 95});
    s.push_back({"c2", "Chatterjee", 15});
  }
  auto e = estimate_empowerment(s);
  EXPECT_DOUBLE_EQ(e.mi_bits, 0.0);
  EXPECT_NEAR(e.pooled_bits, 1.0, 1e-12);
  EXPECT_EQ(e.per_context_bits.size(), 2u);
}

TEST(Empowerment, TracesUsePolicyActionAndRewardTotal) {
  std::vector<SessionTrace> ts{trace_with({{"Sobol", 95}, {"Chatterjee", 35}}),
                               trace_with({{"Chatterjee", 35}, {"Sobol", 95}})};
  auto e = estimate_empowerment(ts);
  EXPECT_EQ(e.n_traces, 2);
  EXPECT_EQ(e.n_samples, 4);
  EXPECT_NEAR(e.mi_bits, 1.0, 1e-12);
}

TEST(Empowerment, CheckpointsPreserveInformationDriftDestroysIt) {
  auto exp = load_experiment(std::string(DRIFTGUARD_CONFIG_DIR) + "/empowerment.json");
  auto run = [&](std::vector<DriftSpec> drifts, bool ablate) {
    auto cfg = exp.session;
    cfg.drifts = std::move(drifts);
    if (ablate) ablate_all_checkpoints(cfg);
    std::vector<SessionTrace> traces;
    int records = 0;
    for (std::uint64_t seed = 1; records < 500; ++seed) {
      cfg.seed = seed;
      Archive a;
      traces.push_back(run_session(cfg, exp.problem, a));
      records += int(traces.back().records.size());
    }
    return estimate_empowerment(traces);
  };
  DriftSpec uniform{DriftKind::MethodSwap, "method", "uniform", std::nullopt, 1.0, std::nullopt, "refactor_agent"};
  auto clean = run({}, false);
  EXPECT_GE(clean.n_samples, 500);
  EXPECT_GT(clean.mi_bits, 0.5);
  auto guarded = run({uniform}, false);
  EXPECT_GT(guarded.mi_bits, 0.5);
  auto drifted = run({uniform}, true);
  EXPECT_GE(drifted.n_samples, 500);
  EXPECT_LT(drifted.mi_bits, 0.05);
}

TEST(PathDependence, NormalizedVarianceArithmetic) {
  EXPECT_NEAR(normalized_variance({80, 90}), 25.0 / 7225.0, 1e-15);
  EXPECT_DOUBLE_EQ(normalized_variance({70, 70, 70}), 0.0);
}

TEST(PathDependence, IdenticalStartsScoreZero) {
  StartRunner flat = [](const std::string&, std::uint64_t) -> std::optional<double> { return 88.0; };
  auto p = path_dependence(flat, {"Sobol", "Chatterjee", "CVM"}, {1, 2, 3});
  EXPECT_DOUBLE_EQ(p.score, 0.0);
  EXPECT_EQ(p.per_start_best_rewards.at("CVM").size(), 3u);
}

TEST(PathDependence, ScoreFromPerStartMeans) {
  StartRunner runner = [](const std::string& s, std::uint64_t seed) -> std::optional<double> {
    return s == "Sobol" ? 90.0 + (seed % 2 ? 5 : -5) : 80.0;
  };
  auto p = path_dependence(runner, {"Sobol", "Chatterjee"}, {1, 2});
  EXPECT_NEAR(p.score, 25.0 / 7225.0, 1e-15);
}

TEST(PathDependence, InfeasibleStartSkipped) {
  StartRunner runner = [](const std::string& s, std::uint64_t) -> std::optional<double> {
    if (s == "Morris") return std::nullopt;
    return 70.0;
  };
  auto p = path_dependence(runner, {"Morris", "Sobol"}, {1});
  EXPECT_EQ(p.skipped, (std::vector<std::string>{"Morris"}));
  EXPECT_FALSE(p.per_start_best_rewards.count("Morris"));
}

TEST(PathDependence, EmptySeedsRaiseNoData) {
  StartRunner runner = [](const std::string&, std::uint64_t) -> std::optional<double> { return 1.0; };
  EXPECT_THROW(path_dependence(runner, {"Sobol"}, {}), NoData);
}

TEST(PathDependence, SessionRunnerPinsFirstIteration) {
  SessionConfig cfg;
  cfg.environment.kind = "simulated";
  cfg.environment.means = {{"Sobol", 90}, {"Chatterjee", 60}};
  auto desc = make_desc("cantilever_beam", 4, 1, 20000, "Normal");
  auto runner = session_runner(cfg, desc);
  EXPECT_FALSE(runner("Morris", 1).has_value());
  auto best = runner("Chatterjee", 1);
  ASSERT_TRUE(best);
  EXPECT_GE(*best, 60.0);
}

TEST(Regret, PrefixSums) {
  EXPECT_EQ(regret_curve(std::vector<double>{80, 90, 100}, 100), (std::vector<double>{20, 30, 30}));
  EXPECT_TRUE(regret_curve(std::vector<double>{}, 100).empty());
  EXPECT_EQ(regret_curve(trace_with({{"Sobol", 60}, {"Sobol", 70}}), 90), (std::vector<double>{30, 50}));
}

TEST(Regret, NonDecreasingWhenOptimumDominates) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> r(0, 100);
  std::vector<double> rewards(50);
  for (auto& x : rewards) x = r(rng);
  auto c = regret_curve(rewards, 100);
  EXPECT_EQ(c.size(), rewards.size());
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
}
