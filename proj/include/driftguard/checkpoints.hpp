#pragma once

#include <array>
#include <optional>
#include <string>

#include "driftguard/archive.hpp"
#include "driftguard/embedding.hpp"
#include "driftguard/schemes.hpp"

namespace driftguard {

enum class CpId { CP0, CP1, CP2, CP3, CP4, CP5, CP6, CP7 };
enum class FailureAction {
  RepromptCoordinator,
  CriticReject,
  WarnStudyAgent,
  StudyAgentRetry,
  InspectorReject,
  WarnAdvisor,
  WarnStrategist,
  NeutralWarmStart
};
enum class Verdict { Pass, Block, Warn };

std::string to_string(CpId id);
std::string to_string(FailureAction a);
std::string to_string(Verdict v);
CpId parse_cp_id(std::string_view s);
FailureAction parse_failure_action(std::string_view s);
Verdict parse_verdict(std::string_view s);

struct CheckpointSpec {
  CpId id = CpId::CP1;
  std::string upstream;
  std::string downstream;
  bool blocking = true;
  bool inverted = false;
  double theta0 = 0.3;
  double theta_min = 0.2;
  bool adaptive = true;
  bool enabled = true;
  FailureAction on_failure = FailureAction::CriticReject;
};

// Built-in table of the eight checkpoints, indexed by CpId.
const std::array<CheckpointSpec, 8>& default_checkpoint_specs();

struct AdaptiveParams {
  double decay = 0.8;
  int warmup = 3;
  double cap_margin = 0.10;
  double std_multiplier = 1.0;
};

struct ThresholdState {
  double theta0 = 0.0;
  double ema_mean = 0.0;
  double ema_var = 0.0;
  int count = 0;
  double floor = 0.0;
  double current = 0.0;
  bool operator==(const ThresholdState&) const = default;
};

// floor = max(theta_min, null_quantile); current starts at max(theta0, floor).
ThresholdState init_threshold(const CheckpointSpec& spec, double null_quantile);

ThresholdState update_threshold(const ThresholdState& st, double observed, const AdaptiveParams& p = {});

struct CheckpointResult {
  CpId cp_id = CpId::CP1;
  double similarity = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::Pass;
  std::optional<FailureAction> failure_action;
  int retry_count = 0;
  bool novelty_flag = false;
  bool operator==(const CheckpointResult&) const = default;
};

// A negative theta0 marks an ablated checkpoint: it passes unconditionally.
bool is_ablated(const CheckpointSpec& spec);

CheckpointResult evaluate(const CheckpointSpec& spec, const std::string& upstream_text,
                          const std::string& downstream_text, const ThresholdState& st,
                          const EmbeddingProvider& provider = default_embedder());

// Verdict from a precomputed similarity.
CheckpointResult evaluate_similarity(const CheckpointSpec& spec, double similarity, const ThresholdState& st);

struct Cp0Params {
  double close = 0.90;
  double weak = 0.70;
  SimilarityWeights weights;
};

struct Cp0Result {
  double similarity = 0.0;
  MatchClass match = MatchClass::None;
  std::optional<ArchiveEntry> warm_start;
  ExplorationMode exploration_mode = ExplorationMode::ExploreMax;
  bool screening_first = false;
};

Cp0Result evaluate_cp0(const ProblemScheme& ps, const Archive& archive, const Cp0Params& p = {});

void to_json(json& j, const CheckpointResult& r);
void from_json(const json& j, CheckpointResult& r);
void to_json(json& j, const ThresholdState& s);
void from_json(const json& j, ThresholdState& s);

}  // namespace driftguard
