#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wmeval/grpo.hpp"
#include "wmeval/labeler.hpp"
#include "wmeval/latent_stats.hpp"
#include "wmeval/metrics.hpp"
#include "wmeval/reward.hpp"
#include "wmeval/watermark.hpp"

namespace wmeval {

using json = nlohmann::json;

struct PipelineConfig {
  ScoreThresholds thresholds;
  PsnrNormalization psnr_norm;
  RewardConfig reward;
  GrpoConfig grpo;
  DistortionSet distortions = default_distortions();
  EmbedConfig watermark;
  std::uint64_t seed = 0;

  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const json& j);
PipelineConfig load_config(const std::string& path);
json config_to_json(const PipelineConfig& cfg);

RewardConfig reward_config_from_json(const json& j, RewardConfig base = {});

// Label objects: {"type":"residual","quality","jpeg","gaussian","filter"} or
// {"type":"semantic","quality","security"}, optionally with "category".
// Semantic labels without a category map level 3 to lossless_semantic and
// levels 1-2 to ring_semantic.
GroundTruth ground_truth_from_json(const json& j);
json ground_truth_to_json(const GroundTruth& gt);
json residual_label_json(const ResidualLabel& label);
json semantic_label_json(const SemanticLabel& label);

json breakdown_to_json(const RewardBreakdown& b);
json parsed_to_json(const ParsedResponse& r);
json test_result_to_json(const TestResult& r);

// From {"prediction": {...}} or {"response": "..."}; empty on format failure.
std::optional<ParsedResponse> prediction_from_json(const json& record);

json policy_to_json(const SyntheticPolicy& policy);

// One JSON value per non-blank line; parse errors carry the line number.
std::vector<json> read_jsonl(const std::string& path);
json read_json_file(const std::string& path);

// Looks up a required key and reports which one was missing.
const json& require(const json& j, const char* key);

}  // namespace wmeval
