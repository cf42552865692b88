#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wmeval/reward.hpp"

namespace wmeval {

// Factors of the synthetic response policy. A sampled response activates
// kFormat and kLength always; a well-formed one adds kCategory and the
// factors of its template (quality bucket + three flags, or the two levels).
enum Factor : int {
  kFormatFactor,
  kCategoryFactor,
  kQualityFactor,
  kJpegFactor,
  kGaussianFactor,
  kFilterFactor,
  kSemQualityFactor,
  kSemSecurityFactor,
  kLengthFactor,
  kFactorCount,
};

const char* factor_name(int factor) noexcept;

struct PolicyGrid {
  std::vector<double> quality;  // residual quality buckets on [1, 5]
  std::vector<int> length;      // response lengths in characters

  // 41 quality points at 0.1 spacing; lengths 700..1000 step 10.
  static PolicyGrid standard();
  std::size_t factor_size(int factor) const;
  std::size_t nearest_quality(double q) const;
  std::size_t nearest_length(double l) const;

  friend bool operator==(const PolicyGrid&, const PolicyGrid&) = default;
};

class SyntheticPolicy {
 public:
  // Uniform policy (all logits zero).
  explicit SyntheticPolicy(PolicyGrid grid = PolicyGrid::standard());

  const PolicyGrid& grid() const noexcept { return grid_; }
  std::span<const double> logits(int factor) const { return logits_[factor]; }
  std::span<double> logits(int factor) { return logits_[factor]; }
  std::vector<double> probabilities(int factor) const;
  std::vector<double> log_probabilities(int factor) const;

  // Flattened view of every logit, factor-major; used by gradient code.
  std::vector<double> flat() const;
  void set_flat(std::span<const double> values);
  std::size_t parameter_count() const;

  friend bool operator==(const SyntheticPolicy&, const SyntheticPolicy&) = default;

 private:
  PolicyGrid grid_;
  std::array<std::vector<double>, kFactorCount> logits_;
};

struct SampledResponse {
  std::array<int, kFactorCount> choice{};
  std::array<bool, kFactorCount> active{};
};

struct GrpoConfig {
  int group_size = 8;
  double clip_eps = 0.2;
  double kl_coeff = 0.01;
  double learning_rate = 0.1;
  int iterations = 2000;
  std::uint64_t seed = 0;
  double max_grad_norm = 1.0;  // <= 0 disables clipping

  void validate() const;
};

struct GroupRollout {
  std::vector<SampledResponse> responses;
  std::vector<std::string> texts;
  std::vector<double> old_logprobs;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

struct StepDiagnostics {
  double mean_reward = 0.0;
  double kl = 0.0;  // to the reference, after the update
  double format_rate = 0.0;
  double category_rate = 0.0;
  double grad_norm = 0.0;  // before clipping
};

struct StepResult {
  SyntheticPolicy policy;
  GroupRollout rollout;
  StepDiagnostics diagnostics;
};

struct CurvePoint {
  int iteration = 0;
  double mean_reward = 0.0;
  double kl = 0.0;
  double format_rate = 0.0;
  double category_rate = 0.0;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  SyntheticPolicy policy;
};

inline constexpr double kAdvantageGuard = 1e-8;

// Group-standardized rewards with population sigma; all zeros when sigma < guard.
std::vector<double> group_advantages(std::span<const double> rewards);

double clipped_surrogate(double ratio, double advantage, double eps);

double kl_divergence(const SyntheticPolicy& policy, const SyntheticPolicy& reference);

double sequence_log_prob(const SyntheticPolicy& policy, const SampledResponse& response);
SampledResponse sample_response(const SyntheticPolicy& policy, std::mt19937_64& rng);

// Text whose parse reproduces the sampled fields and whose character count
// equals the sampled length bucket. Malformed samples drop the </type> tag.
std::string render_response(const SampledResponse& response, const PolicyGrid& grid);

// Maps a raw response onto factor choices (format failures keep only the length).
SampledResponse encode_response(std::string_view text, const PolicyGrid& grid);

// (1/G) sum_k L_clip^k - beta * KL(policy || reference), for a fixed rollout.
double grpo_objective(const SyntheticPolicy& policy, const GroupRollout& rollout,
                      const SyntheticPolicy& reference, const GrpoConfig& cfg);
// Gradient of grpo_objective with respect to policy.flat().
std::vector<double> grpo_gradient(const SyntheticPolicy& policy, const GroupRollout& rollout,
                                  const SyntheticPolicy& reference, const GrpoConfig& cfg);

GroupRollout collect_rollout(const SyntheticPolicy& old_policy, const GroundTruth& gt, const GrpoConfig& cfg,
                             const RewardConfig& reward_cfg, std::mt19937_64& rng);

StepResult grpo_step(const SyntheticPolicy& policy, const SyntheticPolicy& old_policy,
                     const SyntheticPolicy& reference, const GroundTruth& gt, const GrpoConfig& cfg,
                     const RewardConfig& reward_cfg, std::mt19937_64& rng);

// Reference policy = start; the old policy is refreshed from the current one
// every iteration. Items are visited round-robin.
TrainResult train(std::span<const GroundTruth> items, const SyntheticPolicy& start, const GrpoConfig& cfg,
                  const RewardConfig& reward_cfg);

// Smoothed (alpha = 1) empirical factor frequencies of the encoded dataset.
SyntheticPolicy mle_warm_start(std::span<const std::string> dataset, PolicyGrid grid = PolicyGrid::standard());

// Synthetic demonstration set: `n` rendered responses with uniformly drawn
// categories, scores and lengths, of which round(n * format_ok_rate) are
// well-formed (the rest are malformed at random positions).
std::vector<std::string> synthetic_dataset(std::size_t n, double format_ok_rate, std::uint64_t seed,
                                           const PolicyGrid& grid = PolicyGrid::standard());

// -sum_i log pi(o_i) over the encoded dataset.
double dataset_nll(const SyntheticPolicy& policy, std::span<const std::string> dataset);

}  // namespace wmeval
