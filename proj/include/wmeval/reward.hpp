#pragma once

#include <optional>
#include <string_view>
#include <variant>

#include "wmeval/labeler.hpp"
#include "wmeval/response_format.hpp"

namespace wmeval {

struct RewardConfig {
  double format_penalty = -10.0;
  double target_length = 850.0;     // l_gt
  double length_tolerance = 50.0;   // tau_len
  double quality_tolerance = 0.3;   // tau_qual
  LengthUnit length_unit = LengthUnit::kCharacters;

  void validate() const;
};

// Category plus the label variant that matches it.
class GroundTruth {
 public:
  GroundTruth(Category category, ResidualLabel label);
  GroundTruth(Category category, SemanticLabel label);

  Category category() const noexcept { return category_; }
  bool is_residual() const noexcept { return category_ == Category::kResidual; }
  const ResidualLabel& residual() const { return std::get<ResidualLabel>(label_); }
  const SemanticLabel& semantic() const { return std::get<SemanticLabel>(label_); }

 private:
  Category category_;
  std::variant<ResidualLabel, SemanticLabel> label_;
};

struct RewardBreakdown {
  bool format_ok = false;
  std::optional<bool> category_ok;
  std::optional<double> r_len;
  std::optional<double> r_qual;
  std::optional<double> r_sec;
  double total = 0.0;
  std::optional<FormatFailure> format_failure;
};

double length_reward(double length, const RewardConfig& cfg);
double residual_quality_reward(double predicted, double truth, const RewardConfig& cfg);
double residual_security_reward(const SecurityFlags& predicted, const SecurityFlags& truth) noexcept;
double semantic_reward(int predicted_level, int truth_level);

RewardBreakdown total_reward(std::string_view text, const GroundTruth& gt, const RewardConfig& cfg);

// Reward of an already parsed, well-formed response.
RewardBreakdown score_parsed(const ParsedResponse& resp, const GroundTruth& gt, const RewardConfig& cfg);

}  // namespace wmeval
