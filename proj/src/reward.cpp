#include "wmeval/reward.hpp"

#include <cmath>

#include "wmeval/error.hpp"

namespace wmeval {

namespace {

// 1 - |d|/tol inside the tolerance (boundary included, where it is 0), else 0.
double linear_window(double deviation, double tolerance) {
  const double d = std::abs(deviation);
  return d <= tolerance ? 1.0 - d / tolerance : 0.0;
}

// Decimal qualities such as 3.15 - 3.00 carry binary representation noise;
// deviations within 1e-9 of a hundredth are treated as that hundredth.
double snap_hundredths(double d) {
  const double grid = std::round(d * 100.0) / 100.0;
  return std::abs(d - grid) < 1e-9 ? grid : d;
}

}  // namespace

void RewardConfig::validate() const {
  if (!(length_tolerance > 0.0)) throw Error(ErrorKind::kParameter, "length_tolerance must be positive");
  if (!(quality_tolerance > 0.0)) throw Error(ErrorKind::kParameter, "quality_tolerance must be positive");
  if (!std::isfinite(format_penalty) || !std::isfinite(target_length) || target_length < 0.0) {
    throw Error(ErrorKind::kParameter, "format_penalty and target_length must be finite, target_length >= 0");
  }
}

GroundTruth::GroundTruth(Category category, ResidualLabel label) : category_(category), label_(label) {
  if (category != Category::kResidual) {
    throw Error(ErrorKind::kInvariant, "residual label given for a semantic category");
  }
  if (!(label.quality >= 1.0 && label.quality <= 5.0)) {
    throw Error(ErrorKind::kInvariant, "residual quality label outside [1,5]");
  }
  const auto& s = label.security;
  if (s.jpeg > 1 || s.gaussian > 1 || s.filter > 1) throw Error(ErrorKind::kInvariant, "security flags must be 0/1");
}

GroundTruth::GroundTruth(Category category, SemanticLabel label) : category_(category), label_(label) {
  if (category == Category::kResidual) {
    throw Error(ErrorKind::kInvariant, "semantic label given for the residual category");
  }
  if (label.quality < 1 || label.quality > 3 || label.security < 1 || label.security > 3) {
    throw Error(ErrorKind::kInvariant, "semantic levels must be in {1,2,3}");
  }
}

double length_reward(double length, const RewardConfig& cfg) {
  if (length < 0.0) throw Error(ErrorKind::kParameter, "length must be non-negative");
  return linear_window(length - cfg.target_length, cfg.length_tolerance);
}

double residual_quality_reward(double predicted, double truth, const RewardConfig& cfg) {
  return linear_window(snap_hundredths(predicted - truth), cfg.quality_tolerance);
}

double residual_security_reward(const SecurityFlags& p, const SecurityFlags& t) noexcept {
  const int hits = (p.jpeg == t.jpeg) + (p.gaussian == t.gaussian) + (p.filter == t.filter);
  return hits / 3.0;
}

double semantic_reward(int predicted_level, int truth_level) {
  if (predicted_level < 1 || predicted_level > 3 || truth_level < 1 || truth_level > 3) {
    throw Error(ErrorKind::kParameter, "semantic levels must be in {1,2,3}");
  }
  return predicted_level == truth_level ? 1.0 : 0.0;
}

RewardBreakdown score_parsed(const ParsedResponse& resp, const GroundTruth& gt, const RewardConfig& cfg) {
  RewardBreakdown out;
  out.format_ok = true;
  if (resp.category != gt.category()) {
    out.category_ok = false;
    out.total = 0.0;
    return out;
  }
  out.category_ok = true;
  out.r_len = length_reward(static_cast<double>(resp.raw_length), cfg);
  if (gt.is_residual()) {
    out.r_qual = residual_quality_reward(*resp.residual_quality, gt.residual().quality, cfg);
    out.r_sec = residual_security_reward(*resp.flags, gt.residual().security);
  } else {
    out.r_qual = semantic_reward(*resp.semantic_quality, gt.semantic().quality);
    out.r_sec = semantic_reward(*resp.semantic_security, gt.semantic().security);
  }
  // The leading 1 is the category reward; a correct format contributes 0.
  out.total = 1.0 + *out.r_len + *out.r_qual + *out.r_sec;
  return out;
}

RewardBreakdown total_reward(std::string_view text, const GroundTruth& gt, const RewardConfig& cfg) {
  cfg.validate();
  auto parsed = parse_response(text, cfg.length_unit);
  if (const auto* verdict = std::get_if<FormatVerdict>(&parsed)) {
    RewardBreakdown out;
    out.format_ok = false;
    out.total = cfg.format_penalty;
    out.format_failure = verdict->reason;
    return out;
  }
  return score_parsed(std::get<ParsedResponse>(parsed), gt, cfg);
}

}  // namespace wmeval
