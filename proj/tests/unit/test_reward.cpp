#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "../support/random_responses.hpp"
#include "../support/template_oracle.hpp"
#include "wmeval/error.hpp"
#include "wmeval/reward.hpp"

using namespace wmeval;

namespace {

// Serialized response padded with think text to exactly `length` characters.
std::string with_length(ParsedResponse r, std::size_t length) {
  r.think = "x";
  const std::size_t base = measure_length(serialize_response(r));
  r.think = std::string(length - base + 1, 'x');
  auto s = serialize_response(r);
  EXPECT_EQ(measure_length(s), length);
  return s;
}

ParsedResponse residual(double q, SecurityFlags f) {
  ParsedResponse r;
  r.think = "t";
  r.residual_quality = q;
  r.flags = f;
  return r;
}

ParsedResponse semantic(Category c, int q, int s) {
  ParsedResponse r;
  r.think = "t";
  r.category = c;
  r.semantic_quality = q;
  r.semantic_security = s;
  return r;
}

const RewardConfig kCfg{};

}  // namespace

TEST(LengthReward, Examples) {
  EXPECT_EQ(length_reward(850, kCfg), 1.0);
  EXPECT_EQ(length_reward(900, kCfg), 0.0);
  EXPECT_EQ(length_reward(800, kCfg), 0.0);
  EXPECT_EQ(length_reward(875, kCfg), 0.5);
  EXPECT_EQ(length_reward(825, kCfg), 0.5);
  EXPECT_EQ(length_reward(1200, kCfg), 0.0);
  EXPECT_EQ(length_reward(0, kCfg), 0.0);
  EXPECT_THROW(length_reward(-1, kCfg), Error);
}

TEST(QualityReward, Examples) {
  EXPECT_EQ(residual_quality_reward(3.4, 3.4, kCfg), 1.0);
  EXPECT_EQ(residual_quality_reward(3.15, 3.0, kCfg), 0.5);
  EXPECT_EQ(residual_quality_reward(2.87, 2.72, kCfg), 0.5);
  EXPECT_EQ(residual_quality_reward(2.57, 2.72, kCfg), 0.5);
  EXPECT_EQ(residual_quality_reward(3.4, 3.0, kCfg), 0.0);
  EXPECT_EQ(residual_quality_reward(3.3, 3.0, kCfg), 0.0);
  EXPECT_EQ(residual_quality_reward(1.0, 5.0, kCfg), 0.0);
}

TEST(QualityReward, ContinuousInsideTolerance) {
  double prev = residual_quality_reward(3.0, 3.0, kCfg);
  for (double v = 3.0; v <= 3.3; v += 1e-4) {
    const double r = residual_quality_reward(v, 3.0, kCfg);
    EXPECT_LE(std::abs(r - prev), 1e-3);
    EXPECT_LE(r, prev + 1e-12);
    prev = r;
  }
}

TEST(SecurityReward, Examples) {
  EXPECT_EQ(residual_security_reward({1, 1, 1}, {1, 1, 1}), 1.0);
  EXPECT_EQ(residual_security_reward({1, 0, 1}, {1, 1, 1}), 2.0 / 3.0);
  EXPECT_EQ(residual_security_reward({0, 1, 0}, {1, 0, 1}), 0.0);
  EXPECT_EQ(residual_security_reward({0, 0, 1}, {1, 0, 1}), 2.0 / 3.0);
}

TEST(SemanticReward, Examples) {
  EXPECT_EQ(semantic_reward(2, 2), 1.0);
  EXPECT_EQ(semantic_reward(1, 3), 0.0);
  EXPECT_EQ(semantic_reward(3, 2), 0.0);
  EXPECT_THROW(semantic_reward(0, 2), Error);
  EXPECT_THROW(semantic_reward(2, 4), Error);
}

TEST(TotalReward, Branches) {
  const GroundTruth gt(Category::kResidual, ResidualLabel{2.72, {1, 1, 1}});
  const auto bad = total_reward("<think>no type</think>", gt, kCfg);
  EXPECT_FALSE(bad.format_ok);
  EXPECT_EQ(bad.total, -10.0);
  EXPECT_FALSE(bad.category_ok || bad.r_len || bad.r_qual || bad.r_sec);
  EXPECT_EQ(bad.format_failure, FormatFailure::kMissingTag);

  const auto wrong = total_reward(with_length(semantic(Category::kLosslessSemantic, 3, 3), 850), gt, kCfg);
  EXPECT_TRUE(wrong.format_ok);
  EXPECT_EQ(wrong.category_ok, false);
  EXPECT_EQ(wrong.total, 0.0);
  EXPECT_FALSE(wrong.r_len || wrong.r_qual || wrong.r_sec);

  const auto best = total_reward(with_length(residual(2.72, {1, 1, 1}), 850), gt, kCfg);
  EXPECT_EQ(best.category_ok, true);
  EXPECT_EQ(best.r_len, 1.0);
  EXPECT_EQ(best.r_qual, 1.0);
  EXPECT_EQ(best.r_sec, 1.0);
  EXPECT_EQ(best.total, 4.0);

  const auto partial = total_reward(with_length(residual(2.87, {1, 0, 1}), 875), gt, kCfg);
  EXPECT_EQ(partial.r_len, 0.5);
  EXPECT_EQ(partial.r_qual, 0.5);
  EXPECT_EQ(partial.r_sec, 2.0 / 3.0);
  EXPECT_EQ(partial.total, 1.0 + 0.5 + 0.5 + 2.0 / 3.0);

  const auto floor = total_reward(with_length(residual(4.0, {0, 0, 0}), 950), gt, kCfg);
  EXPECT_EQ(floor.total, 1.0);
}

TEST(TotalReward, SemanticBranch) {
  const GroundTruth gt(Category::kRingSemantic, SemanticLabel{1, 1});
  const auto exact = total_reward(with_length(semantic(Category::kRingSemantic, 1, 1), 850), gt, kCfg);
  EXPECT_EQ(exact.total, 4.0);
  const auto half = total_reward(with_length(semantic(Category::kRingSemantic, 2, 1), 825), gt, kCfg);
  EXPECT_EQ(half.r_qual, 0.0);
  EXPECT_EQ(half.r_sec, 1.0);
  EXPECT_EQ(half.total, 2.5);
  const auto other = total_reward(with_length(semantic(Category::kLosslessSemantic, 1, 1), 850), gt, kCfg);
  EXPECT_EQ(other.total, 0.0);
}

TEST(TotalReward, TemplateExampleAgainstLabels) {
  std::ifstream in(std::string(WMEVAL_FIXTURE_DIR) + "/responses/residual_example.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  const GroundTruth gt(Category::kResidual, ResidualLabel{2.72, {1, 1, 1}});
  const auto r = total_reward(ss.str(), gt, kCfg);
  // 897 characters: 47 over target
  EXPECT_NEAR(*r.r_len, 3.0 / 50.0, 1e-15);
  EXPECT_NEAR(r.total, 3.0 + 3.0 / 50.0, 1e-15);
}

TEST(TotalReward, WordModeUsesWordCount) {
  RewardConfig words = kCfg;
  words.length_unit = LengthUnit::kWords;
  words.target_length = 10;
  words.length_tolerance = 5;
  const GroundTruth gt(Category::kLosslessSemantic, SemanticLabel{3, 3});
  auto r = semantic(Category::kLosslessSemantic, 3, 3);
  r.think = "one two three";
  const auto text = serialize_response(r);
  ASSERT_EQ(measure_length(text, LengthUnit::kWords), 10u);
  EXPECT_EQ(total_reward(text, gt, words).total, 4.0);
}

TEST(TotalReward, ConfigurablePenalty) {
  RewardConfig cfg = kCfg;
  cfg.format_penalty = -3.0;
  const GroundTruth gt(Category::kResidual, ResidualLabel{3.0, {0, 0, 0}});
  EXPECT_EQ(total_reward("", gt, cfg).total, -3.0);
  cfg.length_tolerance = 0.0;
  EXPECT_THROW(total_reward("", gt, cfg), Error);
}

TEST(TotalReward, MonotoneInLengthDeviation) {
  const GroundTruth gt(Category::kResidual, ResidualLabel{3.0, {1, 0, 1}});
  const auto base = residual(3.1, {1, 1, 1});
  double prev = 1e9;
  for (std::size_t dev = 0; dev <= 80; dev += 4) {
    const double up = total_reward(with_length(base, 850 + dev), gt, kCfg).total;
    const double down = total_reward(with_length(base, 850 - dev), gt, kCfg).total;
    EXPECT_EQ(up, down);
    EXPECT_LE(up, prev);
    prev = up;
  }
}

TEST(TotalReward, MonotoneInQualityErrorAndFlagMismatches) {
  const GroundTruth gt(Category::kResidual, ResidualLabel{3.0, {1, 0, 1}});
  double prev = 1e9;
  for (int c = 300; c <= 350; ++c) {
    const double t = total_reward(with_length(residual(c / 100.0, {1, 0, 1}), 850), gt, kCfg).total;
    EXPECT_LE(t, prev);
    prev = t;
  }
  const std::vector<SecurityFlags> mismatches = {{1, 0, 1}, {0, 0, 1}, {0, 1, 1}, {0, 1, 0}};
  prev = 1e9;
  for (const auto& f : mismatches) {
    const double t = total_reward(with_length(residual(3.0, f), 850), gt, kCfg).total;
    EXPECT_LT(t, prev);
    prev = t;
  }
}

TEST(TotalReward, ReachableValuesOnly) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 20000; ++i) {
    auto r = support::random_valid_response(rng);
    std::string text = with_length(r, 780 + rng() % 140);
    if (rng() % 3 == 0) text = oracle::mutate(text, rng);
    const GroundTruth gt = rng() % 2 ? GroundTruth(Category::kResidual,
                                                   ResidualLabel{1.0 + (rng() % 4001) / 1000.0,
                                                                 {static_cast<std::uint8_t>(rng() % 2), 1, 0}})
                                     : GroundTruth(static_cast<Category>(1 + rng() % 2),
                                                   SemanticLabel{1 + static_cast<int>(rng() % 3), 2});
    const double t = total_reward(text, gt, kCfg).total;
    EXPECT_TRUE(t == -10.0 || t == 0.0 || (t >= 1.0 && t <= 4.0)) << t;
    EXPECT_EQ(total_reward(text, gt, kCfg).total, t);
  }
}

TEST(GroundTruth, VariantMustMatchCategory) {
  EXPECT_THROW(GroundTruth(Category::kRingSemantic, ResidualLabel{}), Error);
  EXPECT_THROW(GroundTruth(Category::kResidual, SemanticLabel{}), Error);
  EXPECT_THROW(GroundTruth(Category::kResidual, ResidualLabel{5.5, {}}), Error);
  EXPECT_THROW(GroundTruth(Category::kLosslessSemantic, SemanticLabel{0, 1}), Error);
}
