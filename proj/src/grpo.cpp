#include "wmeval/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wmeval/error.hpp"

namespace wmeval {

namespace {

std::vector<double> log_softmax(std::span<const double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  const double lse = zmax + std::log(sum);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

std::vector<double> softmax(std::span<const double> z) {
  auto out = log_softmax(z);
  for (auto& v : out) v = std::exp(v);
  return out;
}

int sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

std::vector<std::size_t> factor_offsets(const SyntheticPolicy& policy) {
  std::vector<std::size_t> offsets(kFactorCount + 1, 0);
  for (int f = 0; f < kFactorCount; ++f) offsets[f + 1] = offsets[f] + policy.logits(f).size();
  return offsets;
}

// Filler for the think block: exactly `count` scalars, no surrounding whitespace.
std::string filler_text(std::size_t count) {
  static constexpr std::string_view kPhrase = "texture and frequency residue inspected ";
  std::string out;
  out.reserve(count);
  while (out.size() < count) out.push_back(kPhrase[out.size() % kPhrase.size()]);
  if (!out.empty()) {
    out.front() = 'T';
    if (out.back() == ' ') out.back() = '.';
  }
  return out;
}

void check_rollout(const GroupRollout& rollout) {
  const auto g = rollout.responses.size();
  if (rollout.old_logprobs.size() != g || rollout.advantages.size() != g || g == 0) {
    throw Error(ErrorKind::kInvariant, "rollout arrays must be non-empty and of equal length");
  }
}

}  // namespace

const char* factor_name(int factor) noexcept {
  switch (factor) {
    case kFormatFactor: return "format_ok";
    case kCategoryFactor: return "category";
    case kQualityFactor: return "residual_quality";
    case kJpegFactor: return "jpeg";
    case kGaussianFactor: return "gaussian";
    case kFilterFactor: return "filter";
    case kSemQualityFactor: return "semantic_quality";
    case kSemSecurityFactor: return "semantic_security";
    case kLengthFactor: return "length";
    default: return "unknown";
  }
}

PolicyGrid PolicyGrid::standard() {
  PolicyGrid grid;
  for (int i = 0; i <= 40; ++i) grid.quality.push_back((100 + 10 * i) / 100.0);
  for (int l = 700; l <= 1000; l += 10) grid.length.push_back(l);
  return grid;
}

std::size_t PolicyGrid::factor_size(int factor) const {
  switch (factor) {
    case kFormatFactor: return 2;
    case kCategoryFactor: return 3;
    case kQualityFactor: return quality.size();
    case kJpegFactor:
    case kGaussianFactor:
    case kFilterFactor: return 2;
    case kSemQualityFactor:
    case kSemSecurityFactor: return 3;
    case kLengthFactor: return length.size();
    default: throw Error(ErrorKind::kParameter, "unknown policy factor");
  }
}

std::size_t PolicyGrid::nearest_quality(double q) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < quality.size(); ++i) {
    if (std::abs(quality[i] - q) < std::abs(quality[best] - q)) best = i;
  }
  return best;
}

std::size_t PolicyGrid::nearest_length(double l) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < length.size(); ++i) {
    if (std::abs(length[i] - l) < std::abs(length[best] - l)) best = i;
  }
  return best;
}

SyntheticPolicy::SyntheticPolicy(PolicyGrid grid) : grid_(std::move(grid)) {
  if (grid_.quality.empty() || grid_.length.empty()) {
    throw Error(ErrorKind::kParameter, "policy grid needs at least one quality and one length bucket");
  }
  for (int f = 0; f < kFactorCount; ++f) logits_[f].assign(grid_.factor_size(f), 0.0);
}

std::vector<double> SyntheticPolicy::probabilities(int factor) const { return softmax(logits_[factor]); }
std::vector<double> SyntheticPolicy::log_probabilities(int factor) const { return log_softmax(logits_[factor]); }

std::vector<double> SyntheticPolicy::flat() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : logits_) out.insert(out.end(), l.begin(), l.end());
  return out;
}

void SyntheticPolicy::set_flat(std::span<const double> values) {
  if (values.size() != parameter_count()) throw Error(ErrorKind::kParameter, "flat logit vector has wrong size");
  std::size_t k = 0;
  for (auto& l : logits_) {
    for (auto& v : l) v = values[k++];
  }
}

std::size_t SyntheticPolicy::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : logits_) n += l.size();
  return n;
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw Error(ErrorKind::kParameter, "group_size must be >= 2");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw Error(ErrorKind::kParameter, "clip_eps must be in (0,1)");
  if (!(kl_coeff >= 0.0)) throw Error(ErrorKind::kParameter, "kl_coeff must be >= 0");
  if (!(learning_rate >= 0.0)) throw Error(ErrorKind::kParameter, "learning_rate must be >= 0");
  if (iterations < 0) throw Error(ErrorKind::kParameter, "iterations must be >= 0");
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw Error(ErrorKind::kParameter, "group_advantages needs at least 2 rewards");
  const auto g = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / g;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sigma = std::sqrt(var / g);
  std::vector<double> adv(rewards.size(), 0.0);
  if (sigma < kAdvantageGuard) return adv;
  for (std::size_t k = 0; k < rewards.size(); ++k) adv[k] = (rewards[k] - mean) / sigma;
  return adv;
}

double clipped_surrogate(double ratio, double advantage, double eps) {
  if (!(ratio > 0.0)) throw Error(ErrorKind::kParameter, "importance ratio must be positive");
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

double kl_divergence(const SyntheticPolicy& policy, const SyntheticPolicy& reference) {
  double total = 0.0;
  for (int f = 0; f < kFactorCount; ++f) {
    if (policy.logits(f).size() != reference.logits(f).size()) {
      throw Error(ErrorKind::kParameter, "policies have different factor sizes");
    }
    const auto lp = policy.log_probabilities(f);
    const auto lq = reference.log_probabilities(f);
    double kl = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i) kl += std::exp(lp[i]) * (lp[i] - lq[i]);
    total += std::max(kl, 0.0);
  }
  return total;
}

double sequence_log_prob(const SyntheticPolicy& policy, const SampledResponse& response) {
  double lp = 0.0;
  for (int f = 0; f < kFactorCount; ++f) {
    if (response.active[f]) lp += policy.log_probabilities(f)[response.choice[f]];
  }
  return lp;
}

SampledResponse sample_response(const SyntheticPolicy& policy, std::mt19937_64& rng) {
  SampledResponse s;
  auto draw = [&](int f) {
    s.active[f] = true;
    s.choice[f] = sample_index(policy.probabilities(f), rng);
  };
  draw(kFormatFactor);
  draw(kLengthFactor);
  if (s.choice[kFormatFactor] == 1) {
    draw(kCategoryFactor);
    if (static_cast<Category>(s.choice[kCategoryFactor]) == Category::kResidual) {
      draw(kQualityFactor);
      draw(kJpegFactor);
      draw(kGaussianFactor);
      draw(kFilterFactor);
    } else {
      draw(kSemQualityFactor);
      draw(kSemSecurityFactor);
    }
  }
  return s;
}

std::string render_response(const SampledResponse& response, const PolicyGrid& grid) {
  const auto target = static_cast<std::size_t>(grid.length.at(response.choice[kLengthFactor]));
  if (response.choice[kFormatFactor] == 0) {
    const std::string tail =
        "</think>\n<type>residual watermark\n<quality>3.00</quality>\n<jpeg>1</jpeg>\n<gaussian>1</gaussian>\n"
        "<filter>1</filter>";
    const std::size_t overhead = measure_length("<think>") + measure_length(tail);
    return "<think>" + filler_text(target > overhead ? target - overhead : 1) + tail;
  }
  ParsedResponse resp;
  resp.think = "x";
  resp.category = static_cast<Category>(response.choice[kCategoryFactor]);
  if (resp.category == Category::kResidual) {
    resp.residual_quality = grid.quality.at(response.choice[kQualityFactor]);
    resp.flags = SecurityFlags{static_cast<std::uint8_t>(response.choice[kJpegFactor]),
                               static_cast<std::uint8_t>(response.choice[kGaussianFactor]),
                               static_cast<std::uint8_t>(response.choice[kFilterFactor])};
  } else {
    resp.semantic_quality = response.choice[kSemQualityFactor] + 1;
    resp.semantic_security = response.choice[kSemSecurityFactor] + 1;
  }
  const std::size_t overhead = measure_length(serialize_response(resp)) - 1;
  resp.think = filler_text(target > overhead ? target - overhead : 1);
  return serialize_response(resp);
}

SampledResponse encode_response(std::string_view text, const PolicyGrid& grid) {
  SampledResponse s;
  s.active[kFormatFactor] = true;
  s.active[kLengthFactor] = true;
  s.choice[kLengthFactor] = static_cast<int>(grid.nearest_length(static_cast<double>(measure_length(text))));
  const auto parsed = parse_response(text);
  const auto* resp = std::get_if<ParsedResponse>(&parsed);
  if (resp == nullptr) {
    s.choice[kFormatFactor] = 0;
    return s;
  }
  s.choice[kFormatFactor] = 1;
  s.active[kCategoryFactor] = true;
  s.choice[kCategoryFactor] = static_cast<int>(resp->category);
  if (resp->category == Category::kResidual) {
    for (int f : {kQualityFactor, kJpegFactor, kGaussianFactor, kFilterFactor}) s.active[f] = true;
    s.choice[kQualityFactor] = static_cast<int>(grid.nearest_quality(*resp->residual_quality));
    s.choice[kJpegFactor] = resp->flags->jpeg;
    s.choice[kGaussianFactor] = resp->flags->gaussian;
    s.choice[kFilterFactor] = resp->flags->filter;
  } else {
    s.active[kSemQualityFactor] = true;
    s.active[kSemSecurityFactor] = true;
    s.choice[kSemQualityFactor] = *resp->semantic_quality - 1;
    s.choice[kSemSecurityFactor] = *resp->semantic_security - 1;
  }
  return s;
}

double grpo_objective(const SyntheticPolicy& policy, const GroupRollout& rollout,
                      const SyntheticPolicy& reference, const GrpoConfig& cfg) {
  check_rollout(rollout);
  double surrogate = 0.0;
  for (std::size_t k = 0; k < rollout.responses.size(); ++k) {
    const double ratio = std::exp(sequence_log_prob(policy, rollout.responses[k]) - rollout.old_logprobs[k]);
    surrogate += clipped_surrogate(ratio, rollout.advantages[k], cfg.clip_eps);
  }
  surrogate /= static_cast<double>(rollout.responses.size());
  return surrogate - cfg.kl_coeff * kl_divergence(policy, reference);
}

std::vector<double> grpo_gradient(const SyntheticPolicy& policy, const GroupRollout& rollout,
                                  const SyntheticPolicy& reference, const GrpoConfig& cfg) {
  check_rollout(rollout);
  const auto offsets = factor_offsets(policy);
  std::vector<double> grad(offsets.back(), 0.0);
  std::array<std::vector<double>, kFactorCount> probs;
  for (int f = 0; f < kFactorCount; ++f) probs[f] = policy.probabilities(f);

  const auto g = static_cast<double>(rollout.responses.size());
  for (std::size_t k = 0; k < rollout.responses.size(); ++k) {
    const auto& resp = rollout.responses[k];
    const double adv = rollout.advantages[k];
    if (adv == 0.0) continue;
    const double ratio = std::exp(sequence_log_prob(policy, resp) - rollout.old_logprobs[k]);
    // The clipped branch is the minimum (and constant) exactly in these regions.
    const bool clipped = (adv > 0.0 && ratio > 1.0 + cfg.clip_eps) || (adv < 0.0 && ratio < 1.0 - cfg.clip_eps);
    if (clipped) continue;
    const double coef = ratio * adv / g;
    for (int f = 0; f < kFactorCount; ++f) {
      if (!resp.active[f]) continue;
      for (std::size_t j = 0; j < probs[f].size(); ++j) {
        const double indicator = static_cast<int>(j) == resp.choice[f] ? 1.0 : 0.0;
        grad[offsets[f] + j] += coef * (indicator - probs[f][j]);
      }
    }
  }

  if (cfg.kl_coeff != 0.0) {
    for (int f = 0; f < kFactorCount; ++f) {
      const auto lp = policy.log_probabilities(f);
      const auto lq = reference.log_probabilities(f);
      double kl = 0.0;
      for (std::size_t j = 0; j < lp.size(); ++j) kl += probs[f][j] * (lp[j] - lq[j]);
      for (std::size_t j = 0; j < lp.size(); ++j) {
        grad[offsets[f] + j] -= cfg.kl_coeff * probs[f][j] * (lp[j] - lq[j] - kl);
      }
    }
  }
  return grad;
}

GroupRollout collect_rollout(const SyntheticPolicy& old_policy, const GroundTruth& gt, const GrpoConfig& cfg,
                             const RewardConfig& reward_cfg, std::mt19937_64& rng) {
  cfg.validate();
  GroupRollout rollout;
  const auto g = static_cast<std::size_t>(cfg.group_size);
  rollout.responses.reserve(g);
  for (std::size_t k = 0; k < g; ++k) {
    rollout.responses.push_back(sample_response(old_policy, rng));
    rollout.texts.push_back(render_response(rollout.responses.back(), old_policy.grid()));
    rollout.old_logprobs.push_back(sequence_log_prob(old_policy, rollout.responses.back()));
    rollout.rewards.push_back(total_reward(rollout.texts.back(), gt, reward_cfg).total);
  }
  rollout.advantages = group_advantages(rollout.rewards);
  return rollout;
}

StepResult grpo_step(const SyntheticPolicy& policy, const SyntheticPolicy& old_policy,
                     const SyntheticPolicy& reference, const GroundTruth& gt, const GrpoConfig& cfg,
                     const RewardConfig& reward_cfg, std::mt19937_64& rng) {
  StepResult result{policy, collect_rollout(old_policy, gt, cfg, reward_cfg, rng), {}};
  auto grad = grpo_gradient(policy, result.rollout, reference, cfg);

  double norm = 0.0;
  for (double v : grad) norm += v * v;
  norm = std::sqrt(norm);
  const double scale = (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) ? cfg.max_grad_norm / norm : 1.0;

  auto params = policy.flat();
  for (std::size_t i = 0; i < params.size(); ++i) params[i] += cfg.learning_rate * scale * grad[i];
  result.policy.set_flat(params);

  auto& d = result.diagnostics;
  const auto g = static_cast<double>(cfg.group_size);
  d.mean_reward = std::accumulate(result.rollout.rewards.begin(), result.rollout.rewards.end(), 0.0) / g;
  d.kl = kl_divergence(result.policy, reference);
  d.grad_norm = norm;
  for (const auto& resp : result.rollout.responses) {
    if (resp.choice[kFormatFactor] == 1) {
      d.format_rate += 1.0 / g;
      if (static_cast<Category>(resp.choice[kCategoryFactor]) == gt.category()) d.category_rate += 1.0 / g;
    }
  }
  return result;
}

TrainResult train(std::span<const GroundTruth> items, const SyntheticPolicy& start, const GrpoConfig& cfg,
                  const RewardConfig& reward_cfg) {
  if (items.empty()) throw Error(ErrorKind::kCorpus, "GRPO training needs at least one item");
  cfg.validate();
  reward_cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  TrainResult out{{}, start};
  out.curve.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto& gt = items[static_cast<std::size_t>(it) % items.size()];
    const SyntheticPolicy old_policy = out.policy;
    auto step = grpo_step(out.policy, old_policy, start, gt, cfg, reward_cfg, rng);
    out.policy = std::move(step.policy);
    const auto& d = step.diagnostics;
    out.curve.push_back({it, d.mean_reward, d.kl, d.format_rate, d.category_rate});
  }
  return out;
}

SyntheticPolicy mle_warm_start(std::span<const std::string> dataset, PolicyGrid grid) {
  if (dataset.empty()) throw Error(ErrorKind::kCorpus, "warm start needs a non-empty dataset");
  SyntheticPolicy policy(std::move(grid));
  std::array<std::vector<double>, kFactorCount> counts;
  for (int f = 0; f < kFactorCount; ++f) counts[f].assign(policy.logits(f).size(), 0.0);
  for (const auto& text : dataset) {
    const auto s = encode_response(text, policy.grid());
    for (int f = 0; f < kFactorCount; ++f) {
      if (s.active[f]) counts[f][s.choice[f]] += 1.0;
    }
  }
  constexpr double kAlpha = 1.0;
  for (int f = 0; f < kFactorCount; ++f) {
    const double total = std::accumulate(counts[f].begin(), counts[f].end(), 0.0);
    const double denom = total + kAlpha * static_cast<double>(counts[f].size());
    auto logits = policy.logits(f);
    for (std::size_t j = 0; j < logits.size(); ++j) logits[j] = std::log((counts[f][j] + kAlpha) / denom);
  }
  return policy;
}

std::vector<std::string> synthetic_dataset(std::size_t n, double format_ok_rate, std::uint64_t seed,
                                           const PolicyGrid& grid) {
  if (n == 0) throw Error(ErrorKind::kParameter, "dataset size must be positive");
  if (!(format_ok_rate >= 0.0 && format_ok_rate <= 1.0)) {
    throw Error(ErrorKind::kParameter, "format_ok_rate must be in [0,1]");
  }
  const auto well_formed = static_cast<std::size_t>(std::llround(format_ok_rate * static_cast<double>(n)));
  std::vector<bool> ok(n, false);
  std::fill(ok.begin(), ok.begin() + static_cast<std::ptrdiff_t>(well_formed), true);
  std::mt19937_64 rng(seed);
  std::shuffle(ok.begin(), ok.end(), rng);

  const SyntheticPolicy uniform(grid);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SampledResponse s;
    do {
      s = sample_response(uniform, rng);
    } while ((s.choice[kFormatFactor] == 1) != ok[i]);
    out.push_back(render_response(s, grid));
  }
  return out;
}

double dataset_nll(const SyntheticPolicy& policy, std::span<const std::string> dataset) {
  double nll = 0.0;
  for (const auto& text : dataset) nll -= sequence_log_prob(policy, encode_response(text, policy.grid()));
  return nll;
}

}  // namespace wmeval
