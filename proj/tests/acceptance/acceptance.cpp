// Prints one PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "../support/corr_oracle.hpp"
#include "../support/grpo_check.hpp"
#include "../support/random_responses.hpp"
#include "../support/template_oracle.hpp"
#include "wmeval/grpo.hpp"
#include "wmeval/labeler.hpp"
#include "wmeval/latent_stats.hpp"
#include "wmeval/metrics.hpp"
#include "wmeval/parallel.hpp"
#include "wmeval/response_format.hpp"
#include "wmeval/reward.hpp"
#include "wmeval/watermark.hpp"

using namespace wmeval;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail.clear();
    pass = false;
    if (detail.size() < 400) detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

json fixture(const std::string& name) {
  std::ifstream in(std::string(WMEVAL_FIXTURE_DIR) + "/" + name);
  return json::parse(in);
}

// ---------------------------------------------------------------------------

Outcome residual_table() {
  Outcome o;
  const auto rows = fixture("residual_robustness.json");
  o.check(rows.size() == 6, "expected six rows");
  for (const auto& row : rows) {
    const RobustnessReport r{row["method"], row["jpeg_acc"], row["gaussian_acc"], row["filter_acc"], 1000};
    const auto f = residual_security_labels(r, ScoreThresholds{});
    const auto want = row["expected"].get<std::vector<int>>();
    o.check(f.jpeg == want[0] && f.gaussian == want[1] && f.filter == want[2], r.method);
  }
  if (o.pass) o.detail = "6/6 label triples exact";
  return o;
}

Outcome semantic_table() {
  Outcome o;
  const auto rows = fixture("semantic_pvalues.json");
  o.check(rows.size() == 8, "expected eight rows");
  for (const auto& row : rows) {
    const auto l = semantic_label(row["p_cvm"], row["p_jb"], row["p_k2"], ScoreThresholds{});
    const auto want = row["expected"].get<std::vector<int>>();
    o.check(l.quality == want[0] && l.security == want[1], row["method"].get<std::string>());
  }
  if (o.pass) o.detail = "8/8 level pairs exact";
  return o;
}

std::string padded(ParsedResponse r, std::size_t length) {
  r.think = "x";
  const std::size_t base = measure_length(serialize_response(r));
  r.think = std::string(length - base + 1, 'x');
  return serialize_response(r);
}

ParsedResponse residual_resp(double q, SecurityFlags f) {
  ParsedResponse r;
  r.residual_quality = q;
  r.flags = f;
  return r;
}

ParsedResponse semantic_resp(Category c, int q, int s) {
  ParsedResponse r;
  r.category = c;
  r.semantic_quality = q;
  r.semantic_security = s;
  return r;
}

Outcome reward_algebra() {
  Outcome o;
  const RewardConfig cfg{};
  o.check(length_reward(850, cfg) == 1.0, "r_len(850)");
  o.check(length_reward(875, cfg) == 0.5, "r_len(875)");
  o.check(length_reward(900, cfg) == 0.0, "r_len(900)");
  o.check(residual_quality_reward(3.4, 3.4, cfg) == 1.0, "r_qual exact");
  o.check(residual_quality_reward(3.15, 3.0, cfg) == 0.5, "r_qual 0.15");
  o.check(residual_quality_reward(3.4, 3.0, cfg) == 0.0, "r_qual 0.4");
  o.check(residual_security_reward({1, 1, 1}, {1, 1, 1}) == 1.0, "r_sec 1");
  o.check(residual_security_reward({1, 0, 1}, {1, 1, 1}) == 2.0 / 3.0, "r_sec 2/3");
  o.check(residual_security_reward({0, 1, 0}, {1, 0, 1}) == 0.0, "r_sec 0");

  const GroundTruth gt(Category::kResidual, ResidualLabel{2.72, {1, 1, 1}});
  o.check(total_reward("<think>no type</think>", gt, cfg).total == -10.0, "format branch");
  o.check(total_reward(padded(semantic_resp(Category::kLosslessSemantic, 3, 3), 850), gt, cfg).total == 0.0,
          "category branch");
  o.check(total_reward(padded(residual_resp(2.72, {1, 1, 1}), 850), gt, cfg).total == 4.0, "best total");
  o.check(total_reward(padded(residual_resp(4.0, {0, 0, 0}), 950), gt, cfg).total == 1.0, "floor total");

  std::mt19937_64 rng(31);
  std::size_t outside = 0;
  for (int i = 0; i < 100000; ++i) {
    auto r = support::random_valid_response(rng);
    std::string text = padded(r, 780 + rng() % 140);
    if (rng() % 3 == 0) text = oracle::mutate(text, rng);
    const GroundTruth g = rng() % 2 ? GroundTruth(Category::kResidual,
                                                  ResidualLabel{1.0 + (rng() % 4001) / 1000.0,
                                                                {static_cast<std::uint8_t>(rng() % 2), 1, 0}})
                                    : GroundTruth(static_cast<Category>(1 + rng() % 2),
                                                  SemanticLabel{1 + static_cast<int>(rng() % 3), 2});
    const double t = total_reward(text, g, cfg).total;
    outside += !(t == -10.0 || t == 0.0 || (t >= 1.0 && t <= 4.0));
  }
  o.check(outside == 0, std::to_string(outside) + " random totals outside the reachable set");
  if (o.pass) o.detail = "examples exact, 1e5 random totals in {-10} U {0} U [1,4]";
  return o;
}

Outcome calibration() {
  Outcome o;
  std::array<int, 3> null_rejects{};
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto r = run_all_tests(synth_latents(LatentKind::kStandardNormal, 10000, 1000 + s));
    for (int t = 0; t < 3; ++t) null_rejects[t] += r[t].p_value < 0.05;
  }
  std::array<int, 3> alt_hits{};
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = run_all_tests(synth_latents(LatentKind::kMixturePm2, 10000, 7000 + s));
    for (int t = 0; t < 3; ++t) alt_hits[t] += r[t].p_value < 1e-4;
  }
  const char* names[] = {"CvM", "JB", "K2"};
  std::string summary;
  for (int t = 0; t < 3; ++t) {
    const double rate = null_rejects[t] / 200.0;
    o.check(rate >= 0.02 && rate <= 0.09, std::string(names[t]) + fmt(" null rate %.3f", rate));
    o.check(alt_hits[t] >= 99, std::string(names[t]) + fmt(" mixture hits %.0f/100", alt_hits[t]));
    summary += std::string(t ? ", " : "") + names[t] + fmt(" null %.3f alt %.0f/100", rate, alt_hits[t]);
  }
  if (o.pass) o.detail = summary;
  return o;
}

Outcome jb_closed_form() {
  Outcome o;
  const double jb = stats::jarque_bera_statistic(600.0, 0.5, 1.0);
  const double p = stats::chi2_df2_sf(jb);
  const double ej = std::abs(jb - 50.0) / 50.0;
  const double ep = std::abs(p - std::exp(-25.0)) / std::exp(-25.0);
  o.check(ej <= 1e-12, fmt("JB rel err %.3g", ej));
  o.check(ep <= 1e-12, fmt("p rel err %.3g", ep));
  if (o.pass) o.detail = fmt("JB=%.15g p=%.6g", jb, p);
  return o;
}

Outcome grpo_numerics() {
  Outcome o;
  const auto a = group_advantages(std::vector<double>{0, 4});
  o.check(std::abs(a[0] + 1) <= 1e-9 && std::abs(a[1] - 1) <= 1e-9, "(0,4) advantages");
  const auto b = group_advantages(std::vector<double>{1, 2, 3});
  o.check(std::abs(b[0] + std::sqrt(1.5)) <= 1e-9 && std::abs(b[1]) <= 1e-9 && std::abs(b[2] - std::sqrt(1.5)) <= 1e-9,
          "(1,2,3) advantages");
  o.check(clipped_surrogate(1.0, 0.7, 0.2) == 0.7, "surrogate r=1");
  o.check(std::abs(clipped_surrogate(2.0, 1.0, 0.2) - 1.2) <= 1e-15, "surrogate clip high");
  o.check(std::abs(clipped_surrogate(0.5, -1.0, 0.2) + 0.8) <= 1e-15, "surrogate clip low");
  o.check(clipped_surrogate(0.5, 1.0, 0.2) == 0.5, "surrogate unclipped min");
  o.check(clipped_surrogate(2.0, -1.0, 0.2) == -2.0, "surrogate pessimistic");
  int checked = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; checked < 100; ++seed) {
    const auto r = support::gradient_instance(seed);
    if (!r.valid) continue;
    ++checked;
    worst = std::max(worst, r.relative_error);
  }
  o.check(worst <= 1e-5, fmt("gradient rel err %.3g", worst));
  if (o.pass) o.detail = fmt("fixtures exact, worst gradient rel err %.2g over 100 instances", worst);
  return o;
}

Outcome grpo_shaping() {
  Outcome o;
  const GroundTruth gt(Category::kResidual, ResidualLabel{3.4, {1, 0, 1}});
  const auto start = mle_warm_start(synthetic_dataset(30, 0.9, 11));
  GrpoConfig cfg;
  cfg.seed = 21;
  const auto res = train(std::span(&gt, 1), start, cfg, RewardConfig{});
  o.check(cfg.group_size == 8 && cfg.kl_coeff == 0.01 && cfg.clip_eps == 0.2, "defaults");
  o.check(res.curve.size() == 2000, "iteration count");
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 200; ++i) {
    first += res.curve[i].mean_reward / 200.0;
    last += res.curve[1800 + i].mean_reward / 200.0;
  }
  const double p = res.policy.probabilities(kCategoryFactor)[0];
  o.check(p >= 0.9, fmt("category probability %.4f", p));
  o.check(last > first, fmt("deciles %.3f -> %.3f", first, last));
  if (o.pass) o.detail = fmt("p(category)=%.4f, decile reward %.3f -> %.3f", p, first, last);
  return o;
}

Outcome parser() {
  Outcome o;
  std::mt19937_64 rng(17);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto r = support::random_valid_response(rng);
    const auto text = serialize_response(r);
    const auto got = parse_response(text);
    const auto* back = std::get_if<ParsedResponse>(&got);
    mismatches += !(back && back->same_fields(r) && serialize_response(*back) == text);
  }
  o.check(mismatches == 0, std::to_string(mismatches) + " round-trip mismatches");
  std::mt19937_64 frng(2718);
  int disagreements = 0;
  int accepted = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto text = oracle::mutate(serialize_response(support::random_valid_response(frng)), frng);
    const auto got = parse_response(text);
    const bool ok = std::holds_alternative<ParsedResponse>(got);
    accepted += ok;
    disagreements += ok != oracle::accept(text).has_value();
  }
  o.check(disagreements == 0, std::to_string(disagreements) + " fuzz verdicts disagree with the literal matcher");
  if (o.pass) o.detail = "1e3 round trips, 1e5 fuzz inputs (" + std::to_string(accepted) + " exact templates accepted)";
  return o;
}

Outcome metrics_parity() {
  Outcome o;
  using V = std::vector<double>;
  o.check(plcc(V{1, 2, 3}, V{2, 4, 6}) == 1.0, "plcc 1");
  o.check(plcc(V{1, 2, 3}, V{6, 4, 2}) == -1.0, "plcc -1");
  o.check(std::abs(plcc(V{1, 2, 3}, V{1, 3, 2}) - 0.5) <= 1e-15, "plcc 0.5");
  o.check(std::abs(srcc(V{1, 2, 3}, V{1, 3, 2}) - 0.5) <= 1e-15, "srcc 0.5");
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  int done = 0;
  while (done < 1000) {
    const std::size_t n = 2 + rng() % 60;
    V x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = done % 3 == 0 ? static_cast<double>(rng() % 5) : nd(rng);
      y[i] = 0.4 * x[i] + nd(rng);
    }
    if (oracle::ranks(x) == V(n, (n + 1) / 2.0)) continue;
    worst = std::max({worst, std::abs(plcc(x, y) - oracle::pearson(x, y)), std::abs(srcc(x, y) - oracle::spearman(x, y))});
    ++done;
  }
  o.check(worst <= 1e-12, fmt("max deviation %.3g", worst));
  if (o.pass) o.detail = fmt("fixtures exact, max deviation %.2g over 1000 vectors", worst);
  return o;
}

Outcome watermark() {
  Outcome o;
  std::vector<RasterImage> images;
  std::vector<WatermarkMessage> messages;
  for (std::size_t i = 0; i < 100; ++i) {
    images.push_back(synth_texture(128, 128, 3, derive_seed(99, i)));
    messages.push_back(WatermarkMessage::random(32, derive_seed(98, i)));
  }
  std::vector<double> clean(100), low(100), high(100);
  parallel_for(100, [&](std::size_t i) {
    const EmbedConfig cfg{};
    const auto marked = embed_watermark(images[i], messages[i], cfg);
    clean[i] = bit_accuracy(extract_watermark(marked, 32, cfg), messages[i]);
    low[i] = bit_accuracy(extract_watermark(add_gaussian_noise(marked, 0.01, derive_seed(5, i)), 32, cfg), messages[i]);
    high[i] = bit_accuracy(extract_watermark(add_gaussian_noise(marked, 0.10, derive_seed(6, i)), 32, cfg), messages[i]);
  });
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double c = mean(clean), l = mean(low), h = mean(high);
  o.check(c == 1.0, fmt("clean accuracy %.4f", c));
  o.check(l > h, fmt("sigma 0.01 %.4f vs 0.10 %.4f", l, h));
  if (o.pass) o.detail = fmt("clean %.4f, sigma 0.01 %.4f > sigma 0.10 %.4f", c, l, h);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"residual-label-table", residual_table},
      {"semantic-label-table", semantic_table},
      {"reward-algebra", reward_algebra},
      {"normality-calibration", calibration},
      {"jarque-bera-closed-form", jb_closed_form},
      {"grpo-numerics", grpo_numerics},
      {"grpo-shaping", grpo_shaping},
      {"parser-roundtrip-fuzz", parser},
      {"metrics-oracle-parity", metrics_parity},
      {"watermark-roundtrip", watermark},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %-24s %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
