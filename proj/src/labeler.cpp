#include "wmeval/labeler.hpp"

#include <cmath>
#include <vector>

#include "wmeval/error.hpp"
#include "wmeval/parallel.hpp"

namespace wmeval {

namespace {

bool is_fraction(double v) { return v >= 0.0 && v <= 1.0; }
bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

}  // namespace

void RobustnessReport::validate() const {
  if (!is_fraction(jpeg_acc) || !is_fraction(gaussian_acc) || !is_fraction(filter_acc)) {
    throw Error(ErrorKind::kInvariant, "robustness accuracies must lie in [0,1]");
  }
}

void ScoreThresholds::validate() const {
  if (!in_open_unit(robust_threshold) || !in_open_unit(alpha_low) || !in_open_unit(alpha_mid)) {
    throw Error(ErrorKind::kParameter, "score thresholds must lie in (0,1)");
  }
}

DistortionSet default_distortions() {
  return {DistortionSpec::jpeg(), DistortionSpec::gaussian_noise(), DistortionSpec::median_filter()};
}

RobustnessReport measure_robustness(std::span<const RasterImage> images,
                                    std::span<const WatermarkMessage> messages, const EmbedConfig& cfg,
                                    const DistortionSet& specs, std::uint64_t seed, bool skip_distortion,
                                    std::string method) {
  if (images.empty()) throw Error(ErrorKind::kCorpus, "robustness corpus is empty");
  if (messages.size() != images.size()) {
    throw Error(ErrorKind::kCorpus, "need one message per image (" + std::to_string(images.size()) +
                                        " images, " + std::to_string(messages.size()) + " messages)");
  }
  cfg.validate();
  for (const auto& spec : specs) spec.validate();

  std::vector<std::array<double, 3>> per_image(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    RasterImage marked;
    try {
      marked = embed_watermark(images[i], messages[i], cfg);
    } catch (const Error& e) {
      throw Error(e.kind(), "image " + std::to_string(i) + ": " + e.what());
    }
    for (std::size_t a = 0; a < specs.size(); ++a) {
      const RasterImage attacked =
          skip_distortion ? marked : apply_distortion(marked, specs[a], derive_seed(seed, i * specs.size() + a));
      per_image[i][a] = bit_accuracy(messages[i], extract_watermark(attacked, messages[i].size(), cfg));
    }
  });

  // Summed in index order so the report does not depend on thread scheduling.
  std::array<double, 3> sum{0.0, 0.0, 0.0};
  for (const auto& acc : per_image) {
    for (std::size_t a = 0; a < 3; ++a) sum[a] += acc[a];
  }
  const auto n = static_cast<double>(images.size());
  return {std::move(method), sum[0] / n, sum[1] / n, sum[2] / n, images.size()};
}

SecurityFlags residual_security_labels(const RobustnessReport& report, const ScoreThresholds& th) {
  report.validate();
  th.validate();
  auto flag = [&](double acc) { return static_cast<std::uint8_t>(acc >= th.robust_threshold ? 1 : 0); };
  return {flag(report.jpeg_acc), flag(report.gaussian_acc), flag(report.filter_acc)};
}

double residual_quality_label(const RasterImage& original, const RasterImage& watermarked,
                              const PsnrNormalization& norm) {
  return normalize_psnr(psnr(original, watermarked), norm);
}

SemanticLabel semantic_label(double p_cvm, double p_jb, double p_k2, const ScoreThresholds& th) {
  th.validate();
  for (double p : {p_cvm, p_jb, p_k2}) {
    if (!is_fraction(p)) throw Error(ErrorKind::kParameter, "p-values must lie in [0,1]");
  }
  int level = 3;
  if (std::min(p_jb, p_k2) < th.alpha_low) {
    level = 1;
  } else if (p_cvm < th.alpha_mid) {
    level = 2;
  }
  return {level, level};
}

}  // namespace wmeval
