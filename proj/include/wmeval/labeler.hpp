#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "wmeval/imageops.hpp"
#include "wmeval/watermark.hpp"

namespace wmeval {

struct SecurityFlags {
  std::uint8_t jpeg = 0;
  std::uint8_t gaussian = 0;
  std::uint8_t filter = 0;
  friend bool operator==(const SecurityFlags&, const SecurityFlags&) = default;
};

struct ResidualLabel {
  double quality = 5.0;  // [1, 5]
  SecurityFlags security;
  friend bool operator==(const ResidualLabel&, const ResidualLabel&) = default;
};

struct SemanticLabel {
  int quality = 3;   // {1, 2, 3}
  int security = 3;  // {1, 2, 3}
  friend bool operator==(const SemanticLabel&, const SemanticLabel&) = default;
};

struct RobustnessReport {
  std::string method;
  double jpeg_acc = 0.0;
  double gaussian_acc = 0.0;
  double filter_acc = 0.0;
  std::size_t n_images = 0;

  void validate() const;
};

struct ScoreThresholds {
  double robust_threshold = 0.85;  // inclusive
  double alpha_low = 0.01;         // JB / K^2 cutoff for level 1
  double alpha_mid = 0.01;         // CvM cutoff between levels 2 and 3

  void validate() const;
};

// The three OSN attacks, in label order (jpeg, gaussian, filter).
using DistortionSet = std::array<DistortionSpec, 3>;

DistortionSet default_distortions();

// Mean bit accuracy of extract(distort(embed(image))) per attack. Image i is
// distorted with a seed derived from (seed, i). Passing no distortions
// (`skip_distortion`) measures the clean round trip instead.
RobustnessReport measure_robustness(std::span<const RasterImage> images,
                                    std::span<const WatermarkMessage> messages, const EmbedConfig& cfg,
                                    const DistortionSet& specs, std::uint64_t seed,
                                    bool skip_distortion = false, std::string method = "DwtDct");

SecurityFlags residual_security_labels(const RobustnessReport& report, const ScoreThresholds& th);

double residual_quality_label(const RasterImage& original, const RasterImage& watermarked,
                              const PsnrNormalization& norm);

SemanticLabel semantic_label(double p_cvm, double p_jb, double p_k2, const ScoreThresholds& th);

}  // namespace wmeval
