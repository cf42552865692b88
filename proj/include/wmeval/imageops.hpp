#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "wmeval/image.hpp"

namespace wmeval {

enum class DistortionKind { kJpeg, kGaussianNoise, kMedianFilter };

const char* to_string(DistortionKind kind) noexcept;
DistortionKind distortion_kind_from_string(const std::string& name);

// Only the field matching `kind` is consulted.
struct DistortionSpec {
  DistortionKind kind = DistortionKind::kJpeg;
  int jpeg_quality = 75;
  double noise_sigma = 0.05;  // on the [0,1] intensity scale
  int kernel_size = 3;

  static DistortionSpec jpeg(int quality = 75) { return {DistortionKind::kJpeg, quality, 0.05, 3}; }
  static DistortionSpec gaussian_noise(double sigma = 0.05) {
    return {DistortionKind::kGaussianNoise, 75, sigma, 3};
  }
  static DistortionSpec median_filter(int kernel = 3) {
    return {DistortionKind::kMedianFilter, 75, 0.05, kernel};
  }

  void validate() const;
};

struct PsnrNormalization {
  double psnr_low = 20.0;   // dB mapped to 1.0
  double psnr_high = 45.0;  // dB mapped to 5.0

  void validate() const;
};

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

RasterImage apply_distortion(const RasterImage& img, const DistortionSpec& spec, std::uint64_t seed);

RasterImage jpeg_roundtrip(const RasterImage& img, int quality);
RasterImage add_gaussian_noise(const RasterImage& img, double sigma, std::uint64_t seed);
RasterImage median_filter(const RasterImage& img, int kernel_size);

// 10*log10(255^2 / MSE) over every sample; kInfinitePsnr for identical images.
double psnr(const RasterImage& a, const RasterImage& b);

double normalize_psnr(double psnr_db, const PsnrNormalization& norm);

// Integer BT.601 luma, (77 R + 150 G + 29 B + 128) >> 8. Grayscale passes through.
std::uint8_t luma_of(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;
std::vector<std::uint8_t> luma_plane(const RasterImage& img);

// Deterministic band-limited texture used for test corpora and demos:
// a few random plane waves plus smoothed noise, kept inside [16, 239].
RasterImage synth_texture(int width, int height, int channels, std::uint64_t seed);

}  // namespace wmeval
