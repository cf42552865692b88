#include "wmeval/imageops.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <numbers>
#include <random>

// clang-format off
#include <jpeglib.h>
// clang-format on

#include "wmeval/error.hpp"

namespace wmeval {

const char* to_string(DistortionKind kind) noexcept {
  switch (kind) {
    case DistortionKind::kJpeg: return "jpeg";
    case DistortionKind::kGaussianNoise: return "gaussian_noise";
    case DistortionKind::kMedianFilter: return "median_filter";
  }
  return "unknown";
}

DistortionKind distortion_kind_from_string(const std::string& name) {
  if (name == "jpeg") return DistortionKind::kJpeg;
  if (name == "gaussian_noise" || name == "gaussian" || name == "noise") {
    return DistortionKind::kGaussianNoise;
  }
  if (name == "median_filter" || name == "median" || name == "filter") {
    return DistortionKind::kMedianFilter;
  }
  throw Error(ErrorKind::kParameter, "unknown distortion kind '" + name + "'");
}

void DistortionSpec::validate() const {
  switch (kind) {
    case DistortionKind::kJpeg:
      if (jpeg_quality < 1 || jpeg_quality > 100) {
        throw Error(ErrorKind::kParameter, "jpeg_quality must be in [1,100]");
      }
      break;
    case DistortionKind::kGaussianNoise:
      if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
        throw Error(ErrorKind::kParameter, "noise_sigma must be positive and finite");
      }
      break;
    case DistortionKind::kMedianFilter:
      if (kernel_size < 3 || kernel_size % 2 == 0) {
        throw Error(ErrorKind::kParameter, "kernel_size must be odd and >= 3");
      }
      break;
  }
}

void PsnrNormalization::validate() const {
  if (!(psnr_low < psnr_high) || !std::isfinite(psnr_low) || !std::isfinite(psnr_high)) {
    throw Error(ErrorKind::kParameter, "psnr_low must be finite and below psnr_high");
  }
}

RasterImage apply_distortion(const RasterImage& img, const DistortionSpec& spec, std::uint64_t seed) {
  spec.validate();
  switch (spec.kind) {
    case DistortionKind::kJpeg: return jpeg_roundtrip(img, spec.jpeg_quality);
    case DistortionKind::kGaussianNoise: return add_gaussian_noise(img, spec.noise_sigma, seed);
    case DistortionKind::kMedianFilter: return median_filter(img, spec.kernel_size);
  }
  throw Error(ErrorKind::kParameter, "unhandled distortion kind");
}

// ---------------------------------------------------------------------------
// JPEG round trip through libjpeg (baseline sequential, standard tables scaled
// by jpeg_set_quality).

namespace {

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr, int) {}

// Both helpers keep only trivially destructible state between setjmp and
// longjmp; buffers are owned by the caller.
bool jpeg_encode(const RasterImage& img, int quality, unsigned char** out, unsigned long* out_size,
                 char* message) {
  jpeg_compress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  jerr.pub.emit_message = jpeg_silent;
  if (setjmp(jerr.jump)) {
    std::snprintf(message, JMSG_LENGTH_MAX, "%s", jerr.message);
    jpeg_destroy_compress(&cinfo);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, out, out_size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = img.channels();
  cinfo.in_color_space = img.channels() == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const auto stride = static_cast<std::size_t>(img.width()) * img.channels();
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPLE*>(img.data().data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return true;
}

bool jpeg_decode(const unsigned char* in, unsigned long in_size, RasterImage& dst, char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  jerr.pub.emit_message = jpeg_silent;
  if (setjmp(jerr.jump)) {
    std::snprintf(message, JMSG_LENGTH_MAX, "%s", jerr.message);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, in, in_size);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = dst.channels() == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const auto stride = static_cast<std::size_t>(dst.width()) * dst.channels();
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPLE* row = dst.data().data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

}  // namespace

RasterImage jpeg_roundtrip(const RasterImage& img, int quality) {
  if (quality < 1 || quality > 100) {
    throw Error(ErrorKind::kParameter, "jpeg_quality must be in [1,100]");
  }
  unsigned char* encoded = nullptr;
  unsigned long encoded_size = 0;
  char message[JMSG_LENGTH_MAX] = {0};
  const bool ok = jpeg_encode(img, quality, &encoded, &encoded_size, message);
  if (!ok) {
    std::free(encoded);
    throw Error(ErrorKind::kFormat, std::string("JPEG encode failed: ") + message);
  }
  RasterImage out(img.width(), img.height(), img.channels());
  const bool decoded = jpeg_decode(encoded, encoded_size, out, message);
  std::free(encoded);
  if (!decoded) throw Error(ErrorKind::kFormat, std::string("JPEG decode failed: ") + message);
  return out;
}

RasterImage add_gaussian_noise(const RasterImage& img, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::kParameter, "noise_sigma must be positive and finite");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  RasterImage out = img;
  for (auto& v : out.data()) {
    const double x = std::clamp(v / 255.0 + noise(rng), 0.0, 1.0);
    v = static_cast<std::uint8_t>(std::lround(x * 255.0));
  }
  return out;
}

RasterImage median_filter(const RasterImage& img, int kernel_size) {
  if (kernel_size < 3 || kernel_size % 2 == 0) {
    throw Error(ErrorKind::kParameter, "kernel_size must be odd and >= 3");
  }
  const int r = kernel_size / 2;
  const int w = img.width();
  const int h = img.height();
  RasterImage out(w, h, img.channels());
  std::vector<std::uint8_t> window(static_cast<std::size_t>(kernel_size) * kernel_size);
  const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::size_t k = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -r; dx <= r; ++dx) {
            window[k++] = img.at(std::clamp(x + dx, 0, w - 1), yy, c);
          }
        }
        std::nth_element(window.begin(), mid, window.end());
        out.at(x, y, c) = *mid;
      }
    }
  }
  return out;
}

double psnr(const RasterImage& a, const RasterImage& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::kShape, "psnr requires identical dimensions and channels");
  }
  if (a.empty()) throw Error(ErrorKind::kShape, "psnr of empty images");
  std::uint64_t sse = 0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const int d = static_cast<int>(da[i]) - static_cast<int>(db[i]);
    sse += static_cast<std::uint64_t>(d * d);
  }
  if (sse == 0) return kInfinitePsnr;
  const double mse = static_cast<double>(sse) / static_cast<double>(da.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double normalize_psnr(double psnr_db, const PsnrNormalization& norm) {
  norm.validate();
  if (std::isinf(psnr_db) && psnr_db > 0) return 5.0;
  if (std::isnan(psnr_db)) throw Error(ErrorKind::kParameter, "psnr is NaN");
  const double t = std::clamp((psnr_db - norm.psnr_low) / (norm.psnr_high - norm.psnr_low), 0.0, 1.0);
  return 1.0 + 4.0 * t;
}

std::uint8_t luma_of(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  return static_cast<std::uint8_t>((77 * r + 150 * g + 29 * b + 128) >> 8);
}

std::vector<std::uint8_t> luma_plane(const RasterImage& img) {
  const auto n = static_cast<std::size_t>(img.width()) * img.height();
  std::vector<std::uint8_t> y(n);
  const auto src = img.data();
  if (img.channels() == 1) {
    std::copy(src.begin(), src.end(), y.begin());
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] = luma_of(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
  }
  return y;
}

RasterImage synth_texture(int width, int height, int channels, std::uint64_t seed) {
  RasterImage img(width, height, channels);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  constexpr int kWaves = 6;
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves(kWaves);
  for (auto& wv : waves) {
    const double freq = 0.01 + 0.12 * unit(rng);
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    wv = {freq * std::cos(angle), freq * std::sin(angle), 2.0 * std::numbers::pi * unit(rng),
          8.0 + 22.0 * unit(rng)};
  }

  // Box-smoothed white noise gives fine texture on top of the waves.
  const auto n = static_cast<std::size_t>(width) * height;
  std::vector<double> noise(n);
  for (auto& v : noise) v = gauss(rng);
  std::vector<double> smooth(n, 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = std::clamp(x + dx, 0, width - 1);
          const int yy = std::clamp(y + dy, 0, height - 1);
          s += noise[static_cast<std::size_t>(yy) * width + xx];
        }
      }
      smooth[static_cast<std::size_t>(y) * width + x] = s / 3.0;
    }
  }

  std::vector<double> tint(static_cast<std::size_t>(channels));
  for (auto& t : tint) t = -12.0 + 24.0 * unit(rng);
  const double base = 100.0 + 56.0 * unit(rng);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = base + 6.0 * smooth[static_cast<std::size_t>(y) * width + x];
      for (const auto& wv : waves) v += wv.amp * std::sin(wv.fx * x + wv.fy * y + wv.phase);
      for (int c = 0; c < channels; ++c) {
        img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v + tint[c], 16.0, 239.0)));
      }
    }
  }
  return img;
}

}  // namespace wmeval
