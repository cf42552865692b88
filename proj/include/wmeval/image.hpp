#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wmeval {

// 8-bit raster, row-major, channels interleaved. Grayscale (1) or RGB (3).
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels);
  RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t sample_count() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  bool same_shape(const RasterImage& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

RasterImage read_png(const std::string& path);
void write_png(const RasterImage& img, const std::string& path);

}  // namespace wmeval
