#include "wmeval/image.hpp"

#include <png.h>

#include <cstring>

#include "wmeval/error.hpp"

namespace wmeval {

namespace {

void check_dims(int width, int height, int channels) {
  if (width < 1 || height < 1) {
    throw Error(ErrorKind::kShape, "image dimensions must be at least 1x1");
  }
  if (channels != 1 && channels != 3) {
    throw Error(ErrorKind::kShape, "image must have 1 or 3 channels, got " + std::to_string(channels));
  }
}

}  // namespace

RasterImage::RasterImage(int width, int height, int channels)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height, channels);
  data_.assign(static_cast<std::size_t>(width) * height * channels, 0);
}

RasterImage::RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height, channels);
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorKind::kShape, "pixel buffer length does not match width*height*channels");
  }
}

RasterImage read_png(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    throw Error(ErrorKind::kIo, "cannot read PNG '" + path + "': " + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
    std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::kFormat, "cannot decode PNG '" + path + "': " + message);
  }
  return RasterImage(static_cast<int>(image.width), static_cast<int>(image.height), channels,
                     std::move(buffer));
}

void write_png(const RasterImage& img, const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (png_image_write_to_file(&image, path.c_str(), 0, img.data().data(), 0, nullptr) == 0) {
    throw Error(ErrorKind::kIo, "cannot write PNG '" + path + "': " + image.message);
  }
}

}  // namespace wmeval
