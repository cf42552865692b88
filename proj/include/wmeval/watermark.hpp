#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wmeval/image.hpp"

namespace wmeval {

// Ordered bit string carried by the reference watermark.
struct WatermarkMessage {
  std::vector<std::uint8_t> bits;  // each 0 or 1

  std::size_t size() const noexcept { return bits.size(); }
  friend bool operator==(const WatermarkMessage&, const WatermarkMessage&) = default;

  // MSB-first packing, zero-padded to whole nibbles.
  std::string to_hex() const;
  static WatermarkMessage from_hex(const std::string& hex, std::size_t bit_count);
  static WatermarkMessage random(std::size_t bit_count, std::uint64_t seed);
};

struct EmbedConfig {
  double strength = 48.0;  // QIM step in LL-subband DCT coefficient units
  int coeff_index = 12;    // zig-zag position inside the 8x8 block, (2,2) by default

  void validate() const;
};

// Number of complete 8x8 blocks in the one-level Haar LL subband.
std::size_t watermark_capacity(int width, int height) noexcept;

// Haar DWT (one level) + 8x8 DCT + QIM on the selected coefficient of the
// luma channel. Chroma differences are preserved exactly for RGB input.
RasterImage embed_watermark(const RasterImage& img, const WatermarkMessage& msg, const EmbedConfig& cfg);
WatermarkMessage extract_watermark(const RasterImage& img, std::size_t bit_count, const EmbedConfig& cfg);

double bit_accuracy(const WatermarkMessage& a, const WatermarkMessage& b);

namespace haar {

// Orthonormal one-level 2-D Haar transform of a float plane. Only the even
// width/height part is transformed; the subbands are each (w/2) x (h/2).
struct Subbands {
  int width = 0;  // subband width
  int height = 0;
  std::vector<double> ll, lh, hl, hh;
};

Subbands forward(const std::vector<double>& plane, int width, int height);
// Writes the reconstruction into the even-sized top-left part of `plane`.
void inverse(const Subbands& bands, std::vector<double>& plane, int width);

}  // namespace haar

// (row, column) of zig-zag index 0..63 in an 8x8 block.
std::pair<int, int> zigzag_position(int index);

}  // namespace wmeval
