#include "wmeval/watermark.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "wmeval/error.hpp"
#include "wmeval/imageops.hpp"

namespace wmeval {

namespace {

constexpr int kBlock = 8;
constexpr int kRefinePasses = 8;

using Basis = std::array<double, kBlock * kBlock>;

Basis dct_basis(int u, int v) {
  Basis basis{};
  const double au = u == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
  const double av = v == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
  for (int y = 0; y < kBlock; ++y) {
    for (int x = 0; x < kBlock; ++x) {
      basis[y * kBlock + x] = au * av * std::cos((2 * y + 1) * u * std::numbers::pi / 16.0) *
                              std::cos((2 * x + 1) * v * std::numbers::pi / 16.0);
    }
  }
  return basis;
}

struct BlockGrid {
  int blocks_x = 0;
  int blocks_y = 0;
  std::size_t count() const { return static_cast<std::size_t>(blocks_x) * blocks_y; }
};

BlockGrid grid_for(int width, int height) { return {(width / 2) / kBlock, (height / 2) / kBlock}; }

double project(const haar::Subbands& bands, std::size_t block, const BlockGrid& grid, const Basis& basis) {
  const int bx = static_cast<int>(block % grid.blocks_x) * kBlock;
  const int by = static_cast<int>(block / grid.blocks_x) * kBlock;
  double c = 0.0;
  for (int y = 0; y < kBlock; ++y) {
    for (int x = 0; x < kBlock; ++x) {
      c += bands.ll[static_cast<std::size_t>(by + y) * bands.width + bx + x] * basis[y * kBlock + x];
    }
  }
  return c;
}

void add_basis(haar::Subbands& bands, std::size_t block, const BlockGrid& grid, const Basis& basis,
               double amount) {
  const int bx = static_cast<int>(block % grid.blocks_x) * kBlock;
  const int by = static_cast<int>(block / grid.blocks_x) * kBlock;
  for (int y = 0; y < kBlock; ++y) {
    for (int x = 0; x < kBlock; ++x) {
      bands.ll[static_cast<std::size_t>(by + y) * bands.width + bx + x] += amount * basis[y * kBlock + x];
    }
  }
}

// Parity of the nearest multiple of step.
std::uint8_t qim_decode(double coeff, double step) {
  const auto q = static_cast<long long>(std::floor(coeff / step + 0.5));
  return static_cast<std::uint8_t>(((q % 2) + 2) % 2);
}

// Nearest point of the lattice {step * (2m + bit)}.
double qim_encode(double coeff, std::uint8_t bit, double step) {
  const double m = std::floor((coeff / step - bit) / 2.0 + 0.5);
  return step * (2.0 * m + bit);
}

std::vector<double> to_double(const std::vector<std::uint8_t>& plane) {
  return {plane.begin(), plane.end()};
}

void check_capacity(int width, int height, std::size_t bits) {
  const auto capacity = watermark_capacity(width, height);
  if (bits == 0) throw Error(ErrorKind::kCapacity, "watermark message must contain at least one bit");
  if (bits > capacity) {
    throw Error(ErrorKind::kCapacity, "message of " + std::to_string(bits) +
                                          " bits exceeds capacity of " + std::to_string(capacity) +
                                          " blocks for a " + std::to_string(width) + "x" +
                                          std::to_string(height) + " image");
  }
}

// Writes a modified luma plane back into `img`, shifting all three channels
// by the same integer so chroma differences are kept.
void apply_luma(RasterImage& img, const std::vector<std::uint8_t>& old_luma, const std::vector<double>& new_luma) {
  auto data = img.data();
  const auto n = old_luma.size();
  for (std::size_t i = 0; i < n; ++i) {
    const long target = std::clamp(std::lround(new_luma[i]), 0L, 255L);
    const long delta = target - old_luma[i];
    if (delta == 0) continue;
    if (img.channels() == 1) {
      data[i] = static_cast<std::uint8_t>(target);
    } else {
      for (int c = 0; c < 3; ++c) {
        auto& s = data[3 * i + c];
        s = static_cast<std::uint8_t>(std::clamp(static_cast<long>(s) + delta, 0L, 255L));
      }
    }
  }
}

}  // namespace

std::string WatermarkMessage::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string hex;
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    int nibble = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      nibble <<= 1;
      if (i + j < bits.size()) nibble |= bits[i + j] & 1;
    }
    hex.push_back(kDigits[nibble]);
  }
  return hex;
}

WatermarkMessage WatermarkMessage::from_hex(const std::string& hex, std::size_t bit_count) {
  if (bit_count > hex.size() * 4) {
    throw Error(ErrorKind::kParameter, "hex message too short for " + std::to_string(bit_count) + " bits");
  }
  WatermarkMessage msg;
  msg.bits.reserve(bit_count);
  for (std::size_t i = 0; i < bit_count; ++i) {
    const char ch = hex[i / 4];
    int nibble = 0;
    if (ch >= '0' && ch <= '9') {
      nibble = ch - '0';
    } else if (ch >= 'a' && ch <= 'f') {
      nibble = ch - 'a' + 10;
    } else if (ch >= 'A' && ch <= 'F') {
      nibble = ch - 'A' + 10;
    } else {
      throw Error(ErrorKind::kParameter, std::string("invalid hex digit '") + ch + "'");
    }
    msg.bits.push_back(static_cast<std::uint8_t>((nibble >> (3 - i % 4)) & 1));
  }
  return msg;
}

WatermarkMessage WatermarkMessage::random(std::size_t bit_count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WatermarkMessage msg;
  msg.bits.resize(bit_count);
  for (auto& b : msg.bits) b = static_cast<std::uint8_t>(rng() >> 63);
  return msg;
}

void EmbedConfig::validate() const {
  if (!(strength > 0.0) || !std::isfinite(strength)) {
    throw Error(ErrorKind::kParameter, "watermark strength must be positive and finite");
  }
  if (coeff_index < 1 || coeff_index > 63) {
    throw Error(ErrorKind::kParameter, "coeff_index must be in [1,63]");
  }
}

std::size_t watermark_capacity(int width, int height) noexcept {
  if (width < 0 || height < 0) return 0;
  return grid_for(width, height).count();
}

std::pair<int, int> zigzag_position(int index) {
  if (index < 0 || index >= kBlock * kBlock) {
    throw Error(ErrorKind::kParameter, "zig-zag index must be in [0,63]");
  }
  int k = 0;
  for (int s = 0; s <= 2 * (kBlock - 1); ++s) {
    const int lo = std::max(0, s - (kBlock - 1));
    const int hi = std::min(s, kBlock - 1);
    for (int t = 0; t <= hi - lo; ++t) {
      // odd diagonals run top-right to bottom-left, even ones the other way
      const int row = (s % 2 == 1) ? lo + t : hi - t;
      if (k++ == index) return {row, s - row};
    }
  }
  return {kBlock - 1, kBlock - 1};
}

namespace haar {

Subbands forward(const std::vector<double>& plane, int width, int height) {
  Subbands b;
  b.width = width / 2;
  b.height = height / 2;
  const auto n = static_cast<std::size_t>(b.width) * b.height;
  b.ll.resize(n);
  b.lh.resize(n);
  b.hl.resize(n);
  b.hh.resize(n);
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      const auto row0 = static_cast<std::size_t>(2 * y) * width;
      const auto row1 = row0 + width;
      const double p = plane[row0 + 2 * x];
      const double q = plane[row0 + 2 * x + 1];
      const double r = plane[row1 + 2 * x];
      const double s = plane[row1 + 2 * x + 1];
      const auto i = static_cast<std::size_t>(y) * b.width + x;
      b.ll[i] = (p + q + r + s) / 2.0;
      b.lh[i] = (p - q + r - s) / 2.0;
      b.hl[i] = (p + q - r - s) / 2.0;
      b.hh[i] = (p - q - r + s) / 2.0;
    }
  }
  return b;
}

void inverse(const Subbands& b, std::vector<double>& plane, int width) {
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      const auto i = static_cast<std::size_t>(y) * b.width + x;
      const auto row0 = static_cast<std::size_t>(2 * y) * width;
      const auto row1 = row0 + width;
      plane[row0 + 2 * x] = (b.ll[i] + b.lh[i] + b.hl[i] + b.hh[i]) / 2.0;
      plane[row0 + 2 * x + 1] = (b.ll[i] - b.lh[i] + b.hl[i] - b.hh[i]) / 2.0;
      plane[row1 + 2 * x] = (b.ll[i] + b.lh[i] - b.hl[i] - b.hh[i]) / 2.0;
      plane[row1 + 2 * x + 1] = (b.ll[i] - b.lh[i] - b.hl[i] + b.hh[i]) / 2.0;
    }
  }
}

}  // namespace haar

RasterImage embed_watermark(const RasterImage& img, const WatermarkMessage& msg, const EmbedConfig& cfg) {
  cfg.validate();
  check_capacity(img.width(), img.height(), msg.size());
  for (auto bit : msg.bits) {
    if (bit > 1) throw Error(ErrorKind::kInvariant, "message bits must be 0 or 1");
  }
  const auto [u, v] = zigzag_position(cfg.coeff_index);
  const Basis basis = dct_basis(u, v);
  const BlockGrid grid = grid_for(img.width(), img.height());

  RasterImage out = img;
  // First pass quantizes every block; later passes only touch blocks whose
  // bit did not survive 8-bit rounding or clamping.
  std::vector<bool> pending(msg.size(), true);
  for (int pass = 0; pass < kRefinePasses; ++pass) {
    const auto luma = luma_plane(out);
    auto plane = to_double(luma);
    auto bands = haar::forward(plane, out.width(), out.height());
    bool changed = false;
    for (std::size_t k = 0; k < msg.size(); ++k) {
      const double c = project(bands, k, grid, basis);
      if (!pending[k] && qim_decode(c, cfg.strength) == msg.bits[k]) continue;
      const double target = qim_encode(c, msg.bits[k], cfg.strength);
      if (target != c) {
        add_basis(bands, k, grid, basis, target - c);
        changed = true;
      }
    }
    if (!changed) break;
    haar::inverse(bands, plane, out.width());
    apply_luma(out, luma, plane);
    std::fill(pending.begin(), pending.end(), false);
  }
  return out;
}

WatermarkMessage extract_watermark(const RasterImage& img, std::size_t bit_count, const EmbedConfig& cfg) {
  cfg.validate();
  check_capacity(img.width(), img.height(), bit_count);
  const auto [u, v] = zigzag_position(cfg.coeff_index);
  const Basis basis = dct_basis(u, v);
  const BlockGrid grid = grid_for(img.width(), img.height());
  const auto bands = haar::forward(to_double(luma_plane(img)), img.width(), img.height());
  WatermarkMessage msg;
  msg.bits.resize(bit_count);
  for (std::size_t k = 0; k < bit_count; ++k) msg.bits[k] = qim_decode(project(bands, k, grid, basis), cfg.strength);
  return msg;
}

double bit_accuracy(const WatermarkMessage& a, const WatermarkMessage& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kParameter, "bit_accuracy requires equal-length messages");
  }
  if (a.size() == 0) throw Error(ErrorKind::kParameter, "bit_accuracy of empty messages");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += (a.bits[i] == b.bits[i]) ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

}  // namespace wmeval
