#pragma once

#include <compare>
#include <cstddef>
#include <vector>

namespace locjepa::tok {

/// Tubelet coordinate: temporal slot t, token row i, token column j.
struct TokenIndex {
  std::size_t t = 0, i = 0, j = 0;
  auto operator<=>(const TokenIndex&) const = default;
};

struct TokenGrid {
  std::size_t t = 0, i = 0, j = 0;
  std::size_t tubelet_frames = 2;
  std::size_t patch_h = 16, patch_w = 16;
  std::size_t embed_dim = 0;

  /// Validates exact divisibility of T, H, W; errors name the axis.
  static TokenGrid for_clip(std::size_t frames, std::size_t height, std::size_t width,
                            std::size_t tubelet_frames, std::size_t patch_h, std::size_t patch_w,
                            std::size_t embed_dim);

  std::size_t count() const { return t * i * j; }
  std::size_t frames() const { return t * tubelet_frames; }
  std::size_t height() const { return i * patch_h; }
  std::size_t width() const { return j * patch_w; }
  std::size_t patch_volume() const { return tubelet_frames * patch_h * patch_w; }

  std::size_t flat(const TokenIndex& p) const { return (p.t * i + p.i) * j + p.j; }
  TokenIndex unflat(std::size_t k) const { return {k / (i * j), (k / j) % i, k % j}; }
  bool contains(const TokenIndex& p) const { return p.t < t && p.i < i && p.j < j; }

  bool operator==(const TokenGrid&) const = default;
};

/// Token owning pixel (frame, y, x) and the pixel's offset inside that token's
/// flattened (frame, row, col) patch.
struct PixelSlot {
  std::size_t token;
  std::size_t offset;
};
PixelSlot pixel_slot(const TokenGrid& grid, std::size_t frame, std::size_t y, std::size_t x);

std::vector<TokenIndex> positions_of(const TokenGrid& grid, const std::vector<std::size_t>& flat);

}  // namespace locjepa::tok
