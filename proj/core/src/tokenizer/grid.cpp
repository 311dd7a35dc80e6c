#include "locjepa/tokenizer/grid.hpp"

#include <string>

#include "locjepa/common/error.hpp"

namespace locjepa::tok {
namespace {

std::size_t divide_axis(const char* axis, std::size_t extent, std::size_t part) {
  if (part == 0) throw UsageError(std::string("tokenizer: zero tubelet size on axis ") + axis);
  if (extent == 0 || extent % part != 0) {
    throw ShapeError(std::string("tokenizer: axis ") + axis + " of size " +
                     std::to_string(extent) + " is not divisible by tubelet size " +
                     std::to_string(part));
  }
  return extent / part;
}

}  // namespace

TokenGrid TokenGrid::for_clip(std::size_t frames, std::size_t height, std::size_t width,
                              std::size_t tubelet_frames, std::size_t patch_h,
                              std::size_t patch_w, std::size_t embed_dim) {
  TokenGrid g;
  g.t = divide_axis("T (frames)", frames, tubelet_frames);
  g.i = divide_axis("H (height)", height, patch_h);
  g.j = divide_axis("W (width)", width, patch_w);
  g.tubelet_frames = tubelet_frames;
  g.patch_h = patch_h;
  g.patch_w = patch_w;
  g.embed_dim = embed_dim;
  return g;
}

PixelSlot pixel_slot(const TokenGrid& g, std::size_t frame, std::size_t y, std::size_t x) {
  if (frame >= g.frames() || y >= g.height() || x >= g.width()) {
    throw ShapeError("pixel_slot: pixel outside the clip");
  }
  const TokenIndex p{frame / g.tubelet_frames, y / g.patch_h, x / g.patch_w};
  const std::size_t offset =
      ((frame % g.tubelet_frames) * g.patch_h + y % g.patch_h) * g.patch_w + x % g.patch_w;
  return {g.flat(p), offset};
}

std::vector<TokenIndex> positions_of(const TokenGrid& grid, const std::vector<std::size_t>& flat) {
  std::vector<TokenIndex> out;
  out.reserve(flat.size());
  for (auto k : flat) out.push_back(grid.unflat(k));
  return out;
}

}  // namespace locjepa::tok
