#include "locjepa/tokenizer/tokenize.hpp"

#include <cmath>

#include "locjepa/common/error.hpp"
#include "locjepa/diff/ops.hpp"

namespace locjepa::tok {
namespace {

void check_clip(const Tensor<float>& clip, const TokenGrid& grid) {
  if (clip.ndim() != 3) {
    throw ShapeError("tokenize: clip must be [T, H, W], got " + to_string(clip.shape));
  }
  // Re-derive the grid so indivisible axes are reported by name.
  const TokenGrid derived = TokenGrid::for_clip(clip.dim(0), clip.dim(1), clip.dim(2),
                                                grid.tubelet_frames, grid.patch_h, grid.patch_w,
                                                grid.embed_dim);
  if (derived.t != grid.t || derived.i != grid.i || derived.j != grid.j) {
    throw ShapeError("tokenize: clip " + to_string(clip.shape) +
                     " does not match the configured token grid");
  }
}

}  // namespace

template <class Real>
Tensor<Real> extract_patches(const Tensor<float>& clip, const TokenGrid& grid) {
  check_clip(clip, grid);
  const auto H = grid.height(), W = grid.width();
  Tensor<Real> out({grid.count(), grid.patch_volume()});
  for (std::size_t f = 0; f < grid.frames(); ++f)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const PixelSlot s = pixel_slot(grid, f, y, x);
        out.data[s.token * grid.patch_volume() + s.offset] =
            static_cast<Real>(clip.data[(f * H + y) * W + x]);
      }
  return out;
}

template <class Real>
Tensor<Real> assemble_patches(const Tensor<Real>& patches, const TokenGrid& grid) {
  if (patches.shape != Shape{grid.count(), grid.patch_volume()}) {
    throw ShapeError("assemble_patches: expected " +
                     to_string(Shape{grid.count(), grid.patch_volume()}) + ", got " +
                     to_string(patches.shape));
  }
  const auto H = grid.height(), W = grid.width();
  Tensor<Real> out({grid.frames(), H, W});
  for (std::size_t f = 0; f < grid.frames(); ++f)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const PixelSlot s = pixel_slot(grid, f, y, x);
        out.data[(f * H + y) * W + x] = patches.data[s.token * grid.patch_volume() + s.offset];
      }
  return out;
}

Tensor<float> standardize_clip(const Tensor<float>& clip) {
  if (clip.data.empty()) return clip;
  double mean = 0.0;
  for (auto v : clip.data) mean += v;
  mean /= double(clip.data.size());
  double var = 0.0;
  for (auto v : clip.data) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / double(clip.data.size()));
  const double inv = sd > 1e-6 ? 1.0 / sd : 0.0;
  Tensor<float> out(clip.shape);
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    out.data[k] = static_cast<float>((clip.data[k] - mean) * inv);
  }
  return out;
}

template <class Real>
diff::Var<Real> tokenize(const Tensor<float>& clip, const TokenGrid& grid,
                         const diff::Var<Real>& weight, const diff::Var<Real>& bias) {
  if (weight.shape() != Shape{grid.patch_volume(), grid.embed_dim}) {
    throw ShapeError("tokenize: projection weight " + to_string(weight.shape()) +
                     " does not map patch volume " + std::to_string(grid.patch_volume()) +
                     " to " + std::to_string(grid.embed_dim));
  }
  auto patches = diff::Var<Real>::leaf(extract_patches<Real>(clip, grid));
  return diff::add_row(diff::matmul(patches, weight), bias);
}

template Tensor<float> extract_patches<float>(const Tensor<float>&, const TokenGrid&);
template Tensor<double> extract_patches<double>(const Tensor<float>&, const TokenGrid&);
template Tensor<float> assemble_patches<float>(const Tensor<float>&, const TokenGrid&);
template Tensor<double> assemble_patches<double>(const Tensor<double>&, const TokenGrid&);
template diff::Var<float> tokenize<float>(const Tensor<float>&, const TokenGrid&,
                                          const diff::Var<float>&, const diff::Var<float>&);
template diff::Var<double> tokenize<double>(const Tensor<float>&, const TokenGrid&,
                                            const diff::Var<double>&, const diff::Var<double>&);

}  // namespace locjepa::tok
