#pragma once

#include <cstddef>
#include <cstdint>

#include "locjepa/diff/tensor.hpp"

namespace locjepa::data {

/// Phantom parameters for the ultrasound-like generator.
struct PhantomParams {
  std::size_t frames = 32;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t num_structures = 3;   // foreground classes 1..num_structures
  double motion_amplitude = 0.15;   // relative axis change over a cycle
  double cycle_frames = 16.0;       // frames per deformation cycle
  double speckle = 0.25;            // multiplicative noise strength
  std::size_t patch_size = 0;       // 0 disables the divisibility check
};

struct SyntheticVideo {
  Tensor<float> frames;          // [L, H, W] in [0, 1]
  Tensor<std::int32_t> labels;   // [L, H, W] in [0, num_structures]
};

/// Deforming elliptical structures with bright walls inside a sector-shaped
/// field of view, with multiplicative speckle. Deterministic in `seed`.
///   class 1: cavity (dark), class 2: wall around the cavity (bright),
///   class 3: wall of a second, smaller chamber; further classes add
///   bright blobs at random positions.
SyntheticVideo generate_synthetic_video(std::uint64_t seed, const PhantomParams& params);

}  // namespace locjepa::data
