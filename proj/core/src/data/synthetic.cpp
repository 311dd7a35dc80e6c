#include "locjepa/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "locjepa/common/error.hpp"
#include "locjepa/common/rng.hpp"

namespace locjepa::data {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Ellipse {
  double cx, cy, ax, ay, angle;

  bool contains(double u, double v) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double dx = u - cx, dy = v - cy;
    const double ru = c * dx + s * dy;
    const double rv = -s * dx + c * dy;
    return (ru * ru) / (ax * ax) + (rv * rv) / (ay * ay) <= 1.0;
  }

  Ellipse grown(double by) const { return {cx, cy, ax + by, ay + by, angle}; }
};

// One deforming chamber: cavity ellipse plus a wall of fixed thickness.
struct Chamber {
  Ellipse rest;
  double wall;
  double phase;
  double amplitude;  // signed; negative moves in antiphase

  Ellipse cavity_at(double frame, double cycle) const {
    const double s = 1.0 + amplitude * std::sin(kTwoPi * frame / cycle + phase);
    Ellipse e = rest;
    e.ax *= s;
    e.ay *= s;
    e.cy += 0.01 * std::sin(kTwoPi * frame / cycle + phase);
    return e;
  }
};

struct Blob {
  Ellipse shape;
  double phase;
};

constexpr float kTissue = 0.30f;
constexpr float kCavity = 0.06f;
constexpr float kMainWall = 0.80f;
constexpr float kSecondCavity = 0.08f;
constexpr float kSecondWall = 0.70f;
constexpr float kBlob = 0.90f;

bool in_sector(double u, double v) {
  // Apex slightly above the top edge; 42 degree half-angle.
  const double dx = u - 0.5, dy = v + 0.02;
  const double r = std::hypot(dx, dy);
  if (r > 1.05) return false;
  return std::abs(std::atan2(dx, dy)) <= 42.0 * std::numbers::pi / 180.0;
}

}  // namespace

SyntheticVideo generate_synthetic_video(std::uint64_t seed, const PhantomParams& p) {
  if (p.frames == 0 || p.height == 0 || p.width == 0) {
    throw UsageError("synthetic video: frames, height and width must be positive");
  }
  if (p.patch_size > 0) {
    if (p.height % p.patch_size != 0) {
      throw UsageError("synthetic video: height " + std::to_string(p.height) +
                       " not divisible by patch size " + std::to_string(p.patch_size));
    }
    if (p.width % p.patch_size != 0) {
      throw UsageError("synthetic video: width " + std::to_string(p.width) +
                       " not divisible by patch size " + std::to_string(p.patch_size));
    }
  }
  if (p.num_structures == 0) throw UsageError("synthetic video: need at least one structure");
  if (p.cycle_frames <= 0.0) throw UsageError("synthetic video: cycle_frames must be positive");

  Rng rng(seed);
  const double cx = 0.5 + rng.uniform(-0.05, 0.05);
  Chamber main{{cx, 0.40 + rng.uniform(-0.04, 0.04), 0.11 + rng.uniform(-0.015, 0.015),
                0.19 + rng.uniform(-0.02, 0.02), rng.uniform(-0.25, 0.25)},
               0.06 + rng.uniform(-0.01, 0.01),
               rng.uniform(0.0, kTwoPi),
               p.motion_amplitude};
  Chamber second{{cx + rng.uniform(-0.03, 0.03), 0.79 + rng.uniform(-0.03, 0.03),
                  0.10 + rng.uniform(-0.01, 0.01), 0.075 + rng.uniform(-0.01, 0.01),
                  rng.uniform(-0.2, 0.2)},
                 0.05,
                 main.phase,
                 -0.7 * p.motion_amplitude};
  std::vector<Blob> blobs;
  for (std::size_t k = 3; k < p.num_structures; ++k) {
    blobs.push_back({{rng.uniform(0.3, 0.7), rng.uniform(0.2, 0.9), rng.uniform(0.03, 0.06),
                      rng.uniform(0.03, 0.06), rng.uniform(0.0, std::numbers::pi)},
                     rng.uniform(0.0, kTwoPi)});
  }
  Rng noise = rng.split();

  SyntheticVideo out{Tensor<float>({p.frames, p.height, p.width}),
                     Tensor<std::int32_t>({p.frames, p.height, p.width})};
  const auto n_struct = static_cast<std::int32_t>(p.num_structures);
  for (std::size_t f = 0; f < p.frames; ++f) {
    const double fr = static_cast<double>(f);
    const Ellipse cav = main.cavity_at(fr, p.cycle_frames);
    const Ellipse wall = cav.grown(main.wall);
    const Ellipse cav2 = second.cavity_at(fr, p.cycle_frames);
    const Ellipse wall2 = cav2.grown(second.wall);
    for (std::size_t y = 0; y < p.height; ++y) {
      for (std::size_t x = 0; x < p.width; ++x) {
        const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(p.width);
        const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(p.height);
        float value = in_sector(u, v) ? kTissue : 0.0f;
        std::int32_t label = 0;
        if (n_struct >= 3 && wall2.contains(u, v)) {
          if (cav2.contains(u, v)) {
            value = kSecondCavity;
          } else {
            value = kSecondWall;
            label = 3;
          }
        }
        for (std::size_t b = 0; b < blobs.size(); ++b) {
          Ellipse e = blobs[b].shape;
          e.cx += 0.02 * std::sin(kTwoPi * fr / p.cycle_frames + blobs[b].phase);
          if (e.contains(u, v)) {
            value = kBlob;
            label = static_cast<std::int32_t>(4 + b);
          }
        }
        if (n_struct >= 2 && wall.contains(u, v)) {
          value = kMainWall;
          label = 2;
        }
        if (cav.contains(u, v)) {
          value = kCavity;
          label = 1;
        }
        if (p.speckle > 0.0) {
          value = static_cast<float>(value * (1.0 + p.speckle * noise.normal()));
        }
        const std::size_t k = (f * p.height + y) * p.width + x;
        out.frames.data[k] = std::clamp(value, 0.0f, 1.0f);
        out.labels.data[k] = label;
      }
    }
  }
  return out;
}

}  // namespace locjepa::data
