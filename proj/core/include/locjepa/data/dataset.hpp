#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "locjepa/common/rng.hpp"
#include "locjepa/diff/tensor.hpp"

namespace locjepa::data {

struct VideoClip {
  Tensor<float> frames;  // [T, H, W]
  std::string source_id;
  std::size_t start_frame = 0;
};

struct SegmentationMask {
  Tensor<std::int32_t> labels;  // [T, H, W]
  std::int32_t num_classes = 3; // foreground classes; background is 0
};

/// Frame indices start + k * frame_step for k < clip_frames.
std::vector<std::size_t> clip_frame_indices(std::size_t video_length, std::size_t frame_step,
                                            std::size_t clip_frames, std::size_t start);

/// Number of valid clip starts; throws DataError naming the minimum length
/// when the video is too short.
std::size_t clip_start_count(std::size_t video_length, std::size_t frame_step,
                             std::size_t clip_frames);

template <class T>
Tensor<T> take_frames(const Tensor<T>& video, std::span<const std::size_t> frames);

VideoClip sample_clip(const Tensor<float>& video, std::size_t frame_step, std::size_t clip_frames,
                      Rng& rng, const std::string& source_id = {});

VideoClip clip_at(const Tensor<float>& video, std::size_t frame_step, std::size_t clip_frames,
                  std::size_t start, const std::string& source_id = {});

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  int fraction = 100;
  std::uint64_t seed = 0;

  /// Throws DataError when any id appears in two lists.
  void validate() const;
};

/// Seeded shuffle of the sorted train ids, prefix of ceil(n * fraction / 100),
/// returned sorted. Prefixes are nested across fractions for one seed.
std::vector<std::string> subsample_train(const DatasetSplit& split, int fraction,
                                         std::uint64_t seed);

struct VideoRecord {
  std::string id;
  Tensor<float> frames;                       // [L, H, W]
  std::optional<Tensor<std::int32_t>> labels; // [L, H, W]
};

/// `<root>/<split>/<video_id>/frames.vtns` with optional `labels.vtns`.
std::filesystem::path video_dir(const std::filesystem::path& root, const std::string& split,
                                const std::string& id);
void write_video(const std::filesystem::path& root, const std::string& split,
                 const VideoRecord& video);
std::vector<std::string> list_split(const std::filesystem::path& root, const std::string& split);
VideoRecord read_video(const std::filesystem::path& root, const std::string& split,
                       const std::string& id);
std::vector<VideoRecord> read_split(const std::filesystem::path& root, const std::string& split,
                                    const std::vector<std::string>& ids = {});

}  // namespace locjepa::data
