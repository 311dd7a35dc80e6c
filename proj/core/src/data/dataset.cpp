#include "locjepa/data/dataset.hpp"

#include <algorithm>
#include <set>

#include "locjepa/common/error.hpp"
#include "locjepa/data/tensor_io.hpp"

namespace locjepa::data {

std::size_t clip_start_count(std::size_t video_length, std::size_t frame_step,
                             std::size_t clip_frames) {
  if (frame_step == 0 || clip_frames == 0) {
    throw UsageError("clip sampling: frame_step and clip length must be positive");
  }
  const std::size_t span = (clip_frames - 1) * frame_step + 1;
  if (video_length < span) {
    throw DataError("video too short: " + std::to_string(clip_frames) + " frames at step " +
                    std::to_string(frame_step) + " require at least " + std::to_string(span) +
                    " frames, got " + std::to_string(video_length));
  }
  return video_length - span + 1;
}

std::vector<std::size_t> clip_frame_indices(std::size_t video_length, std::size_t frame_step,
                                            std::size_t clip_frames, std::size_t start) {
  const auto starts = clip_start_count(video_length, frame_step, clip_frames);
  if (start >= starts) {
    throw DataError("clip start " + std::to_string(start) + " leaves too few frames");
  }
  std::vector<std::size_t> idx(clip_frames);
  for (std::size_t k = 0; k < clip_frames; ++k) idx[k] = start + k * frame_step;
  return idx;
}

template <class T>
Tensor<T> take_frames(const Tensor<T>& video, std::span<const std::size_t> frames) {
  if (video.ndim() != 3) throw ShapeError("take_frames: expected [L, H, W], got " + locjepa::to_string(video.shape));
  const auto plane = video.dim(1) * video.dim(2);
  Tensor<T> out({frames.size(), video.dim(1), video.dim(2)});
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k] >= video.dim(0)) throw ShapeError("take_frames: frame index out of range");
    std::copy_n(video.data.begin() + static_cast<std::ptrdiff_t>(frames[k] * plane), plane,
                out.data.begin() + static_cast<std::ptrdiff_t>(k * plane));
  }
  return out;
}

template Tensor<float> take_frames(const Tensor<float>&, std::span<const std::size_t>);
template Tensor<std::int32_t> take_frames(const Tensor<std::int32_t>&,
                                          std::span<const std::size_t>);

VideoClip clip_at(const Tensor<float>& video, std::size_t frame_step, std::size_t clip_frames,
                  std::size_t start, const std::string& source_id) {
  const auto idx = clip_frame_indices(video.dim(0), frame_step, clip_frames, start);
  return {take_frames(video, idx), source_id, start};
}

VideoClip sample_clip(const Tensor<float>& video, std::size_t frame_step, std::size_t clip_frames,
                      Rng& rng, const std::string& source_id) {
  if (video.ndim() != 3) throw ShapeError("sample_clip: expected [L, H, W], got " + locjepa::to_string(video.shape));
  const auto starts = clip_start_count(video.dim(0), frame_step, clip_frames);
  const auto start = static_cast<std::size_t>(rng.index(starts));
  return clip_at(video, frame_step, clip_frames, start, source_id);
}

void DatasetSplit::validate() const {
  std::set<std::string> seen;
  for (const auto* list : {&train_ids, &val_ids, &test_ids}) {
    std::set<std::string> local(list->begin(), list->end());
    for (const auto& id : local) {
      if (!seen.insert(id).second) throw DataError("dataset split: id '" + id + "' is in two splits");
    }
  }
}

std::vector<std::string> subsample_train(const DatasetSplit& split, int fraction,
                                         std::uint64_t seed) {
  if (split.train_ids.empty()) throw DataError("subsample_train: empty train set");
  if (fraction <= 0 || fraction > 100) {
    throw UsageError("subsample_train: fraction must be in (0, 100], got " +
                     std::to_string(fraction));
  }
  std::vector<std::string> ids = split.train_ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Rng rng(seed);
  // Fisher-Yates over the normalized order.
  for (std::size_t k = ids.size(); k > 1; --k) {
    std::swap(ids[k - 1], ids[rng.index(k)]);
  }
  const std::size_t keep =
      (ids.size() * static_cast<std::size_t>(fraction) + 99) / 100;
  ids.resize(keep);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::filesystem::path video_dir(const std::filesystem::path& root, const std::string& split,
                                const std::string& id) {
  return root / split / id;
}

void write_video(const std::filesystem::path& root, const std::string& split,
                 const VideoRecord& video) {
  const auto dir = video_dir(root, split, video.id);
  std::filesystem::create_directories(dir);
  write_tensor(dir / "frames.vtns", video.frames);
  if (video.labels) write_tensor(dir / "labels.vtns", *video.labels);
}

std::vector<std::string> list_split(const std::filesystem::path& root, const std::string& split) {
  const auto dir = root / split;
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("dataset split directory missing: " + dir.string());
  }
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "frames.vtns")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

VideoRecord read_video(const std::filesystem::path& root, const std::string& split,
                       const std::string& id) {
  const auto dir = video_dir(root, split, id);
  VideoRecord rec{id, read_tensor_as<float>(dir / "frames.vtns"), std::nullopt};
  if (rec.frames.ndim() != 3) {
    throw DataError(dir.string() + ": frames must be [L, H, W], got " + locjepa::to_string(rec.frames.shape));
  }
  if (std::filesystem::exists(dir / "labels.vtns")) {
    rec.labels = read_tensor_as<std::int32_t>(dir / "labels.vtns");
    if (rec.labels->shape != rec.frames.shape) {
      throw DataError(dir.string() + ": labels shape " + locjepa::to_string(rec.labels->shape) +
                      " differs from frames " + locjepa::to_string(rec.frames.shape));
    }
  }
  return rec;
}

std::vector<VideoRecord> read_split(const std::filesystem::path& root, const std::string& split,
                                    const std::vector<std::string>& ids) {
  const auto names = ids.empty() ? list_split(root, split) : ids;
  std::vector<VideoRecord> out;
  out.reserve(names.size());
  for (const auto& id : names) out.push_back(read_video(root, split, id));
  return out;
}

}  // namespace locjepa::data
