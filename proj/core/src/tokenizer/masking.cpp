#include "locjepa/tokenizer/masking.hpp"

#include <algorithm>
#include <cmath>

#include "locjepa/common/error.hpp"

namespace locjepa::tok {

MaskStrategy parse_mask_strategy(const std::string& name) {
  if (name == "multiblock") return MaskStrategy::multiblock;
  if (name == "random") return MaskStrategy::random;
  throw UsageError("unknown mask strategy '" + name + "' (expected multiblock|random)");
}

std::string to_string(MaskStrategy s) {
  return s == MaskStrategy::multiblock ? "multiblock" : "random";
}

void MaskPartition::validate(std::size_t token_count) const {
  std::vector<char> seen(token_count, 0);
  for (const auto* list : {&masked, &visible}) {
    if (!std::is_sorted(list->begin(), list->end())) throw ShapeError("mask partition: unsorted");
    for (auto k : *list) {
      if (k >= token_count) throw ShapeError("mask partition: index out of range");
      if (seen[k]++) throw ShapeError("mask partition: token " + std::to_string(k) + " repeated");
    }
  }
  if (masked.size() + visible.size() != token_count) {
    throw ShapeError("mask partition: does not cover the grid");
  }
}

namespace {

MaskPartition from_flags(const std::vector<char>& masked_flag) {
  MaskPartition m;
  for (std::size_t k = 0; k < masked_flag.size(); ++k) {
    (masked_flag[k] ? m.masked : m.visible).push_back(k);
  }
  return m;
}

void check_counts(std::size_t masked, std::size_t total, double ratio) {
  if (masked < 2 || total - masked < 1) {
    throw UsageError("mask ratio " + std::to_string(ratio) + " leaves " + std::to_string(masked) +
                     " masked and " + std::to_string(total - masked) +
                     " visible tokens (need >= 2 masked, >= 1 visible)");
  }
}

}  // namespace

MaskPartition make_mask(const TokenGrid& grid, MaskStrategy strategy, double ratio, Rng& rng,
                        const MultiblockParams& block) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw UsageError("mask ratio must lie in (0, 1), got " + std::to_string(ratio));
  }
  const std::size_t n = grid.count();
  if (strategy == MaskStrategy::random) {
    const auto n_masked = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    check_counts(n_masked, n, ratio);
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    for (std::size_t k = 0; k < n_masked; ++k) {
      std::swap(order[k], order[k + rng.index(n - k)]);
    }
    std::vector<char> flag(n, 0);
    for (std::size_t k = 0; k < n_masked; ++k) flag[order[k]] = 1;
    return from_flags(flag);
  }

  const std::size_t cells = grid.i * grid.j;
  const auto target = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(cells) - 1e-9));
  check_counts(target * grid.t, n, ratio);
  if (target >= cells) check_counts(n, n, ratio);

  std::vector<char> cell(cells, 0);
  std::size_t masked = 0;
  std::size_t rejections = 0;
  const double log_lo = std::log(block.min_aspect), log_hi = std::log(block.max_aspect);
  while (masked < target) {
    std::size_t top, left, h, w;
    if (rejections < 200) {
      const double area = rng.uniform(block.min_block_scale, block.max_block_scale) *
                          static_cast<double>(cells);
      const double aspect = std::exp(rng.uniform(log_lo, log_hi));
      h = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::sqrt(area * aspect))),
                                  1, grid.i);
      w = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::sqrt(area / aspect))),
                                  1, grid.j);
      top = rng.index(grid.i - h + 1);
      left = rng.index(grid.j - w + 1);
    } else {
      // Near-saturated masks: single-cell blocks over still-visible cells.
      std::vector<std::size_t> open;
      for (std::size_t c = 0; c < cells; ++c)
        if (!cell[c]) open.push_back(c);
      const auto c = open[rng.index(open.size())];
      top = c / grid.j;
      left = c % grid.j;
      h = w = 1;
    }
    std::size_t added = 0;
    for (std::size_t y = top; y < top + h; ++y)
      for (std::size_t x = left; x < left + w; ++x) added += cell[y * grid.j + x] ? 0 : 1;
    if (masked + added >= cells) {
      ++rejections;
      continue;
    }
    for (std::size_t y = top; y < top + h; ++y)
      for (std::size_t x = left; x < left + w; ++x) cell[y * grid.j + x] = 1;
    masked += added;
  }

  std::vector<char> flag(n, 0);
  for (std::size_t t = 0; t < grid.t; ++t)
    for (std::size_t c = 0; c < cells; ++c) flag[t * cells + c] = cell[c];
  return from_flags(flag);
}

}  // namespace locjepa::tok
