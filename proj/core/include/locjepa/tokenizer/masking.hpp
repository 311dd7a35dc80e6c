#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "locjepa/common/rng.hpp"
#include "locjepa/tokenizer/grid.hpp"

namespace locjepa::tok {

enum class MaskStrategy { multiblock, random };

MaskStrategy parse_mask_strategy(const std::string& name);
std::string to_string(MaskStrategy s);

/// Disjoint, exhaustive split of the grid into masked (predicted) and
/// visible (context) tokens; both lists sorted by flat index.
struct MaskPartition {
  std::vector<std::size_t> masked;
  std::vector<std::size_t> visible;

  /// Throws ShapeError unless the lists partition [0, token_count).
  void validate(std::size_t token_count) const;
};

struct MultiblockParams {
  double min_block_scale = 0.10;  // block area as a fraction of spatial cells
  double max_block_scale = 0.30;
  double min_aspect = 0.75;
  double max_aspect = 1.5;
};

/// multiblock: rectangular spatial blocks masked through every temporal slot,
/// unioned until the masked fraction reaches `ratio` (at least one spatial
/// cell stays visible). random: exactly round(ratio * count) tokens.
MaskPartition make_mask(const TokenGrid& grid, MaskStrategy strategy, double ratio, Rng& rng,
                        const MultiblockParams& block = {});

}  // namespace locjepa::tok
