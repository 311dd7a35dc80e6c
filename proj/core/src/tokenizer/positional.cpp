#include "locjepa/tokenizer/positional.hpp"

#include <cmath>

#include "locjepa/common/error.hpp"

namespace locjepa::tok {
namespace {

template <class Real>
void fill_band(Real* row, std::size_t width, std::size_t coord) {
  const std::size_t pairs = width / 2;
  for (std::size_t k = 0; k < pairs; ++k) {
    const double omega = std::pow(10000.0, -static_cast<double>(2 * k) / static_cast<double>(width));
    const double angle = static_cast<double>(coord) * omega;
    row[k] = static_cast<Real>(std::sin(angle));
    row[pairs + k] = static_cast<Real>(std::cos(angle));
  }
  if (width % 2) row[width - 1] = Real(0);
}

}  // namespace

BandSplit band_split(std::size_t dim) {
  if (dim == 0 || dim % 4 != 0) {
    throw UsageError("positional embedding: dimension " + std::to_string(dim) +
                     " is not divisible by 4");
  }
  return {dim / 2, dim / 4, dim / 4};
}

template <class Real>
Tensor<Real> positional_rows(const TokenGrid& grid, std::size_t dim,
                             std::span<const std::size_t> tokens) {
  const BandSplit bands = band_split(dim);
  Tensor<Real> out({tokens.size(), dim});
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    if (tokens[r] >= grid.count()) throw ShapeError("positional_rows: token index out of range");
    const TokenIndex p = grid.unflat(tokens[r]);
    Real* row = out.data.data() + r * dim;
    fill_band(row, bands.temporal, p.t);
    fill_band(row + bands.temporal, bands.vertical, p.i);
    fill_band(row + bands.temporal + bands.vertical, bands.horizontal, p.j);
  }
  return out;
}

template <class Real>
Tensor<Real> positional_embedding(const TokenGrid& grid, std::size_t dim) {
  std::vector<std::size_t> all(grid.count());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return positional_rows<Real>(grid, dim, all);
}

template Tensor<float> positional_embedding<float>(const TokenGrid&, std::size_t);
template Tensor<double> positional_embedding<double>(const TokenGrid&, std::size_t);
template Tensor<float> positional_rows<float>(const TokenGrid&, std::size_t,
                                              std::span<const std::size_t>);
template Tensor<double> positional_rows<double>(const TokenGrid&, std::size_t,
                                                std::span<const std::size_t>);

}  // namespace locjepa::tok
