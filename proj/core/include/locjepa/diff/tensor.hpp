#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace locjepa {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

enum class DType : std::uint8_t { f32 = 0, f64 = 1, i32 = 2 };

template <class T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::f32; }
template <>
constexpr DType dtype_of<double>() { return DType::f64; }
template <>
constexpr DType dtype_of<std::int32_t>() { return DType::i32; }

std::string_view dtype_name(DType d);

/// Dense row-major buffer with a shape. Plain value type; no gradient.
template <class T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(numel(shape)) {}
  Tensor(Shape s, std::vector<T> values);

  static constexpr DType dtype() { return dtype_of<T>(); }
  std::size_t size() const { return data.size(); }
  std::size_t dim(std::size_t axis) const { return shape.at(axis); }
  std::size_t ndim() const { return shape.size(); }

  std::span<T> values() { return data; }
  std::span<const T> values() const { return data; }

  bool operator==(const Tensor&) const = default;
};

using AnyTensor = std::variant<Tensor<float>, Tensor<double>, Tensor<std::int32_t>>;

DType dtype_of(const AnyTensor& t);
const Shape& shape_of(const AnyTensor& t);

template <class To, class From>
Tensor<To> cast(const Tensor<From>& src) {
  Tensor<To> out;
  out.shape = src.shape;
  out.data.assign(src.data.begin(), src.data.end());
  return out;
}

}  // namespace locjepa
