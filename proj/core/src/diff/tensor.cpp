#include "locjepa/diff/tensor.hpp"

#include <sstream>

#include "locjepa/common/error.hpp"

namespace locjepa {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k) out << ", ";
    out << shape[k];
  }
  out << ']';
  return out.str();
}

std::string_view dtype_name(DType d) {
  switch (d) {
    case DType::f32: return "f32";
    case DType::f64: return "f64";
    case DType::i32: return "i32";
  }
  return "unknown";
}

template <class T>
Tensor<T>::Tensor(Shape s, std::vector<T> values)
    : shape(std::move(s)), data(std::move(values)) {
  if (numel(shape) != data.size()) {
    throw ShapeError("tensor shape " + to_string(shape) + " holds " +
                     std::to_string(numel(shape)) + " values, got " +
                     std::to_string(data.size()));
  }
}

DType dtype_of(const AnyTensor& t) {
  return std::visit([](const auto& x) { return x.dtype(); }, t);
}

const Shape& shape_of(const AnyTensor& t) {
  return std::visit([](const auto& x) -> const Shape& { return x.shape; }, t);
}

template struct Tensor<float>;
template struct Tensor<double>;
template struct Tensor<std::int32_t>;

}  // namespace locjepa
