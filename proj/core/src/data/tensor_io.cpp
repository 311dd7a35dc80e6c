#include "locjepa/data/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace locjepa::data {
namespace {

constexpr char kMagic[4] = {'V', 'T', 'N', 'S'};
constexpr std::size_t kFixedHeader = 8;

template <class T>
void append_le(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <class T>
T load_le(const std::uint8_t* p) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

std::size_t element_size(DType d) {
  switch (d) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::i32: return 4;
  }
  return 0;
}

template <class T>
Tensor<T> decode_payload(const Shape& shape, const std::uint8_t* p) {
  Tensor<T> t(shape);
  for (std::size_t k = 0; k < t.data.size(); ++k) t.data[k] = load_le<T>(p + k * sizeof(T));
  return t;
}

}  // namespace

std::string_view to_string(TensorIoErrc code) {
  switch (code) {
    case TensorIoErrc::io_failure: return "io_failure";
    case TensorIoErrc::bad_magic: return "bad_magic";
    case TensorIoErrc::bad_version: return "bad_version";
    case TensorIoErrc::bad_dtype: return "bad_dtype";
    case TensorIoErrc::dtype_mismatch: return "dtype_mismatch";
    case TensorIoErrc::truncated: return "truncated";
    case TensorIoErrc::trailing_bytes: return "trailing_bytes";
  }
  return "unknown";
}

std::vector<std::uint8_t> encode_tensor(const AnyTensor& any) {
  std::vector<std::uint8_t> out;
  const Shape& shape = shape_of(any);
  if (shape.size() > 255) throw TensorIoError(TensorIoErrc::io_failure, "tensor rank exceeds 255");
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kTensorFormatVersion);
  out.push_back(static_cast<std::uint8_t>(dtype_of(any)));
  out.push_back(static_cast<std::uint8_t>(shape.size()));
  out.push_back(0);
  for (auto d : shape) append_le<std::uint64_t>(out, d);
  std::visit(
      [&out](const auto& t) {
        out.reserve(out.size() + t.data.size() * sizeof(t.data[0]));
        for (auto v : t.data) append_le(out, v);
      },
      any);
  return out;
}

AnyTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedHeader || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw TensorIoError(TensorIoErrc::bad_magic, "not a VTNS tensor (bad magic)");
  }
  if (bytes[4] != kTensorFormatVersion) {
    throw TensorIoError(TensorIoErrc::bad_version,
                        "unsupported VTNS version " + std::to_string(bytes[4]));
  }
  if (bytes[5] > 2) {
    throw TensorIoError(TensorIoErrc::bad_dtype, "unknown dtype code " + std::to_string(bytes[5]));
  }
  const auto dtype = static_cast<DType>(bytes[5]);
  const std::size_t ndim = bytes[6];
  const std::size_t header = kFixedHeader + ndim * 8;
  if (bytes.size() < header) {
    throw TensorIoError(TensorIoErrc::truncated, "VTNS header truncated");
  }
  Shape shape(ndim);
  for (std::size_t k = 0; k < ndim; ++k) shape[k] = load_le<std::uint64_t>(&bytes[kFixedHeader + 8 * k]);
  const std::size_t expected = numel(shape) * element_size(dtype);
  const std::size_t actual = bytes.size() - header;
  if (actual < expected) {
    throw TensorIoError(TensorIoErrc::truncated,
                        "VTNS payload truncated: header declares " + std::to_string(expected) +
                            " bytes, found " + std::to_string(actual));
  }
  if (actual > expected) {
    throw TensorIoError(TensorIoErrc::trailing_bytes,
                        "VTNS payload has " + std::to_string(actual - expected) +
                            " unexpected trailing bytes");
  }
  const std::uint8_t* p = bytes.data() + header;
  switch (dtype) {
    case DType::f32: return decode_payload<float>(shape, p);
    case DType::f64: return decode_payload<double>(shape, p);
    case DType::i32: return decode_payload<std::int32_t>(shape, p);
  }
  throw TensorIoError(TensorIoErrc::bad_dtype, "unknown dtype");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorIoError(TensorIoErrc::io_failure, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TensorIoError(TensorIoErrc::io_failure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw TensorIoError(TensorIoErrc::io_failure, "short write to " + path.string());
}

void write_tensor(const std::filesystem::path& path, const AnyTensor& t) {
  write_file_bytes(path, encode_tensor(t));
}

AnyTensor read_tensor(const std::filesystem::path& path) {
  return decode_tensor(read_file_bytes(path));
}

template <class T>
Tensor<T> decode_tensor_as(std::span<const std::uint8_t> bytes, const std::string& label) {
  AnyTensor any = decode_tensor(bytes);
  if (auto* t = std::get_if<Tensor<T>>(&any)) return std::move(*t);
  throw TensorIoError(TensorIoErrc::dtype_mismatch,
                      label + ": expected dtype " + std::string(dtype_name(dtype_of<T>())) +
                          ", found " + std::string(dtype_name(dtype_of(any))));
}

template <class T>
Tensor<T> read_tensor_as(const std::filesystem::path& path) {
  return decode_tensor_as<T>(read_file_bytes(path), path.string());
}

template Tensor<float> read_tensor_as<float>(const std::filesystem::path&);
template Tensor<double> read_tensor_as<double>(const std::filesystem::path&);
template Tensor<std::int32_t> read_tensor_as<std::int32_t>(const std::filesystem::path&);
template Tensor<float> decode_tensor_as<float>(std::span<const std::uint8_t>, const std::string&);
template Tensor<double> decode_tensor_as<double>(std::span<const std::uint8_t>, const std::string&);
template Tensor<std::int32_t> decode_tensor_as<std::int32_t>(std::span<const std::uint8_t>,
                                                             const std::string&);

}  // namespace locjepa::data
