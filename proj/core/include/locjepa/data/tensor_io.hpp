#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "locjepa/common/error.hpp"
#include "locjepa/diff/tensor.hpp"

namespace locjepa::data {

// VTNS layout (little-endian):
//   "VTNS" | u8 version=1 | u8 dtype | u8 ndim | u8 reserved=0 | ndim x u64 dims | payload
inline constexpr std::uint8_t kTensorFormatVersion = 1;

enum class TensorIoErrc {
  io_failure,
  bad_magic,
  bad_version,
  bad_dtype,
  dtype_mismatch,
  truncated,
  trailing_bytes,
};

std::string_view to_string(TensorIoErrc code);

class TensorIoError : public DataError {
 public:
  TensorIoError(TensorIoErrc code, const std::string& what)
      : DataError(what), code_(code) {}
  TensorIoErrc code() const noexcept { return code_; }

 private:
  TensorIoErrc code_;
};

std::vector<std::uint8_t> encode_tensor(const AnyTensor& t);
AnyTensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const AnyTensor& t);
AnyTensor read_tensor(const std::filesystem::path& path);

/// Reads and requires a specific dtype; mismatch -> TensorIoErrc::dtype_mismatch.
template <class T>
Tensor<T> read_tensor_as(const std::filesystem::path& path);

template <class T>
Tensor<T> decode_tensor_as(std::span<const std::uint8_t> bytes, const std::string& label);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace locjepa::data
