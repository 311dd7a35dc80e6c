#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "locjepa/diff/tensor.hpp"
#include "locjepa/nets/params.hpp"

namespace locjepa::nets {

// Container layout (little-endian):
//   "VCKP" | u8 version=1 | 3 x u8 reserved | u64 manifest bytes | manifest JSON
//   | u64 tensor count | per tensor: u32 name bytes | name | u64 blob bytes | VTNS blob
struct CheckpointFile {
  nlohmann::json manifest = nlohmann::json::object();
  std::vector<std::pair<std::string, AnyTensor>> tensors;

  const AnyTensor* find(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& ckpt);
CheckpointFile read_checkpoint(const std::filesystem::path& path);

/// Appends every entry as `<prefix><name>`.
template <class Real>
void export_params(CheckpointFile& ckpt, const ParamStore<Real>& store,
                   const std::string& prefix = {});

/// Loads `<prefix><name>` into every store entry. All missing entries and
/// dtype/shape mismatches are collected into one DataError.
template <class Real>
void import_params(const CheckpointFile& ckpt, ParamStore<Real>& store,
                   const std::string& prefix = {});

}  // namespace locjepa::nets
