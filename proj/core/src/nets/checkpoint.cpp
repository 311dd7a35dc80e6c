#include "locjepa/nets/checkpoint.hpp"

#include <array>
#include <cstring>

#include "locjepa/common/error.hpp"
#include "locjepa/data/tensor_io.hpp"

namespace locjepa::nets {
namespace {

constexpr std::array<char, 4> kMagic{'V', 'C', 'K', 'P'};
constexpr std::uint8_t kVersion = 1;

template <class U>
void put(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(std::uint8_t(v >> (8 * b)));
}

void put_bytes(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> bytes) {
  out.insert(out.end(), bytes.begin(), bytes.end());
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
  std::string path;

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > bytes.size() - pos) {
      throw DataError("checkpoint " + path + ": truncated at byte " + std::to_string(pos));
    }
    auto s = bytes.subspan(pos, n);
    pos += n;
    return s;
  }
  template <class U>
  U get() {
    const auto s = take(sizeof(U));
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) v |= U(s[b]) << (8 * b);
    return v;
  }
};

}  // namespace

const AnyTensor* CheckpointFile::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& ckpt) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.push_back(kVersion);
  out.insert(out.end(), 3, 0);
  const auto manifest = ckpt.manifest.dump();
  put<std::uint64_t>(out, manifest.size());
  out.insert(out.end(), manifest.begin(), manifest.end());
  put<std::uint64_t>(out, ckpt.tensors.size());
  for (const auto& [name, tensor] : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    const auto blob = data::encode_tensor(tensor);
    put<std::uint64_t>(out, blob.size());
    put_bytes(out, blob);
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  data::write_file_bytes(tmp, out);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("checkpoint " + path.string() + ": " + ec.message());
}

CheckpointFile read_checkpoint(const std::filesystem::path& path) {
  const auto bytes = data::read_file_bytes(path);
  Reader r{bytes, 0, path.string()};
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic.data(), 4) != 0) {
    throw DataError("checkpoint " + r.path + ": bad magic");
  }
  const auto version = r.get<std::uint8_t>();
  if (version != kVersion) {
    throw DataError("checkpoint " + r.path + ": unsupported version " + std::to_string(version));
  }
  r.take(3);
  CheckpointFile ckpt;
  const auto mlen = r.get<std::uint64_t>();
  const auto mbytes = r.take(mlen);
  try {
    ckpt.manifest = nlohmann::json::parse(mbytes.begin(), mbytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + r.path + ": bad manifest: " + e.what());
  }
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto nlen = r.get<std::uint32_t>();
    const auto nb = r.take(nlen);
    std::string name(nb.begin(), nb.end());
    const auto blen = r.get<std::uint64_t>();
    try {
      ckpt.tensors.emplace_back(name, data::decode_tensor(r.take(blen)));
    } catch (const data::TensorIoError& e) {
      throw DataError("checkpoint " + r.path + ": tensor '" + name + "': " + e.what());
    }
  }
  if (r.pos != bytes.size()) throw DataError("checkpoint " + r.path + ": trailing bytes");
  return ckpt;
}

template <class Real>
void export_params(CheckpointFile& ckpt, const ParamStore<Real>& store,
                   const std::string& prefix) {
  for (const auto& e : store.entries()) ckpt.tensors.emplace_back(prefix + e.name, e.var.to_tensor());
}

template <class Real>
void import_params(const CheckpointFile& ckpt, ParamStore<Real>& store,
                   const std::string& prefix) {
  std::string problems;
  for (auto& e : store.entries()) {
    const auto name = prefix + e.name;
    const auto* found = ckpt.find(name);
    if (found == nullptr) {
      problems += "\n  missing " + name;
      continue;
    }
    const auto* t = std::get_if<Tensor<Real>>(found);
    if (t == nullptr) {
      problems += "\n  " + name + ": dtype " + std::string(dtype_name(dtype_of(*found))) +
                  ", expected " + std::string(dtype_name(dtype_of<Real>()));
      continue;
    }
    if (t->shape != e.var.shape()) {
      problems += "\n  " + name + ": shape " + to_string(t->shape) + ", expected " +
                  to_string(e.var.shape());
      continue;
    }
    std::copy(t->data.begin(), t->data.end(), e.var.mutable_value().begin());
  }
  if (!problems.empty()) throw DataError("checkpoint does not match model:" + problems);
}

template void export_params<float>(CheckpointFile&, const ParamStore<float>&, const std::string&);
template void export_params<double>(CheckpointFile&, const ParamStore<double>&, const std::string&);
template void import_params<float>(const CheckpointFile&, ParamStore<float>&, const std::string&);
template void import_params<double>(const CheckpointFile&, ParamStore<double>&, const std::string&);

}  // namespace locjepa::nets
