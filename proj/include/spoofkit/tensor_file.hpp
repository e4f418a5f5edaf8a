#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace spoofkit {

// Binary container shared by checkpoints and embedding stores:
//
//   bytes 0..3   magic "SPKT"
//   bytes 4..7   uint32 LE format version (1)
//   bytes 8..15  uint64 LE header length H
//   H bytes      UTF-8 JSON header: {"format", "version", "meta", "tensors": [{name, shape}]}
//   rest         float32 LE values of each tensor, row-major, in header order
struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> values;
};

struct TensorFile {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const NamedTensor& at(std::string_view name) const;
};

inline constexpr std::uint32_t kTensorFileVersion = 1;

std::string encode_tensor_file(const TensorFile& file);
TensorFile decode_tensor_file(std::string_view bytes);

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile read_tensor_file(const std::filesystem::path& path);

}  // namespace spoofkit
