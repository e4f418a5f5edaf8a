#include "spoofkit/tensor_file.hpp"

#include <bit>
#include <cstring>

#include "spoofkit/error.hpp"
#include "spoofkit/io.hpp"

namespace spoofkit {
namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor files are written in native little-endian order");

template <class T>
void append_le(std::string& out, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.append(raw, sizeof(T));
}

template <class T>
T read_le(std::string_view bytes, std::size_t at) {
  T value;
  std::memcpy(&value, bytes.data() + at, sizeof(T));
  return value;
}

std::size_t element_count(const std::vector<std::int64_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw ValidationError("negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

const NamedTensor& TensorFile::at(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw ValidationError("tensor '" + std::string(name) + "' not found");
}

std::string encode_tensor_file(const TensorFile& file) {
  nlohmann::json header;
  header["format"] = "spoofkit-tensors";
  header["version"] = kTensorFileVersion;
  header["meta"] = file.meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : file.tensors) {
    if (element_count(t.shape) != t.values.size())
      throw ValidationError("tensor '" + t.name + "' shape does not match its value count");
    header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}});
  }
  const auto text = header.dump();

  std::string out = "SPKT";
  append_le<std::uint32_t>(out, kTensorFileVersion);
  append_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& t : file.tensors)
    out.append(reinterpret_cast<const char*>(t.values.data()), t.values.size() * sizeof(float));
  return out;
}

TensorFile decode_tensor_file(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 4) != "SPKT")
    throw ValidationError("not a spoofkit tensor file");
  const auto version = read_le<std::uint32_t>(bytes, 4);
  if (version != kTensorFileVersion)
    throw ValidationError("unsupported tensor file version " + std::to_string(version));
  const auto header_len = read_le<std::uint64_t>(bytes, 8);
  if (16 + header_len > bytes.size()) throw ValidationError("truncated tensor file header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed tensor file header: ") + e.what());
  }

  TensorFile file;
  file.meta = header.value("meta", nlohmann::json::object());
  std::size_t pos = 16 + header_len;
  for (const auto& entry : header.at("tensors")) {
    NamedTensor t;
    t.name = entry.at("name").get<std::string>();
    t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const auto n = element_count(t.shape);
    if (pos + n * sizeof(float) > bytes.size())
      throw ValidationError("tensor file truncated inside '" + t.name + "'");
    t.values.resize(n);
    std::memcpy(t.values.data(), bytes.data() + pos, n * sizeof(float));
    pos += n * sizeof(float);
    file.tensors.push_back(std::move(t));
  }
  if (pos != bytes.size()) throw ValidationError("tensor file has trailing bytes");
  return file;
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
  write_file(path, encode_tensor_file(file));
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_tensor_file(bytes);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": malformed header: " + e.what());
  }
}

}  // namespace spoofkit
