#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace spoofkit {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits. Used for config and
// input fingerprints embedded in output artifacts.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// printf-style "%.<digits>g" with a fixed C locale.
std::string format_g(double value, int digits);

}  // namespace spoofkit
