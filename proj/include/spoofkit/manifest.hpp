#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spoofkit {

// Class index convention used across the toolkit: 0 = bona fide, 1 = spoof.
enum class Label : int { real = 0, fake = 1 };

enum class Subset { train, val, test };

std::string_view to_string(Label label);
std::string_view to_string(Subset subset);
Label parse_label(std::string_view text);
Subset parse_subset(std::string_view text);

struct ManifestEntry {
  std::string id;
  // Audio file or embedding file, relative to the manifest directory unless absolute.
  std::string source;
  Label label = Label::real;
  std::optional<std::string> attack;
  double duration_s = 0.0;
  std::optional<double> quality_sisdr_db;
  std::optional<std::string> codec_tag;
  std::optional<Subset> subset;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::string name;
  std::vector<ManifestEntry> entries;
  // Directory that relative sources are resolved against.
  std::filesystem::path base_dir;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  std::filesystem::path resolve(const ManifestEntry& entry) const;
  std::size_t count(Label label) const;
};

// Line-delimited JSON, one entry per line. Blank lines are skipped and unknown
// fields are ignored. Throws ValidationError naming the offending line.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::string_view text, std::string name = {});

// Sources that are relative to a different directory than `path`'s parent
// are written as absolute paths so the output stays resolvable.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);
std::string serialize_manifest(const Manifest& manifest,
                               const std::filesystem::path& target_dir = {});

// Uniform sample of n entries without replacement. Output keeps file order.
Manifest sample_fixed(const Manifest& manifest, std::size_t n, std::uint64_t seed);

// round(n * fake_fraction) fakes and the rest reals, each drawn uniformly
// within its class. Output keeps file order.
Manifest sample_proportioned(const Manifest& manifest, std::size_t n,
                             double fake_fraction, std::uint64_t seed);

struct SplitManifests {
  Manifest train;
  Manifest val;
  Manifest test;
};

SplitManifests split_by_subset(const Manifest& manifest);

}  // namespace spoofkit
