#include "spoofkit/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "spoofkit/error.hpp"
#include "spoofkit/io.hpp"
#include "spoofkit/rng.hpp"

namespace spoofkit {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

ManifestEntry entry_from_json(const json& obj) {
  if (!obj.is_object()) throw ValidationError("expected a JSON object");
  ManifestEntry entry;
  auto id = optional_string(obj, "id");
  if (!id || id->empty()) throw ValidationError("missing 'id'");
  entry.id = *id;
  entry.source = optional_string(obj, "source").value_or("");

  auto label = obj.find("label");
  if (label == obj.end() || !label->is_string()) throw ValidationError("missing 'label'");
  entry.label = parse_label(label->get<std::string>());

  entry.attack = optional_string(obj, "attack");
  entry.codec_tag = optional_string(obj, "codec_tag");
  if (auto subset = optional_string(obj, "subset")) entry.subset = parse_subset(*subset);

  if (auto it = obj.find("duration_s"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw ValidationError("'duration_s' must be a number");
    entry.duration_s = it->get<double>();
    if (!(entry.duration_s >= 0.0) || !std::isfinite(entry.duration_s))
      throw ValidationError("'duration_s' must be finite and >= 0");
  }
  if (auto it = obj.find("quality_sisdr_db"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw ValidationError("'quality_sisdr_db' must be a number");
    entry.quality_sisdr_db = it->get<double>();
  }
  return entry;
}

Manifest select_indices(const Manifest& manifest, std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  Manifest out{manifest.name, {}, manifest.base_dir};
  out.entries.reserve(indices.size());
  for (auto i : indices) out.entries.push_back(manifest.entries[i]);
  return out;
}

// Partial Fisher-Yates over `pool`; returns the first n elements chosen.
std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool, std::size_t n,
                                                  Rng& rng) {
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  return pool;
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::fake ? "fake" : "real"; }

std::string_view to_string(Subset subset) {
  switch (subset) {
    case Subset::train: return "train";
    case Subset::val: return "val";
    case Subset::test: return "test";
  }
  return "train";
}

Label parse_label(std::string_view text) {
  if (text == "real" || text == "bonafide" || text == "bona-fide") return Label::real;
  if (text == "fake" || text == "spoof") return Label::fake;
  throw ValidationError("unknown label '" + std::string(text) + "'");
}

Subset parse_subset(std::string_view text) {
  if (text == "train") return Subset::train;
  if (text == "val" || text == "dev") return Subset::val;
  if (text == "test" || text == "eval") return Subset::test;
  throw ValidationError("unknown subset '" + std::string(text) + "'");
}

std::filesystem::path Manifest::resolve(const ManifestEntry& entry) const {
  std::filesystem::path source(entry.source);
  if (source.is_absolute() || base_dir.empty()) return source;
  return (base_dir / source).lexically_normal();
}

std::size_t Manifest::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [label](const auto& e) { return e.label == label; }));
}

Manifest parse_manifest(std::string_view text, std::string name) {
  Manifest manifest;
  manifest.name = std::move(name);
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const auto line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    ManifestEntry entry;
    try {
      entry = entry_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError(manifest.name + ":" + std::to_string(line_no) +
                            ": parse error: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(manifest.name + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(entry.id).second)
      throw ValidationError(manifest.name + ":" + std::to_string(line_no) + ": duplicate id '" +
                            entry.id + "'");
    manifest.entries.push_back(std::move(entry));
    if (end == text.size()) break;
  }
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path) {
  auto manifest = parse_manifest(read_file(path), path.filename().string());
  manifest.base_dir = std::filesystem::absolute(path).parent_path().lexically_normal();
  return manifest;
}

std::string serialize_manifest(const Manifest& manifest,
                               const std::filesystem::path& target_dir) {
  std::string out;
  auto canonical_dir = [](const std::filesystem::path& p) {
    auto out = std::filesystem::absolute(p).lexically_normal();
    return out.has_filename() ? out : out.parent_path();
  };
  const bool rebase = !target_dir.empty() && !manifest.base_dir.empty() &&
                      canonical_dir(target_dir) != canonical_dir(manifest.base_dir);
  for (const auto& e : manifest.entries) {
    ordered_json obj;
    obj["id"] = e.id;
    obj["source"] = rebase ? manifest.resolve(e).string() : e.source;
    obj["label"] = to_string(e.label);
    if (e.attack) obj["attack"] = *e.attack;
    obj["duration_s"] = e.duration_s;
    if (e.quality_sisdr_db) obj["quality_sisdr_db"] = *e.quality_sisdr_db;
    if (e.codec_tag) obj["codec_tag"] = *e.codec_tag;
    if (e.subset) obj["subset"] = to_string(*e.subset);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  const auto dir = std::filesystem::absolute(path).parent_path();
  write_file(path, serialize_manifest(manifest, dir));
}

Manifest sample_fixed(const Manifest& manifest, std::size_t n, std::uint64_t seed) {
  if (n > manifest.size())
    throw ValidationError("sample size " + std::to_string(n) + " exceeds manifest size " +
                          std::to_string(manifest.size()));
  std::vector<std::size_t> pool(manifest.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng(seed);
  return select_indices(manifest, draw_without_replacement(std::move(pool), n, rng));
}

Manifest sample_proportioned(const Manifest& manifest, std::size_t n, double fake_fraction,
                             std::uint64_t seed) {
  if (!(fake_fraction >= 0.0 && fake_fraction <= 1.0))
    throw ValidationError("fake_fraction must lie in [0, 1]");
  const auto n_fake = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fake_fraction));
  const std::size_t n_real = n - n_fake;

  std::vector<std::size_t> fakes;
  std::vector<std::size_t> reals;
  for (std::size_t i = 0; i < manifest.size(); ++i)
    (manifest.entries[i].label == Label::fake ? fakes : reals).push_back(i);
  if (n_fake > fakes.size())
    throw ValidationError("class 'fake' has " + std::to_string(fakes.size()) +
                          " entries, need " + std::to_string(n_fake));
  if (n_real > reals.size())
    throw ValidationError("class 'real' has " + std::to_string(reals.size()) +
                          " entries, need " + std::to_string(n_real));

  Rng rng(seed);
  auto chosen = draw_without_replacement(std::move(fakes), n_fake, rng);
  auto chosen_real = draw_without_replacement(std::move(reals), n_real, rng);
  chosen.insert(chosen.end(), chosen_real.begin(), chosen_real.end());
  return select_indices(manifest, std::move(chosen));
}

SplitManifests split_by_subset(const Manifest& manifest) {
  SplitManifests out;
  for (auto* part : {&out.train, &out.val, &out.test}) {
    part->name = manifest.name;
    part->base_dir = manifest.base_dir;
  }
  for (const auto& e : manifest.entries) {
    if (!e.subset) throw ValidationError("entry '" + e.id + "' has no subset tag");
    switch (*e.subset) {
      case Subset::train: out.train.entries.push_back(e); break;
      case Subset::val: out.val.entries.push_back(e); break;
      case Subset::test: out.test.entries.push_back(e); break;
    }
  }
  return out;
}

}  // namespace spoofkit
