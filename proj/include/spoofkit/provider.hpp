#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "spoofkit/audio.hpp"
#include "spoofkit/dsp.hpp"
#include "spoofkit/features.hpp"
#include "spoofkit/manifest.hpp"

namespace spoofkit {

// "spectral": built-in log band-energy front end over WAV sources, each frame
//             standardized across bands.
// "file": precomputed tensor files, one per utterance, looked up as
//         <store>/<id>.emb (or the entry's own source when store is empty).
struct ProviderConfig {
  std::string kind = "spectral";
  int n_bands = 80;
  std::filesystem::path store;
  // Expected dimension for file stores; 0 accepts whatever the first file holds.
  int dim = 0;

  friend bool operator==(const ProviderConfig&, const ProviderConfig&) = default;
};

nlohmann::json to_json(const ProviderConfig& config);
ProviderConfig provider_config_from_json(const nlohmann::json& j);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  // Embedding dimension when known up front, otherwise nullopt.
  virtual std::optional<int> dim() const = 0;
  // True when the provider works on waveforms, so cropping, augmentation and
  // windowed scoring apply.
  virtual bool consumes_audio() const = 0;
  virtual ProviderConfig config() const = 0;

  // Whole-utterance embedding; deterministic per entry.
  virtual EmbeddingSequence embed_entry(const Manifest& manifest, const ManifestEntry& entry) const = 0;
  // Waveform embedding for audio providers; throws otherwise.
  virtual EmbeddingSequence embed_audio(const AudioBuffer& audio) const;
};

std::unique_ptr<EmbeddingProvider> embedding_provider_load(const ProviderConfig& config);

// Loads and validates the waveform behind a manifest entry.
AudioBuffer load_entry_audio(const Manifest& manifest, const ManifestEntry& entry);

// Fixed front end for scoring and validation: condition (standardize + bandpass)
// then normalize power to 1.0. Silent segments skip the power step.
AudioBuffer prepare_eval_segment(const AudioBuffer& segment);

// Training front end: random crop, condition, augmentation policy (which ends
// in random power scaling). Silent segments skip augmentation.
AudioBuffer prepare_train_segment(const AudioBuffer& audio, double crop_s,
                                  const AugmentationPolicy& policy, Rng& rng);

// Embedding file holding a single "frames" tensor of shape [T, D].
void save_embedding(const std::filesystem::path& path, const EmbeddingSequence& sequence,
                    const nlohmann::json& meta = nlohmann::json::object());
EmbeddingSequence load_embedding(const std::filesystem::path& path);

}  // namespace spoofkit
