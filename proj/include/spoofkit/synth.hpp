#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofkit/audio.hpp"
#include "spoofkit/dsp.hpp"
#include "spoofkit/features.hpp"
#include "spoofkit/manifest.hpp"

namespace spoofkit {

struct SynthSpec {
  std::size_t n_per_class = 100;
  Interval duration_s{2.0, 6.0};
  // Draw durations uniformly in log space so every octave gets similar counts.
  bool log_uniform_duration = false;
  // 0 makes both classes identically distributed.
  double separation = 1.0;
  std::uint64_t seed = 0;

  // Additive white noise level, recorded as quality_sisdr_db.
  Interval quality_db{15.0, 40.0};
  // Replaces the uniform quality draw with quality = noise_db_at_1s + noise_db_per_octave * log2(duration).
  bool duration_dependent_noise = false;
  double noise_db_at_1s = 0.0;
  double noise_db_per_octave = 6.0;

  std::vector<std::string> attacks{"A01", "A02", "A03"};
  // Fractions of each class assigned to train and val; the rest goes to test.
  double train_fraction = 0.7;
  double val_fraction = 0.15;

  // Embedding-store settings.
  int dim = 32;
  double frame_rate_hz = 50.0;
  double frame_noise = 1.0;
  // Per-utterance offset noise with standard deviation utterance_noise / duration_s.
  double utterance_noise = 0.0;

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

void validate(const SynthSpec& spec);
nlohmann::ordered_json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

// Entries for both classes (reals first, then fakes) with ids real_00000 /
// fake_00000, durations, quality, attack tags and subsets; no files touched.
Manifest plan_corpus(const SynthSpec& spec, const std::string& source_dir = "wav",
                     const std::string& extension = ".wav");

// Harmonic-plus-noise waveform for one planned entry. The fake class uses a
// flatter spectral tilt, the gap growing with spec.separation.
AudioBuffer synthesize_audio(const SynthSpec& spec, const ManifestEntry& entry);

// Writes <out_dir>/wav/*.wav and <out_dir>/manifest.jsonl.
Manifest generate_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir);

// Frame embeddings: class mean -/+ separation/2 along a fixed unit direction,
// plus per-frame N(0, frame_noise^2) and optional per-utterance offset noise.
EmbeddingSequence synthesize_embedding(const SynthSpec& spec, const ManifestEntry& entry);

// Unit vector along which the class means differ.
Eigen::VectorXd class_direction(const SynthSpec& spec);

// Writes <out_dir>/emb/*.emb and <out_dir>/manifest.jsonl.
Manifest generate_embedding_store(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace spoofkit
