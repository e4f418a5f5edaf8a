#include "spoofkit/provider.hpp"

#include <cmath>

#include "spoofkit/error.hpp"
#include "spoofkit/tensor_file.hpp"

namespace spoofkit {
namespace {

// Each frame's log band energies are shifted to zero mean and scaled to unit
// variance across bands, so the embedding carries spectral shape at unit scale
// and ignores overall gain. Flat frames become all-zero.
void standardize_frames(EmbeddingSequence& seq) {
  for (Eigen::Index t = 0; t < seq.frames.rows(); ++t) {
    auto row = seq.frames.row(t);
    const double mean = row.mean();
    row.array() -= mean;
    const double sd = std::sqrt(row.squaredNorm() / static_cast<double>(row.size()));
    if (sd > 1e-12) row /= sd;
    else row.setZero();
  }
}

class SpectralProvider final : public EmbeddingProvider {
 public:
  explicit SpectralProvider(ProviderConfig config) : config_(std::move(config)) {
    if (config_.n_bands < 2) throw ValidationError("spectral provider needs n_bands >= 2");
  }

  std::optional<int> dim() const override { return config_.n_bands; }
  bool consumes_audio() const override { return true; }
  ProviderConfig config() const override { return config_; }

  EmbeddingSequence embed_entry(const Manifest& manifest, const ManifestEntry& entry) const override {
    return embed_audio(prepare_eval_segment(load_entry_audio(manifest, entry)));
  }

  EmbeddingSequence embed_audio(const AudioBuffer& audio) const override {
    auto seq = spectral_features(audio, SpectralConfig{config_.n_bands});
    standardize_frames(seq);
    return seq;
  }

 private:
  ProviderConfig config_;
};

class FileProvider final : public EmbeddingProvider {
 public:
  explicit FileProvider(ProviderConfig config) : config_(std::move(config)) {}

  std::optional<int> dim() const override {
    return config_.dim > 0 ? std::optional<int>(config_.dim) : std::nullopt;
  }
  bool consumes_audio() const override { return false; }
  ProviderConfig config() const override { return config_; }

  EmbeddingSequence embed_entry(const Manifest& manifest, const ManifestEntry& entry) const override {
    const auto path = config_.store.empty() ? manifest.resolve(entry)
                                            : config_.store / (entry.id + ".emb");
    if (!std::filesystem::exists(path))
      throw ValidationError("no embedding stored for id '" + entry.id + "' (" + path.string() + ")");
    auto sequence = load_embedding(path);
    if (config_.dim > 0 && sequence.dims() != config_.dim)
      throw ValidationError("embedding for id '" + entry.id + "' has dimension " +
                            std::to_string(sequence.dims()) + ", expected " +
                            std::to_string(config_.dim));
    return sequence;
  }

 private:
  ProviderConfig config_;
};

}  // namespace

nlohmann::json to_json(const ProviderConfig& config) {
  nlohmann::json j;
  j["kind"] = config.kind;
  if (config.kind == "spectral") {
    j["n_bands"] = config.n_bands;
  } else {
    j["store"] = config.store.generic_string();
    j["dim"] = config.dim;
  }
  return j;
}

ProviderConfig provider_config_from_json(const nlohmann::json& j) {
  ProviderConfig config;
  config.kind = j.value("kind", std::string("spectral"));
  config.n_bands = j.value("n_bands", 80);
  config.store = j.value("store", std::string());
  config.dim = j.value("dim", 0);
  if (config.kind != "spectral" && config.kind != "file")
    throw ValidationError("unknown embedding provider kind '" + config.kind + "'");
  return config;
}

EmbeddingSequence EmbeddingProvider::embed_audio(const AudioBuffer&) const {
  throw ValidationError("provider '" + config().kind + "' does not embed waveforms");
}

std::unique_ptr<EmbeddingProvider> embedding_provider_load(const ProviderConfig& config) {
  if (config.kind == "spectral") return std::make_unique<SpectralProvider>(config);
  if (config.kind == "file") return std::make_unique<FileProvider>(config);
  throw ValidationError("unknown embedding provider kind '" + config.kind + "'");
}

AudioBuffer load_entry_audio(const Manifest& manifest, const ManifestEntry& entry) {
  auto audio = read_wav(manifest.resolve(entry));
  require_pipeline_audio(audio);
  if (audio.empty()) throw ValidationError("audio for id '" + entry.id + "' is empty");
  return audio;
}

AudioBuffer prepare_eval_segment(const AudioBuffer& segment) {
  auto conditioned = condition(segment);
  if (conditioned.degenerate || !(mean_power(conditioned.audio.samples) > 0.0))
    return std::move(conditioned.audio);
  return set_power(conditioned.audio, 1.0);
}

AudioBuffer prepare_train_segment(const AudioBuffer& audio, double crop_s,
                                  const AugmentationPolicy& policy, Rng& rng) {
  auto conditioned = condition(random_crop(audio, crop_s, rng));
  if (conditioned.degenerate || !(mean_power(conditioned.audio.samples) > 0.0))
    return std::move(conditioned.audio);
  return apply_policy(conditioned.audio, policy, rng);
}

void save_embedding(const std::filesystem::path& path, const EmbeddingSequence& sequence,
                    const nlohmann::json& meta) {
  validate(sequence);
  TensorFile file;
  file.meta = meta;
  file.meta["kind"] = "spoofkit-embedding";
  NamedTensor frames{"frames", {sequence.length(), sequence.dims()}, {}};
  frames.values.reserve(static_cast<std::size_t>(sequence.frames.size()));
  for (Eigen::Index r = 0; r < sequence.length(); ++r)
    for (Eigen::Index c = 0; c < sequence.dims(); ++c)
      frames.values.push_back(static_cast<float>(sequence.frames(r, c)));
  file.tensors.push_back(std::move(frames));
  write_tensor_file(path, file);
}

EmbeddingSequence load_embedding(const std::filesystem::path& path) {
  const auto file = read_tensor_file(path);
  const auto& frames = file.at("frames");
  if (frames.shape.size() != 2) throw ValidationError(path.string() + ": 'frames' must be 2-D");
  EmbeddingSequence sequence;
  sequence.frames.resize(frames.shape[0], frames.shape[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < sequence.length(); ++r)
    for (Eigen::Index c = 0; c < sequence.dims(); ++c) sequence.frames(r, c) = frames.values[k++];
  validate(sequence);
  return sequence;
}

}  // namespace spoofkit
