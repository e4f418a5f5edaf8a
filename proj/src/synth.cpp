#include "spoofkit/synth.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>

#include "spoofkit/error.hpp"
#include "spoofkit/io.hpp"
#include "spoofkit/provider.hpp"
#include "spoofkit/rng.hpp"

namespace spoofkit {
namespace {

constexpr std::uint64_t kPlanStream = 1;
constexpr std::uint64_t kSubsetStream = 2;
constexpr std::uint64_t kDirectionStream = 3;

constexpr double kBaseTilt = 1.0;
constexpr double kTiltGapPerSeparation = 0.6;
constexpr double kTiltJitter = 0.15;
constexpr double kHarmonicCeilingHz = 4000.0;
constexpr double kBreathLevelDb = -25.0;
constexpr double kPeakLevel = 0.5;

std::string make_id(Label label, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05zu", label == Label::fake ? "fake" : "real", index);
  return buf;
}

Rng entry_rng(const SynthSpec& spec, const ManifestEntry& entry) {
  return Rng(derive_seed(spec.seed, fnv1a64(entry.id)));
}

double clean_quality(const SynthSpec& spec, double duration_s, Rng& rng) {
  if (spec.duration_dependent_noise)
    return spec.noise_db_at_1s + spec.noise_db_per_octave * std::log2(duration_s);
  return rng.uniform(spec.quality_db.low, spec.quality_db.high);
}

void write_entries(const SynthSpec& spec, Manifest& manifest, const std::filesystem::path& out_dir,
                   const char* what) {
  manifest.base_dir = std::filesystem::absolute(out_dir).lexically_normal();
  save_manifest(manifest, out_dir / "manifest.jsonl");
  nlohmann::ordered_json info;
  info["kind"] = what;
  info["spec"] = to_json(spec);
  write_file(out_dir / "synth_spec.json", info.dump(2) + "\n");
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (!(spec.duration_s.low > 0.0 && spec.duration_s.low <= spec.duration_s.high))
    throw ValidationError("synth duration range must satisfy 0 < low <= high");
  if (!(spec.separation >= 0.0) || !std::isfinite(spec.separation))
    throw ValidationError("separation must be finite and >= 0");
  if (!(spec.quality_db.low <= spec.quality_db.high)) throw ValidationError("quality range is inverted");
  if (!(spec.train_fraction >= 0.0 && spec.val_fraction >= 0.0 && spec.train_fraction + spec.val_fraction <= 1.0))
    throw ValidationError("train/val fractions must be >= 0 and sum to at most 1");
  if (spec.attacks.empty()) throw ValidationError("at least one attack tag is required");
  if (spec.dim < 1) throw ValidationError("embedding dim must be >= 1");
  if (!(spec.frame_rate_hz > 0.0)) throw ValidationError("frame_rate_hz must be > 0");
  if (!(spec.frame_noise >= 0.0) || !(spec.utterance_noise >= 0.0))
    throw ValidationError("noise levels must be >= 0");
}

nlohmann::ordered_json to_json(const SynthSpec& s) {
  return {{"n_per_class", s.n_per_class},
          {"duration_s", {s.duration_s.low, s.duration_s.high}},
          {"log_uniform_duration", s.log_uniform_duration},
          {"separation", s.separation},
          {"seed", s.seed},
          {"quality_db", {s.quality_db.low, s.quality_db.high}},
          {"duration_dependent_noise", s.duration_dependent_noise},
          {"noise_db_at_1s", s.noise_db_at_1s},
          {"noise_db_per_octave", s.noise_db_per_octave},
          {"attacks", s.attacks},
          {"train_fraction", s.train_fraction},
          {"val_fraction", s.val_fraction},
          {"dim", s.dim},
          {"frame_rate_hz", s.frame_rate_hz},
          {"frame_noise", s.frame_noise},
          {"utterance_noise", s.utterance_noise}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    auto range = [](const nlohmann::json& v) { return Interval{v.at(0).get<double>(), v.at(1).get<double>()}; };
    if (j.contains("n_per_class")) s.n_per_class = j["n_per_class"].get<std::size_t>();
    if (j.contains("duration_s")) s.duration_s = range(j["duration_s"]);
    if (j.contains("log_uniform_duration")) s.log_uniform_duration = j["log_uniform_duration"].get<bool>();
    if (j.contains("separation")) s.separation = j["separation"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("quality_db")) s.quality_db = range(j["quality_db"]);
    if (j.contains("duration_dependent_noise")) s.duration_dependent_noise = j["duration_dependent_noise"].get<bool>();
    if (j.contains("noise_db_at_1s")) s.noise_db_at_1s = j["noise_db_at_1s"].get<double>();
    if (j.contains("noise_db_per_octave")) s.noise_db_per_octave = j["noise_db_per_octave"].get<double>();
    if (j.contains("attacks")) s.attacks = j["attacks"].get<std::vector<std::string>>();
    if (j.contains("train_fraction")) s.train_fraction = j["train_fraction"].get<double>();
    if (j.contains("val_fraction")) s.val_fraction = j["val_fraction"].get<double>();
    if (j.contains("dim")) s.dim = j["dim"].get<int>();
    if (j.contains("frame_rate_hz")) s.frame_rate_hz = j["frame_rate_hz"].get<double>();
    if (j.contains("frame_noise")) s.frame_noise = j["frame_noise"].get<double>();
    if (j.contains("utterance_noise")) s.utterance_noise = j["utterance_noise"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid synth spec: ") + e.what());
  }
  validate(s);
  return s;
}

Manifest plan_corpus(const SynthSpec& spec, const std::string& source_dir, const std::string& extension) {
  validate(spec);
  Manifest m;
  m.name = "synth";
  Rng plan(derive_seed(spec.seed, kPlanStream));
  const std::size_t n = spec.n_per_class;
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(spec.val_fraction * static_cast<double>(n))));

  for (Label label : {Label::real, Label::fake}) {
    std::vector<Subset> subsets(n, Subset::test);
    std::fill_n(subsets.begin(), n_train, Subset::train);
    std::fill_n(subsets.begin() + static_cast<std::ptrdiff_t>(n_train), n_val, Subset::val);
    Rng subset_rng(derive_seed(spec.seed, kSubsetStream + 16 * static_cast<std::uint64_t>(label)));
    subset_rng.shuffle(std::span<Subset>(subsets));

    for (std::size_t i = 0; i < n; ++i) {
      ManifestEntry e;
      e.id = make_id(label, i);
      e.source = source_dir + "/" + e.id + extension;
      e.label = label;
      double d = spec.log_uniform_duration
                     ? std::exp(plan.uniform(std::log(spec.duration_s.low), std::log(spec.duration_s.high)))
                     : plan.uniform(spec.duration_s.low, spec.duration_s.high);
      // Durations are whole samples so the manifest matches the written audio.
      d = std::max<double>(1.0, std::round(d * kSampleRate)) / kSampleRate;
      e.duration_s = d;
      e.quality_sisdr_db = clean_quality(spec, d, plan);
      if (label == Label::fake) e.attack = spec.attacks[i % spec.attacks.size()];
      e.subset = subsets[i];
      m.entries.push_back(std::move(e));
    }
  }
  return m;
}

AudioBuffer synthesize_audio(const SynthSpec& spec, const ManifestEntry& entry) {
  Rng rng = entry_rng(spec, entry);
  const auto n = static_cast<std::size_t>(std::llround(entry.duration_s * kSampleRate));
  const double fs = kSampleRate;

  double tilt = kBaseTilt + kTiltJitter * rng.normal();
  if (entry.label == Label::fake) tilt -= kTiltGapPerSeparation * spec.separation;
  const double f0 = rng.uniform(90.0, 250.0);
  const double env_rate = rng.uniform(2.0, 6.0);
  const double env_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  // Each harmonic is a unit phasor advanced by a fixed rotation per sample.
  const auto n_harmonics = static_cast<int>(kHarmonicCeilingHz / f0);
  std::vector<std::complex<double>> phasor, rotation;
  std::vector<double> amplitude;
  for (int k = 1; k <= n_harmonics; ++k) {
    const double w = 2.0 * std::numbers::pi * f0 * k / fs;
    phasor.push_back(std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi)));
    rotation.push_back(std::polar(1.0, w));
    amplitude.push_back(std::pow(static_cast<double>(k), -tilt));
  }
  const auto env_rotation = std::polar(1.0, 2.0 * std::numbers::pi * env_rate / fs);
  auto envelope = std::polar(1.0, env_phase);

  std::vector<double> voiced(n);
  for (std::size_t t = 0; t < n; ++t) {
    double v = 0.0;
    for (std::size_t k = 0; k < phasor.size(); ++k) {
      v += amplitude[k] * phasor[k].imag();
      phasor[k] *= rotation[k];
    }
    voiced[t] = v * (0.55 + 0.45 * envelope.imag());
    envelope *= env_rotation;
    if ((t & 1023) == 1023) {
      for (auto& p : phasor) p /= std::abs(p);
      envelope /= std::abs(envelope);
    }
  }

  AudioBuffer out;
  out.samples.resize(n);
  const double voiced_power = mean_power(voiced);
  const double breath_gain = std::sqrt(voiced_power * std::pow(10.0, kBreathLevelDb / 10.0));
  double breath = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    breath = 0.9 * breath + 0.1 * rng.normal();
    // The one-pole filter above has output variance 0.01/0.19 for unit input.
    out.samples[t] = voiced[t] + breath_gain * breath * std::sqrt(0.19 / 0.01);
  }

  const double clean_power = mean_power(out.samples);
  const double noise_sd = std::sqrt(clean_power * std::pow(10.0, -*entry.quality_sisdr_db / 10.0));
  for (auto& s : out.samples) s += noise_sd * rng.normal();

  double peak = 0.0;
  for (double s : out.samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.0)
    for (auto& s : out.samples) s *= kPeakLevel / peak;
  return out;
}

Manifest generate_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  Manifest m = plan_corpus(spec, "wav", ".wav");
  for (const auto& e : m.entries) write_wav(out_dir / e.source, synthesize_audio(spec, e));
  write_entries(spec, m, out_dir, "audio");
  return m;
}

Eigen::VectorXd class_direction(const SynthSpec& spec) {
  Rng rng(derive_seed(spec.seed, kDirectionStream));
  Eigen::VectorXd u(spec.dim);
  for (auto& v : u) v = rng.normal();
  return u / u.norm();
}

EmbeddingSequence synthesize_embedding(const SynthSpec& spec, const ManifestEntry& entry) {
  Rng rng = entry_rng(spec, entry);
  const auto frames = std::max<Eigen::Index>(1, std::llround(entry.duration_s * spec.frame_rate_hz));
  const double sign = entry.label == Label::fake ? 0.5 : -0.5;
  Eigen::VectorXd mean = sign * spec.separation * class_direction(spec);
  if (spec.utterance_noise > 0.0) {
    const double sd = spec.utterance_noise / entry.duration_s;
    for (auto& v : mean) v += sd * rng.normal();
  }
  EmbeddingSequence seq;
  seq.frames.resize(frames, spec.dim);
  for (Eigen::Index t = 0; t < frames; ++t)
    for (Eigen::Index d = 0; d < spec.dim; ++d) seq.frames(t, d) = mean(d) + spec.frame_noise * rng.normal();
  return seq;
}

Manifest generate_embedding_store(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  Manifest m = plan_corpus(spec, "emb", ".emb");
  for (const auto& e : m.entries)
    save_embedding(out_dir / e.source, synthesize_embedding(spec, e), {{"id", e.id}});
  write_entries(spec, m, out_dir, "embedding");
  return m;
}

}  // namespace spoofkit
