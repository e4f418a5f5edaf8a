#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace spoofkit {

inline constexpr int kSampleRate = 16000;

// Mono waveform. Every pipeline entry point expects kSampleRate and finite samples.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate_hz);
  }
};

// Throws ValidationError unless the buffer is at kSampleRate with finite samples.
void require_pipeline_audio(const AudioBuffer& audio);

// Mean squared amplitude.
double mean_power(std::span<const double> samples);

// PCM 16-bit signed little-endian mono WAV at 16 kHz; anything else is
// rejected with a descriptive error. Samples are scaled to [-1, 1).
AudioBuffer read_wav(const std::filesystem::path& path);
AudioBuffer parse_wav(std::span<const unsigned char> bytes);

// Writes 16-bit PCM; samples are clipped to [-1, 1) and rounded to the nearest step.
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);
std::vector<unsigned char> encode_wav(const AudioBuffer& audio);

}  // namespace spoofkit
