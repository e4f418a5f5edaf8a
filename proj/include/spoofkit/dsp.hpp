#pragma once

#include <functional>
#include <span>
#include <vector>

#include "spoofkit/audio.hpp"
#include "spoofkit/rng.hpp"

namespace spoofkit {

struct Interval {
  double low = 0.0;
  double high = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct Standardized {
  AudioBuffer audio;
  // True when the input was constant; the output is then zero-mean but unscaled.
  bool degenerate = false;
};

Standardized standardize(const AudioBuffer& audio);

inline constexpr int kBandpassTaps = 511;
inline constexpr int kResampleTaps = 511;
inline constexpr double kResampleCutoffHz = 3800.0;

// Hamming-windowed sinc designs with unit DC gain (lowpass) or zero DC gain (bandpass).
std::vector<double> design_lowpass(double cutoff_hz, int sample_rate_hz, int taps);
std::vector<double> design_bandpass(double low_hz, double high_hz, int sample_rate_hz, int taps);

// Linear-phase FIR with group-delay compensation; output length equals input length.
AudioBuffer fir_filter(const AudioBuffer& audio, std::span<const double> taps);

AudioBuffer bandpass(const AudioBuffer& audio, double low_hz = 300.0, double high_hz = 3400.0);

// Standardization followed by the speech-band bandpass: the fixed front end
// applied to every segment the model sees.
Standardized condition(const AudioBuffer& audio);

AudioBuffer set_power(const AudioBuffer& audio, double target_power);
AudioBuffer random_power_scale(const AudioBuffer& audio, Interval range, Rng& rng);

// Adds white Gaussian noise scaled against the realized noise power, so the
// output SNR equals snr_db up to rounding.
AudioBuffer add_awgn(const AudioBuffer& audio, double snr_db, Rng& rng);

// Full convolution truncated to the input length, rescaled to the input power.
AudioBuffer convolve_rir(const AudioBuffer& audio, const AudioBuffer& rir);

// 16 kHz -> 8 kHz -> 16 kHz through windowed-sinc anti-alias/anti-image filters.
AudioBuffer resample_roundtrip(const AudioBuffer& audio);

// Cyclic repetition of the input up to `length` samples.
AudioBuffer repeat_pad(const AudioBuffer& audio, std::size_t length);

std::vector<std::size_t> window_offsets(std::size_t length, std::size_t window, std::size_t step);
std::vector<AudioBuffer> window_segments(const AudioBuffer& audio, double win_s = 3.5,
                                         double step_s = 0.5);
AudioBuffer random_crop(const AudioBuffer& audio, double win_s, Rng& rng);
AudioBuffer center_crop(const AudioBuffer& audio, double win_s);

struct AugmentationPolicy {
  using Transform = std::function<AudioBuffer(const AudioBuffer&, Rng&)>;

  // External waveform transform (e.g. a RawBoost implementation).
  Transform plugin;
  double plugin_probability = 0.0;

  double awgn_probability = 0.0;
  Interval awgn_snr_db{5.0, 30.0};

  double rir_probability = 0.0;
  std::vector<AudioBuffer> rir_bank;

  bool resample_roundtrip = false;

  // Linear-uniform target power.
  Interval power_range{1e-5, 1.2};
};

void validate(const AugmentationPolicy& policy);

// Stages run in order: plugin, AWGN, RIR, resample round-trip, random power scale.
// Each stochastic choice draws from `rng`.
AudioBuffer apply_policy(const AudioBuffer& audio, const AugmentationPolicy& policy, Rng& rng);

}  // namespace spoofkit
