#include "spoofkit/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "spoofkit/error.hpp"

namespace spoofkit {
namespace {

constexpr double kPi = std::numbers::pi;

double sinc_lowpass_tap(double fc, double offset) {
  // fc is the normalized cutoff (cycles/sample).
  if (offset == 0.0) return 2.0 * fc;
  return std::sin(2.0 * kPi * fc * offset) / (kPi * offset);
}

std::vector<double> windowed_sinc(double fc, int taps) {
  std::vector<double> h(static_cast<std::size_t>(taps));
  const double centre = (taps - 1) / 2.0;
  for (int n = 0; n < taps; ++n) {
    const double window = 0.54 - 0.46 * std::cos(2.0 * kPi * n / (taps - 1));
    h[static_cast<std::size_t>(n)] = sinc_lowpass_tap(fc, n - centre) * window;
  }
  return h;
}

void require_taps(int taps) {
  if (taps < 3 || taps % 2 == 0) throw ValidationError("FIR length must be odd and >= 3");
}

std::size_t samples_for(double seconds, int rate) {
  if (!(seconds > 0.0)) throw ValidationError("window and step durations must be positive");
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  if (n == 0) throw ValidationError("window or step shorter than one sample");
  return n;
}

AudioBuffer scaled(const AudioBuffer& audio, double gain) {
  AudioBuffer out{audio.samples, audio.sample_rate_hz};
  for (auto& s : out.samples) s *= gain;
  return out;
}

}  // namespace

Standardized standardize(const AudioBuffer& audio) {
  if (audio.empty()) throw ValidationError("standardize: empty buffer");
  const auto n = static_cast<double>(audio.size());
  double mean = 0.0;
  for (double s : audio.samples) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : audio.samples) var += (s - mean) * (s - mean);
  var /= n;

  Standardized out{{audio.samples, audio.sample_rate_hz}, false};
  for (auto& s : out.audio.samples) s -= mean;
  // A constant buffer can leave a rounding-level variance behind, so test constancy directly.
  const bool constant = std::all_of(audio.samples.begin(), audio.samples.end(),
                                    [&](double s) { return s == audio.samples.front(); });
  if (constant || !(var > 0.0)) {
    std::fill(out.audio.samples.begin(), out.audio.samples.end(), 0.0);
    out.degenerate = true;
    return out;
  }
  const double inv_std = 1.0 / std::sqrt(var);
  for (auto& s : out.audio.samples) s *= inv_std;
  return out;
}

std::vector<double> design_lowpass(double cutoff_hz, int sample_rate_hz, int taps) {
  require_taps(taps);
  if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0))
    throw ValidationError("lowpass cutoff must lie in (0, Nyquist)");
  auto h = windowed_sinc(cutoff_hz / sample_rate_hz, taps);
  double dc = 0.0;
  for (double v : h) dc += v;
  for (auto& v : h) v /= dc;
  return h;
}

std::vector<double> design_bandpass(double low_hz, double high_hz, int sample_rate_hz, int taps) {
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate_hz / 2.0))
    throw ValidationError("bandpass cutoffs must satisfy 0 < low < high < Nyquist (got " +
                          std::to_string(low_hz) + ", " + std::to_string(high_hz) + ")");
  auto high = design_lowpass(high_hz, sample_rate_hz, taps);
  const auto low = design_lowpass(low_hz, sample_rate_hz, taps);
  for (std::size_t i = 0; i < high.size(); ++i) high[i] -= low[i];
  return high;
}

AudioBuffer fir_filter(const AudioBuffer& audio, std::span<const double> taps) {
  if (taps.empty() || taps.size() % 2 == 0) throw ValidationError("FIR length must be odd");
  AudioBuffer out{{}, audio.sample_rate_hz};
  if (audio.empty()) return out;
  const auto full = detail::convolve_full(audio.samples, taps);
  const std::size_t delay = (taps.size() - 1) / 2;
  out.samples.assign(full.begin() + static_cast<std::ptrdiff_t>(delay),
                     full.begin() + static_cast<std::ptrdiff_t>(delay + audio.size()));
  return out;
}

AudioBuffer bandpass(const AudioBuffer& audio, double low_hz, double high_hz) {
  const auto taps = design_bandpass(low_hz, high_hz, audio.sample_rate_hz, kBandpassTaps);
  return fir_filter(audio, taps);
}

Standardized condition(const AudioBuffer& audio) {
  auto s = standardize(audio);
  s.audio = bandpass(s.audio);
  return s;
}

AudioBuffer set_power(const AudioBuffer& audio, double target_power) {
  if (!(target_power > 0.0) || !std::isfinite(target_power))
    throw ValidationError("target power must be positive and finite");
  const double current = mean_power(audio.samples);
  if (!(current > 0.0)) throw ValidationError("set_power: buffer has zero energy");
  return scaled(audio, std::sqrt(target_power / current));
}

AudioBuffer random_power_scale(const AudioBuffer& audio, Interval range, Rng& rng) {
  if (!(range.low > 0.0 && range.low <= range.high))
    throw ValidationError("power range must satisfy 0 < low <= high");
  return set_power(audio, rng.uniform(range.low, range.high));
}

AudioBuffer add_awgn(const AudioBuffer& audio, double snr_db, Rng& rng) {
  const double signal_power = mean_power(audio.samples);
  if (!(signal_power > 0.0)) throw ValidationError("add_awgn: signal has zero power");
  std::vector<double> noise(audio.size());
  for (auto& v : noise) v = rng.normal();
  const double noise_power = mean_power(noise);
  const double target = signal_power / std::pow(10.0, snr_db / 10.0);
  const double gain = std::sqrt(target / noise_power);
  AudioBuffer out{audio.samples, audio.sample_rate_hz};
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += gain * noise[i];
  return out;
}

AudioBuffer convolve_rir(const AudioBuffer& audio, const AudioBuffer& rir) {
  if (audio.sample_rate_hz != rir.sample_rate_hz)
    throw ValidationError("RIR sample rate " + std::to_string(rir.sample_rate_hz) +
                          " Hz does not match audio rate " + std::to_string(audio.sample_rate_hz) +
                          " Hz");
  if (rir.empty()) throw ValidationError("RIR is empty");
  AudioBuffer out{{}, audio.sample_rate_hz};
  if (audio.empty()) return out;
  auto full = detail::convolve_full(audio.samples, rir.samples);
  full.resize(audio.size());
  out.samples = std::move(full);
  const double in_power = mean_power(audio.samples);
  const double out_power = mean_power(out.samples);
  if (in_power == 0.0) {
    std::fill(out.samples.begin(), out.samples.end(), 0.0);
    return out;
  }
  if (!(out_power > 0.0)) throw ValidationError("RIR convolution produced a silent signal");
  return scaled(out, std::sqrt(in_power / out_power));
}

AudioBuffer resample_roundtrip(const AudioBuffer& audio) {
  if (audio.sample_rate_hz != kSampleRate)
    throw ValidationError("resample_roundtrip expects 16 kHz input");
  if (audio.empty()) return audio;
  static const auto taps = design_lowpass(kResampleCutoffHz, kSampleRate, kResampleTaps);
  const auto band_limited = fir_filter(audio, taps);

  // Decimate by two, then zero-stuff back to 16 kHz with a gain of two so the
  // interpolation filter restores the original amplitude.
  AudioBuffer upsampled{std::vector<double>(audio.size(), 0.0), kSampleRate};
  for (std::size_t i = 0; i < audio.size(); i += 2) upsampled.samples[i] = 2.0 * band_limited.samples[i];
  return fir_filter(upsampled, taps);
}

AudioBuffer repeat_pad(const AudioBuffer& audio, std::size_t length) {
  if (audio.empty()) throw ValidationError("cannot repetition-pad an empty buffer");
  AudioBuffer out{std::vector<double>(length), audio.sample_rate_hz};
  for (std::size_t i = 0; i < length; ++i) out.samples[i] = audio.samples[i % audio.size()];
  return out;
}

std::vector<std::size_t> window_offsets(std::size_t length, std::size_t window, std::size_t step) {
  if (window == 0 || step == 0) throw ValidationError("window and step must be positive");
  if (length < window) return {0};
  std::vector<std::size_t> offsets;
  for (std::size_t off = 0; off + window <= length; off += step) offsets.push_back(off);
  return offsets;
}

std::vector<AudioBuffer> window_segments(const AudioBuffer& audio, double win_s, double step_s) {
  const auto window = samples_for(win_s, audio.sample_rate_hz);
  const auto step = samples_for(step_s, audio.sample_rate_hz);
  if (audio.size() < window) return {repeat_pad(audio, window)};
  std::vector<AudioBuffer> segments;
  for (auto off : window_offsets(audio.size(), window, step)) {
    const auto first = audio.samples.begin() + static_cast<std::ptrdiff_t>(off);
    segments.push_back({{first, first + static_cast<std::ptrdiff_t>(window)}, audio.sample_rate_hz});
  }
  return segments;
}

AudioBuffer random_crop(const AudioBuffer& audio, double win_s, Rng& rng) {
  const auto window = samples_for(win_s, audio.sample_rate_hz);
  if (audio.size() <= window) return audio.size() == window ? audio : repeat_pad(audio, window);
  const auto off = static_cast<std::size_t>(rng.below(audio.size() - window + 1));
  const auto first = audio.samples.begin() + static_cast<std::ptrdiff_t>(off);
  return {{first, first + static_cast<std::ptrdiff_t>(window)}, audio.sample_rate_hz};
}

AudioBuffer center_crop(const AudioBuffer& audio, double win_s) {
  const auto window = samples_for(win_s, audio.sample_rate_hz);
  if (audio.size() <= window) return audio.size() == window ? audio : repeat_pad(audio, window);
  const auto off = (audio.size() - window) / 2;
  const auto first = audio.samples.begin() + static_cast<std::ptrdiff_t>(off);
  return {{first, first + static_cast<std::ptrdiff_t>(window)}, audio.sample_rate_hz};
}

void validate(const AugmentationPolicy& policy) {
  auto check_probability = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ValidationError(std::string(what) + " probability must lie in [0, 1]");
  };
  check_probability(policy.plugin_probability, "plugin");
  check_probability(policy.awgn_probability, "AWGN");
  check_probability(policy.rir_probability, "RIR");
  if (!(policy.awgn_snr_db.low <= policy.awgn_snr_db.high))
    throw ValidationError("AWGN SNR range must satisfy low <= high");
  if (!(policy.power_range.low > 0.0 && policy.power_range.low <= policy.power_range.high))
    throw ValidationError("power range must satisfy 0 < low <= high");
  if (policy.rir_probability > 0.0 && policy.rir_bank.empty())
    throw ValidationError("RIR probability is positive but the RIR bank is empty");
  if (policy.plugin_probability > 0.0 && !policy.plugin)
    throw ValidationError("plugin probability is positive but no plugin is installed");
}

AudioBuffer apply_policy(const AudioBuffer& audio, const AugmentationPolicy& policy, Rng& rng) {
  validate(policy);
  AudioBuffer out = audio;
  if (policy.plugin && rng.bernoulli(policy.plugin_probability)) out = policy.plugin(out, rng);
  if (rng.bernoulli(policy.awgn_probability))
    out = add_awgn(out, rng.uniform(policy.awgn_snr_db.low, policy.awgn_snr_db.high), rng);
  if (!policy.rir_bank.empty() && rng.bernoulli(policy.rir_probability)) {
    const auto& rir = policy.rir_bank[static_cast<std::size_t>(rng.below(policy.rir_bank.size()))];
    out = convolve_rir(out, rir);
  }
  if (policy.resample_roundtrip) out = resample_roundtrip(out);
  return random_power_scale(out, policy.power_range, rng);
}

}  // namespace spoofkit
