#include "spoofkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "fft.hpp"
#include "spoofkit/error.hpp"

namespace spoofkit {

void validate(const EmbeddingSequence& sequence) {
  if (sequence.length() < 1 || sequence.dims() < 1)
    throw ValidationError("embedding sequence must have at least one frame and one dimension");
  if (!sequence.frames.allFinite()) throw ValidationError("embedding sequence has non-finite values");
}

EmbeddingSequence spectral_features(const AudioBuffer& audio, const SpectralConfig& config) {
  require_pipeline_audio(audio);
  if (config.n_bands < 2) throw ValidationError("spectral features need at least 2 bands");
  const auto rate = audio.sample_rate_hz;
  const auto frame = static_cast<std::size_t>(std::llround(config.frame_s * rate));
  const auto hop = static_cast<std::size_t>(std::llround(config.hop_s * rate));
  if (frame < 2 || hop < 1) throw ValidationError("frame and hop must span at least one sample");
  if (audio.size() < frame)
    throw ValidationError("input of " + std::to_string(audio.size()) +
                          " samples is shorter than one frame (" + std::to_string(frame) + ")");

  const std::size_t n_frames = (audio.size() - frame) / hop + 1;
  const detail::RealFft fft(detail::next_pow2(frame));
  const std::size_t bins = fft.bins();

  std::vector<double> window(frame);
  for (std::size_t i = 0; i < frame; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(frame - 1));

  // Triangular band weights; band b rises from edge b to edge b+1 and falls to edge b+2.
  const auto n_bands = static_cast<std::size_t>(config.n_bands);
  const double nyquist = rate / 2.0;
  const double spacing = nyquist / static_cast<double>(n_bands + 1);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_bands),
                                                  static_cast<Eigen::Index>(bins));
  for (std::size_t b = 0; b < n_bands; ++b) {
    const double lo = spacing * static_cast<double>(b);
    const double mid = lo + spacing;
    const double hi = mid + spacing;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * rate / static_cast<double>(fft.size());
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / spacing;
      else if (f > mid && f < hi) w = (hi - f) / spacing;
      weights(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) = w;
    }
  }

  EmbeddingSequence out;
  out.frames.resize(static_cast<Eigen::Index>(n_frames), static_cast<Eigen::Index>(n_bands));
  std::vector<double> buf(frame);
  std::vector<std::complex<double>> spectrum;
  Eigen::VectorXd power(static_cast<Eigen::Index>(bins));
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < frame; ++i) buf[i] = audio.samples[start + i] * window[i];
    fft.forward(buf, spectrum);
    for (std::size_t k = 0; k < bins; ++k)
      power(static_cast<Eigen::Index>(k)) = std::norm(spectrum[k]) / static_cast<double>(frame);
    const Eigen::VectorXd energy = weights * power;
    for (std::size_t b = 0; b < n_bands; ++b)
      out.frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b)) =
          std::log(std::max(energy(static_cast<Eigen::Index>(b)), kLogEnergyFloor));
  }
  return out;
}

}  // namespace spoofkit
