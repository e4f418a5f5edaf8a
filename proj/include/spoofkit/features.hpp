#pragma once

#include <Eigen/Dense>

#include "spoofkit/audio.hpp"

namespace spoofkit {

// Time-major feature matrix: one row per frame, one column per dimension.
struct EmbeddingSequence {
  Eigen::MatrixXd frames;

  Eigen::Index length() const { return frames.rows(); }
  Eigen::Index dims() const { return frames.cols(); }
};

// Throws ValidationError unless T >= 1 and every value is finite.
void validate(const EmbeddingSequence& sequence);

inline constexpr double kLogEnergyFloor = 1e-10;

struct SpectralConfig {
  int n_bands = 80;
  double frame_s = 0.025;
  double hop_s = 0.010;
};

// Log energies of n_bands linearly spaced triangular bands spanning 0 Hz to
// Nyquist, from the Hann-windowed power spectrum of each frame.
// Frame count is floor((len - frame) / hop) + 1.
EmbeddingSequence spectral_features(const AudioBuffer& audio, const SpectralConfig& config = {});

}  // namespace spoofkit
