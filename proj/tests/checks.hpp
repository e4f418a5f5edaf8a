#pragma once

// Property checks shared by the unit tests and the acceptance binary. Each
// returns a verdict with the measured numbers so failures can be read off the
// acceptance log.

#include <cstdint>
#include <filesystem>
#include <string>

namespace checks {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct GradientOptions {
  int instances = 100;
  std::uint64_t seed = 11;
};

// Every loss term and the model backward pass against central differences.
Verdict loss_gradients(const GradientOptions& options = {});
Verdict model_gradients(const GradientOptions& options = {});

Verdict focal_identity(int pairs = 1000, std::uint64_t seed = 5);

// Below the margin: smooth hinge gradient <= sigmoid(0-) * beta * |grad center|
// and the hard hinge gradient is exactly zero.
Verdict hinge_noncompetition(int batches = 1000, std::uint64_t seed = 9);

Verdict eer_oracle(int sets = 500, std::size_t max_n = 200, std::uint64_t seed = 21);

// EER/AUC unchanged by random valid Platt models; accuracy@0.5 improves on a
// constructed miscalibrated set.
Verdict calibration_invariance(int sets = 100, std::uint64_t seed = 33);
Verdict calibration_accuracy(std::uint64_t seed = 34);

// Trains a small run, then compares swa(k) for every k against the naive
// average and swa(1) against the best-validation checkpoint.
Verdict swa_correctness(const std::filesystem::path& workdir);

Verdict dsp_bandpass();
Verdict dsp_resample();
Verdict dsp_awgn();

}  // namespace checks
