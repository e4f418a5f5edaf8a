#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include <Eigen/Dense>
#include <json.hpp>

#include "spoofkit/features.hpp"

namespace spoofkit {

inline constexpr Eigen::Index kHiddenDim = 512;
inline constexpr Eigen::Index kEmbeddingDim = 64;
inline constexpr Eigen::Index kNumClasses = 2;
inline constexpr double kDefaultLeakySlope = 0.01;

struct Linear {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

// Trainable tensors. The head is Linear(D,512) -> LeakyReLU -> Linear(512,64)
// -> LeakyReLU -> Linear(64,2); the optional adapter is a D x D affine map in
// front of it standing in for the fine-tunable backbone.
struct Parameters {
  std::optional<Linear> adapter;
  Linear fc1;
  Linear fc2;
  Linear fc3;
  Eigen::MatrixXd centers;       // 2 x 64, one row per class
  Eigen::VectorXd oc_direction;  // 64

  // Visits every tensor in checkpoint order as f(name, tensor), where tensor
  // is an Eigen::MatrixXd or Eigen::VectorXd.
  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  Parameters zeros_like() const;
  std::size_t scalar_count() const;

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    if (self.adapter) {
      f(std::string_view("adapter.weight"), self.adapter->weight);
      f(std::string_view("adapter.bias"), self.adapter->bias);
    }
    f(std::string_view("head.0.weight"), self.fc1.weight);
    f(std::string_view("head.0.bias"), self.fc1.bias);
    f(std::string_view("head.2.weight"), self.fc2.weight);
    f(std::string_view("head.2.bias"), self.fc2.bias);
    f(std::string_view("head.4.weight"), self.fc3.weight);
    f(std::string_view("head.4.bias"), self.fc3.bias);
    f(std::string_view("centers"), self.centers);
    f(std::string_view("oc_direction"), self.oc_direction);
  }
};

using GradientSet = Parameters;

struct ModelState {
  Parameters params;
  double leaky_slope = kDefaultLeakySlope;
  std::uint64_t seed = 0;
  // Free-form provenance (config hash, provider config, epoch) carried into checkpoints.
  nlohmann::json meta = nlohmann::json::object();

  Eigen::Index input_dim() const { return params.fc1.weight.cols(); }
  bool has_adapter() const { return params.adapter.has_value(); }
};

// Throws ValidationError if any tensor shape deviates from the architecture
// or any value is non-finite.
void validate(const ModelState& state);

// Fan-in scaled uniform init: weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
// The adapter starts as the identity, centers at zero, and oc_direction is a
// random unit vector. All values are float32-representable.
ModelState init_state(std::uint64_t seed, Eigen::Index input_dim, bool with_adapter,
                      double leaky_slope = kDefaultLeakySlope);

// Rounds every parameter to the nearest float32; checkpoints store float32.
void round_to_float32(Parameters& params);

Eigen::VectorXd pool_temporal_mean(const EmbeddingSequence& sequence);

struct ForwardTrace {
  Eigen::VectorXd pooled;
  Eigen::VectorXd adapted;      // adapter output, or pooled when there is no adapter
  Eigen::VectorXd hidden_pre;   // 512, before activation
  Eigen::VectorXd hidden;       // 512
  Eigen::VectorXd penultimate_pre;
  Eigen::VectorXd penultimate;  // 64, post-activation input to the final Linear
  Eigen::Vector2d logits;

  // Index 1 is the fake class; scores are p(fake).
  Eigen::Vector2d probabilities() const;
  double p_fake() const { return probabilities()(1); }
};

ForwardTrace forward(const ModelState& state, const EmbeddingSequence& sequence);
ForwardTrace forward_pooled(const ModelState& state, const Eigen::VectorXd& pooled);

// Reverse-mode gradients of a loss whose upstream gradients are given at the
// logits and at the penultimate embedding. centers/oc_direction entries are
// zero; their gradients come from the losses that own them.
GradientSet backward(const ModelState& state, const ForwardTrace& trace,
                     const Eigen::Vector2d& d_logits, const Eigen::VectorXd& d_penultimate);

// Accumulating variant used by batched training: grads += backward(...).
void backward_accumulate(const ModelState& state, const ForwardTrace& trace,
                         const Eigen::Vector2d& d_logits, const Eigen::VectorXd& d_penultimate,
                         GradientSet& grads);

// Checkpoint I/O in the tensor-file format; bit-exact for float32-representable states.
void save_checkpoint(const std::filesystem::path& path, const ModelState& state);
ModelState load_checkpoint(const std::filesystem::path& path);
std::string encode_checkpoint(const ModelState& state);
ModelState decode_checkpoint(std::string_view bytes);

}  // namespace spoofkit
