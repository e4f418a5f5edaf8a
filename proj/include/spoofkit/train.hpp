#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spoofkit/dsp.hpp"
#include "spoofkit/losses.hpp"
#include "spoofkit/manifest.hpp"
#include "spoofkit/model.hpp"
#include "spoofkit/optim.hpp"
#include "spoofkit/provider.hpp"

namespace spoofkit {

struct TrainConfig {
  LossConfig loss;
  OptimizerConfig optimizer;
  AugmentationPolicy augmentation;
  double crop_s = 3.5;
  std::uint64_t seed = 0;
  // Optional frozen teacher; its softened probabilities feed the distillation term.
  std::optional<ModelState> teacher;
};

struct EpochRecord {
  int epoch = 0;  // 0 is the untrained initial state
  std::optional<double> train_loss;
  double val_loss = 0.0;
  double lr_backbone = 0.0;  // rate used by the last step of the epoch
  double lr_head = 0.0;
  std::int64_t step = 0;
};

struct CheckpointRecord {
  int epoch = 0;
  double val_loss = 0.0;
  ModelState state;
};

struct TrainRunState {
  std::int64_t step = 0;
  std::vector<EpochRecord> log;
  std::vector<CheckpointRecord> checkpoints;  // one per trained epoch, immutable once recorded
  std::vector<MomentBuffers> moments;
  ModelState final_state;
};

using EpochCallback = std::function<void(const EpochRecord&, const CheckpointRecord*)>;

// Seeded epoch loop: shuffle, per-utterance crop + augmentation + embedding,
// composite loss, two-group AdamW under the one-cycle schedule. After every
// epoch the validation loss is measured on one centered, power-normalized,
// non-augmented crop per utterance, evaluated in batches of batch_size; the
// epoch-0 entry records the untrained state.
TrainRunState train(const Manifest& train_set, const Manifest& val_set,
                    const EmbeddingProvider& provider, ModelState initial, const TrainConfig& config,
                    const EpochCallback& on_epoch = {});

struct SelectionStrategy {
  enum class Kind { best_val, swa } kind = Kind::best_val;
  int k = 1;

  static SelectionStrategy best_val() { return {Kind::best_val, 1}; }
  static SelectionStrategy swa(int k) { return {Kind::swa, k}; }
};

// Index of the lowest validation loss; ties go to the earliest checkpoint.
std::size_t best_checkpoint_index(std::span<const CheckpointRecord> checkpoints);

// Elementwise mean, rounded to float32 like every stored state.
ModelState average_states(std::span<const ModelState> states);

// best_val: argmin validation loss. swa(k): mean of the k consecutive
// checkpoints centered on the best one, with the window clipped to the run.
ModelState select_checkpoint(std::span<const CheckpointRecord> checkpoints, SelectionStrategy strategy);

}  // namespace spoofkit
