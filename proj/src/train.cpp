#include "spoofkit/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spoofkit/error.hpp"
#include "spoofkit/rng.hpp"

namespace spoofkit {
namespace {

// Validation crops never change across epochs and file-store embeddings never
// change at all, so their pooled vectors are computed once.
class PooledCache {
 public:
  PooledCache(const Manifest& manifest, const EmbeddingProvider& provider, Eigen::Index dim)
      : manifest_(manifest), provider_(provider), dim_(dim), pooled_(manifest.size()) {}

  const Eigen::VectorXd& get(std::size_t i, double crop_s) {
    auto& slot = pooled_[i];
    if (!slot) {
      const auto& entry = manifest_.entries[i];
      EmbeddingSequence seq;
      if (provider_.consumes_audio()) {
        const auto crop = center_crop(load_entry_audio(manifest_, entry), crop_s);
        seq = provider_.embed_audio(prepare_eval_segment(crop));
      } else {
        seq = provider_.embed_entry(manifest_, entry);
      }
      slot = pool_checked(seq, entry.id);
    }
    return *slot;
  }

  Eigen::VectorXd pool_checked(const EmbeddingSequence& seq, const std::string& id) const {
    if (seq.dims() != dim_)
      throw ValidationError("embedding for id '" + id + "' has dimension " + std::to_string(seq.dims()) +
                            ", model expects " + std::to_string(dim_));
    return pool_temporal_mean(seq);
  }

 private:
  const Manifest& manifest_;
  const EmbeddingProvider& provider_;
  Eigen::Index dim_;
  std::vector<std::optional<Eigen::VectorXd>> pooled_;
};

std::optional<Eigen::Vector2d> teacher_probs(const TrainConfig& config, const Eigen::VectorXd& pooled) {
  if (!config.teacher) return std::nullopt;
  const auto t = forward_pooled(*config.teacher, pooled);
  return softmax(t.logits / config.loss.distill_temperature);
}

double validation_loss(const ModelState& state, const Manifest& val_set, PooledCache& cache,
                       const TrainConfig& config) {
  const auto batch = static_cast<std::size_t>(config.optimizer.batch_size);
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < val_set.size(); start += batch) {
    const auto stop = std::min(start + batch, val_set.size());
    std::vector<ForwardTrace> traces;
    std::vector<Label> labels;
    std::vector<std::optional<Eigen::Vector2d>> teachers;
    for (std::size_t i = start; i < stop; ++i) {
      const auto& pooled = cache.get(i, config.crop_s);
      traces.push_back(forward_pooled(state, pooled));
      labels.push_back(val_set.entries[i].label);
      teachers.push_back(teacher_probs(config, pooled));
    }
    const auto teacher_view = config.teacher ? std::span<const std::optional<Eigen::Vector2d>>(teachers)
                                             : std::span<const std::optional<Eigen::Vector2d>>();
    total += composite_loss(state, traces, labels, config.loss, teacher_view, false).loss;
    ++batches;
  }
  return total / static_cast<double>(batches);
}

}  // namespace

TrainRunState train(const Manifest& train_set, const Manifest& val_set,
                    const EmbeddingProvider& provider, ModelState initial, const TrainConfig& config,
                    const EpochCallback& on_epoch) {
  if (train_set.empty()) throw ValidationError("training manifest is empty");
  if (val_set.empty()) throw ValidationError("validation manifest is empty");
  validate(config.loss);
  validate(config.optimizer);
  validate(config.augmentation);
  validate(initial);
  if (auto d = provider.dim(); d && *d != initial.input_dim())
    throw ValidationError("provider dimension " + std::to_string(*d) +
                          " does not match model input dimension " +
                          std::to_string(initial.input_dim()));
  if (config.teacher) {
    validate(*config.teacher);
    if (config.teacher->input_dim() != initial.input_dim())
      throw ValidationError("teacher input dimension does not match the student");
  }

  TrainRunState run;
  ModelState state = std::move(initial);
  ParameterOptimizer optimizer(config.optimizer, state.params);
  PooledCache val_cache(val_set, provider, state.input_dim());
  PooledCache train_cache(train_set, provider, state.input_dim());

  const auto batch = static_cast<std::size_t>(config.optimizer.batch_size);
  const std::size_t batches_per_epoch = (train_set.size() + batch - 1) / batch;
  const std::size_t total_steps = batches_per_epoch * static_cast<std::size_t>(config.optimizer.epochs);

  EpochRecord initial_record;
  initial_record.val_loss = validation_loss(state, val_set, val_cache, config);
  run.log.push_back(initial_record);
  if (on_epoch) on_epoch(initial_record, nullptr);

  for (int epoch = 1; epoch <= config.optimizer.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    EpochRecord record;
    record.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto stop = std::min(start + batch, order.size());
      std::vector<ForwardTrace> traces;
      std::vector<Label> labels;
      std::vector<std::optional<Eigen::Vector2d>> teachers;
      for (std::size_t k = start; k < stop; ++k) {
        const auto& entry = train_set.entries[order[k]];
        Eigen::VectorXd pooled;
        if (provider.consumes_audio()) {
          const auto segment =
              prepare_train_segment(load_entry_audio(train_set, entry), config.crop_s, config.augmentation, rng);
          pooled = train_cache.pool_checked(provider.embed_audio(segment), entry.id);
        } else {
          pooled = train_cache.get(order[k], config.crop_s);
        }
        traces.push_back(forward_pooled(state, pooled));
        labels.push_back(entry.label);
        teachers.push_back(teacher_probs(config, pooled));
      }
      const auto teacher_view = config.teacher ? std::span<const std::optional<Eigen::Vector2d>>(teachers)
                                               : std::span<const std::optional<Eigen::Vector2d>>();
      auto result = composite_loss(state, traces, labels, config.loss, teacher_view, true);
      if (!std::isfinite(result.loss))
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(run.step));

      const auto step = static_cast<std::size_t>(run.step);
      record.lr_backbone = one_cycle_lr(step, total_steps, config.optimizer.backbone.lr, config.optimizer.schedule);
      record.lr_head = one_cycle_lr(step, total_steps, config.optimizer.head.lr, config.optimizer.schedule);
      optimizer.step(state.params, *result.gradients, record.lr_backbone, record.lr_head);
      loss_sum += result.loss;
      ++run.step;
    }

    record.train_loss = loss_sum / static_cast<double>(batches_per_epoch);
    record.val_loss = validation_loss(state, val_set, val_cache, config);
    record.step = run.step;
    if (!std::isfinite(record.val_loss))
      throw NumericError("validation loss diverged at epoch " + std::to_string(epoch));

    state.meta["epoch"] = epoch;
    run.checkpoints.push_back({epoch, record.val_loss, state});
    run.log.push_back(record);
    if (on_epoch) on_epoch(record, &run.checkpoints.back());
  }

  run.moments = optimizer.moments();
  run.final_state = std::move(state);
  return run;
}

std::size_t best_checkpoint_index(std::span<const CheckpointRecord> checkpoints) {
  if (checkpoints.empty()) throw ValidationError("no checkpoints to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < checkpoints.size(); ++i)
    if (checkpoints[i].val_loss < checkpoints[best].val_loss) best = i;
  return best;
}

ModelState average_states(std::span<const ModelState> states) {
  if (states.empty()) throw ValidationError("cannot average zero checkpoints");
  ModelState out = states.front();
  for (const auto& s : states) validate(s);
  std::vector<double*> dst;
  out.params.for_each([&dst](std::string_view, auto& t) { dst.push_back(t.data()); });

  std::vector<std::size_t> sizes;
  out.params.for_each([&sizes](std::string_view, const auto& t) { sizes.push_back(static_cast<std::size_t>(t.size())); });
  for (std::size_t tensor = 0; tensor < dst.size(); ++tensor)
    std::fill(dst[tensor], dst[tensor] + sizes[tensor], 0.0);

  for (const auto& s : states) {
    std::size_t tensor = 0;
    bool shape_ok = s.has_adapter() == out.has_adapter() && s.input_dim() == out.input_dim();
    if (!shape_ok) throw ValidationError("cannot average checkpoints with different architectures");
    s.params.for_each([&](std::string_view, const auto& t) {
      for (std::size_t i = 0; i < sizes[tensor]; ++i) dst[tensor][i] += t.data()[i];
      ++tensor;
    });
  }
  const auto k = static_cast<double>(states.size());
  for (std::size_t tensor = 0; tensor < dst.size(); ++tensor)
    for (std::size_t i = 0; i < sizes[tensor]; ++i) dst[tensor][i] /= k;
  round_to_float32(out.params);
  return out;
}

ModelState select_checkpoint(std::span<const CheckpointRecord> checkpoints, SelectionStrategy strategy) {
  const auto best = best_checkpoint_index(checkpoints);
  if (strategy.kind == SelectionStrategy::Kind::best_val) return checkpoints[best].state;

  const auto n = checkpoints.size();
  if (strategy.k < 1 || static_cast<std::size_t>(strategy.k) > n)
    throw ValidationError("SWA window k=" + std::to_string(strategy.k) + " must lie in [1, " +
                          std::to_string(n) + "]");
  const auto k = static_cast<std::size_t>(strategy.k);
  const auto half = (k - 1) / 2;
  std::size_t first = best >= half ? best - half : 0;
  first = std::min(first, n - k);

  std::vector<ModelState> window;
  for (std::size_t i = first; i < first + k; ++i) window.push_back(checkpoints[i].state);
  auto averaged = average_states(window);
  averaged.meta = checkpoints[best].state.meta;
  return averaged;
}

}  // namespace spoofkit
