#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "spoofkit/model.hpp"

namespace spoofkit {

struct GroupConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
};

struct OneCycleConfig {
  double pct_up = 0.3;
  double div_initial = 25.0;
  double div_final = 1e4;
};

struct OptimizerConfig {
  GroupConfig backbone{1e-6, 0.0};
  GroupConfig head{1e-3, 0.1};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int epochs = 100;
  int batch_size = 32;
  OneCycleConfig schedule;
};

void validate(const OptimizerConfig& config);

// Cosine warm-up from base_lr/div_initial to base_lr over round(pct_up * total)
// steps, then cosine annealing to base_lr/div_final at the last step.
double one_cycle_lr(std::size_t step, std::size_t total_steps, double base_lr,
                    const OneCycleConfig& config);

struct MomentBuffers {
  std::vector<double> first;
  std::vector<double> second;
  std::int64_t steps = 0;
};

// One AdamW update with decoupled weight decay and bias-corrected moments:
//   p <- p * (1 - lr * wd) - lr * m_hat / (sqrt(v_hat) + eps)
// Throws NumericError naming `name` on a non-finite gradient.
void adamw_step(std::span<double> params, std::span<const double> grads, MomentBuffers& moments,
                double lr, double weight_decay, double beta1, double beta2, double eps,
                std::string_view name = "parameter");

enum class ParamGroup { backbone, head };

// The adapter belongs to the backbone group; head layers, class centers and
// the OC-softmax direction to the head group.
ParamGroup group_of(std::string_view parameter_name);

// AdamW over a full Parameters set with per-group learning rates.
class ParameterOptimizer {
 public:
  ParameterOptimizer(const OptimizerConfig& config, const Parameters& like);

  // Updates `params` in place; parameters are rounded to float32 afterwards.
  void step(Parameters& params, const GradientSet& grads, double lr_backbone, double lr_head);

  const std::vector<MomentBuffers>& moments() const { return moments_; }

 private:
  OptimizerConfig config_;
  std::vector<MomentBuffers> moments_;
};

}  // namespace spoofkit
