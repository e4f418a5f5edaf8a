#include "spoofkit/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spoofkit/error.hpp"

namespace spoofkit {
namespace {

double cosine_anneal(double from, double to, double fraction) {
  return to + (from - to) * 0.5 * (1.0 + std::cos(std::numbers::pi * fraction));
}

}  // namespace

void validate(const OptimizerConfig& c) {
  for (const auto* g : {&c.backbone, &c.head}) {
    if (!(g->lr > 0.0)) throw ValidationError("learning rates must be > 0");
    if (!(g->weight_decay >= 0.0)) throw ValidationError("weight decay must be >= 0");
  }
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0))
    throw ValidationError("Adam betas must lie in [0, 1)");
  if (!(c.eps > 0.0)) throw ValidationError("Adam eps must be > 0");
  if (c.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (c.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(c.schedule.pct_up > 0.0 && c.schedule.pct_up < 1.0))
    throw ValidationError("schedule.pct_up must lie in (0, 1)");
  if (!(c.schedule.div_initial > 0.0 && c.schedule.div_final > 0.0))
    throw ValidationError("schedule divisors must be > 0");
}

double one_cycle_lr(std::size_t step, std::size_t total_steps, double base_lr,
                    const OneCycleConfig& config) {
  if (step >= total_steps)
    throw ValidationError("schedule step " + std::to_string(step) + " out of range [0, " +
                          std::to_string(total_steps) + ")");
  const double initial = base_lr / config.div_initial;
  if (total_steps == 1) return initial;
  const auto last = total_steps - 1;
  auto peak = static_cast<std::size_t>(std::llround(config.pct_up * static_cast<double>(total_steps)));
  peak = std::clamp<std::size_t>(peak, 1, last);
  if (step <= peak)
    return cosine_anneal(initial, base_lr, static_cast<double>(step) / static_cast<double>(peak));
  const double fraction = static_cast<double>(step - peak) / static_cast<double>(last - peak);
  return cosine_anneal(base_lr, base_lr / config.div_final, fraction);
}

void adamw_step(std::span<double> params, std::span<const double> grads, MomentBuffers& moments,
                double lr, double weight_decay, double beta1, double beta2, double eps,
                std::string_view name) {
  if (grads.size() != params.size())
    throw ValidationError("gradient for '" + std::string(name) + "' has the wrong size");
  if (moments.first.empty()) {
    moments.first.assign(params.size(), 0.0);
    moments.second.assign(params.size(), 0.0);
  }
  if (moments.first.size() != params.size())
    throw ValidationError("moment buffers for '" + std::string(name) + "' have the wrong size");
  for (double g : grads)
    if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + std::string(name) + "'");

  ++moments.steps;
  const double t = static_cast<double>(moments.steps);
  const double bias1 = 1.0 - std::pow(beta1, t);
  const double bias2 = 1.0 - std::pow(beta2, t);
  const double decay = 1.0 - lr * weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = moments.first[i];
    auto& v = moments.second[i];
    m = beta1 * m + (1.0 - beta1) * grads[i];
    v = beta2 * v + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    params[i] = params[i] * decay - lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

ParamGroup group_of(std::string_view name) {
  return name.starts_with("adapter.") ? ParamGroup::backbone : ParamGroup::head;
}

ParameterOptimizer::ParameterOptimizer(const OptimizerConfig& config, const Parameters& like)
    : config_(config) {
  validate(config_);
  like.for_each([this](std::string_view, const auto&) { moments_.emplace_back(); });
}

void ParameterOptimizer::step(Parameters& params, const GradientSet& grads, double lr_backbone,
                              double lr_head) {
  std::vector<std::span<const double>> grad_views;
  grads.for_each([&grad_views](std::string_view, const auto& g) {
    grad_views.emplace_back(g.data(), static_cast<std::size_t>(g.size()));
  });
  if (grad_views.size() != moments_.size())
    throw ValidationError("gradient set does not match the optimized parameters");

  std::size_t k = 0;
  params.for_each([&](std::string_view name, auto& p) {
    const bool backbone = group_of(name) == ParamGroup::backbone;
    const auto& group = backbone ? config_.backbone : config_.head;
    adamw_step(std::span<double>(p.data(), static_cast<std::size_t>(p.size())), grad_views[k],
               moments_[k], backbone ? lr_backbone : lr_head, group.weight_decay, config_.beta1,
               config_.beta2, config_.eps, name);
    ++k;
  });
  round_to_float32(params);
}

}  // namespace spoofkit
