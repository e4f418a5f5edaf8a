#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "spoofkit/manifest.hpp"
#include "spoofkit/model.hpp"

namespace spoofkit {

// Numerically stable scalar helpers.
double softplus(double x);
double sigmoid(double x);
Eigen::Vector2d softmax(const Eigen::Vector2d& logits);
Eigen::Vector2d log_softmax(const Eigen::Vector2d& logits);

struct LogitLoss {
  double loss = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();  // d loss / d logits
};

LogitLoss cross_entropy(const Eigen::Vector2d& logits, Label y);

// -(1 - p_t)^gamma * log(p_t); identical to cross_entropy when gamma == 0.
LogitLoss focal_loss(const Eigen::Vector2d& logits, Label y, double gamma);

// T^2 * CE(teacher, softmax(logits / T)); the gradient is T * (q - teacher).
LogitLoss distillation_loss(const Eigen::Vector2d& student_logits, const Eigen::Vector2d& teacher_probs,
                            double temperature);

enum class Reduction { sum, mean };

struct CenterLossResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_embeddings;  // N x E
  Eigen::MatrixXd grad_centers;     // C x E
};

// 1/2 * sum_i ||x_i - c_{y_i}||^2 over the rows of `embeddings` (sum reduction
// by default; mean divides by N).
CenterLossResult center_loss(const Eigen::MatrixXd& embeddings, std::span<const Label> labels,
                             const Eigen::MatrixXd& centers, Reduction reduction = Reduction::sum);

// max(0, L_center - margin) with the zero subgradient at and below the margin.
CenterLossResult hinged_center_loss(const Eigen::MatrixXd& embeddings, std::span<const Label> labels,
                                    const Eigen::MatrixXd& centers, double margin = 1.0,
                                    Reduction reduction = Reduction::sum);

// softplus(beta * (L_center - margin)). With inverse_beta_scale the result is
// divided by beta, which converges to the hard hinge as beta grows.
CenterLossResult smooth_hinged_center_loss(const Eigen::MatrixXd& embeddings,
                                           std::span<const Label> labels,
                                           const Eigen::MatrixXd& centers, double beta = 20.0,
                                           double margin = 1.0, bool inverse_beta_scale = false,
                                           Reduction reduction = Reduction::sum);

struct OcSoftmaxResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_embeddings;  // N x E
  Eigen::VectorXd grad_direction;   // E
};

// One-class softmax on L2-normalized embeddings and direction:
// mean_i softplus(alpha * (m_{y_i} - w.x_i) * (-1)^{y_i}).
OcSoftmaxResult oc_softmax_loss(const Eigen::MatrixXd& embeddings, std::span<const Label> labels,
                                const Eigen::VectorXd& direction, double alpha = 20.0,
                                double margin_real = 0.9, double margin_fake = 0.2);

struct LossWeights {
  double cross_entropy = 1.0;
  double focal = 0.0;
  double center = 0.0;
  double hinged_center = 0.0;
  double smooth_hinged_center = 0.0;
  double oc_softmax = 0.0;
};

struct LossConfig {
  double gamma = 2.0;
  double beta = 20.0;
  double hinge_margin = 1.0;
  double oc_alpha = 20.0;
  double oc_margin_real = 0.9;
  double oc_margin_fake = 0.2;
  LossWeights weights;
  // Applied only to batch items that carry teacher probabilities.
  double distill_weight = 0.5;
  double distill_temperature = 2.0;
  Reduction center_reduction = Reduction::sum;
  bool smooth_hinge_inverse_beta = false;
};

void validate(const LossConfig& config);

struct CompositeLoss {
  double loss = 0.0;
  std::map<std::string, double> terms;  // weighted contribution of each enabled term
  std::optional<GradientSet> gradients;
};

// Weighted sum of the enabled terms over a batch. Classification terms are
// mean-reduced; center-family terms act on the 64-d penultimate embeddings,
// OC-softmax on the same embeddings and oc_direction. `teacher_probs` is either
// empty or one optional entry per item.
CompositeLoss composite_loss(const ModelState& state, std::span<const ForwardTrace> traces,
                             std::span<const Label> labels, const LossConfig& config,
                             std::span<const std::optional<Eigen::Vector2d>> teacher_probs = {},
                             bool with_gradients = true);

}  // namespace spoofkit
