#include "spoofkit/losses.hpp"

#include <cmath>
#include <string>

#include "spoofkit/error.hpp"

namespace spoofkit {
namespace {

int index_of(Label y) { return static_cast<int>(y); }

void check_batch(const Eigen::MatrixXd& embeddings, std::span<const Label> labels) {
  if (embeddings.rows() < 1) throw ValidationError("loss needs a non-empty batch");
  if (static_cast<std::size_t>(embeddings.rows()) != labels.size())
    throw ValidationError("batch has " + std::to_string(embeddings.rows()) + " embeddings but " +
                          std::to_string(labels.size()) + " labels");
}

}  // namespace

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::Vector2d log_softmax(const Eigen::Vector2d& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

Eigen::Vector2d softmax(const Eigen::Vector2d& logits) { return log_softmax(logits).array().exp().matrix(); }

LogitLoss cross_entropy(const Eigen::Vector2d& logits, Label y) {
  const auto logp = log_softmax(logits);
  LogitLoss out;
  out.loss = -logp(index_of(y));
  out.grad = logp.array().exp().matrix();
  out.grad(index_of(y)) -= 1.0;
  return out;
}

LogitLoss focal_loss(const Eigen::Vector2d& logits, Label y, double gamma) {
  if (!(gamma >= 0.0)) throw ValidationError("focal gamma must be >= 0");
  const int t = index_of(y);
  const auto logp = log_softmax(logits);
  const double log_pt = logp(t);
  const double pt = std::exp(log_pt);
  // 1 - p_t taken from the other class's probability keeps precision near p_t = 1.
  const double q = std::exp(logp(1 - t));
  const double q_gamma = std::pow(q, gamma);

  LogitLoss out;
  out.loss = -q_gamma * log_pt;
  // d/dz_t = gamma q^gamma p log p - q^(gamma+1); the other logit gets the negation.
  const double d_target = gamma * q_gamma * pt * log_pt - q_gamma * q;
  out.grad(t) = d_target;
  out.grad(1 - t) = -d_target;
  return out;
}

LogitLoss distillation_loss(const Eigen::Vector2d& student_logits, const Eigen::Vector2d& teacher_probs,
                            double temperature) {
  if (!(temperature > 0.0)) throw ValidationError("distillation temperature must be > 0");
  if (!teacher_probs.allFinite() || (teacher_probs.array() < 0.0).any() ||
      std::abs(teacher_probs.sum() - 1.0) > 1e-6)
    throw ValidationError("teacher probabilities must be non-negative and sum to 1");
  const Eigen::Vector2d scaled = student_logits / temperature;
  const auto logq = log_softmax(scaled);
  LogitLoss out;
  out.loss = -temperature * temperature * teacher_probs.dot(logq);
  out.grad = temperature * (logq.array().exp().matrix() - teacher_probs);
  return out;
}

CenterLossResult center_loss(const Eigen::MatrixXd& embeddings, std::span<const Label> labels,
                             const Eigen::MatrixXd& centers, Reduction reduction) {
  check_batch(embeddings, labels);
  if (centers.cols() != embeddings.cols() || centers.rows() < 2)
    throw ValidationError("centers must be C x E with E matching the embeddings");
  const auto n = embeddings.rows();
  const double scale = reduction == Reduction::mean ? 1.0 / static_cast<double>(n) : 1.0;

  CenterLossResult out;
  out.grad_embeddings.resize(n, embeddings.cols());
  out.grad_centers = Eigen::MatrixXd::Zero(centers.rows(), centers.cols());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = index_of(labels[static_cast<std::size_t>(i)]);
    const Eigen::RowVectorXd diff = embeddings.row(i) - centers.row(k);
    acc += diff.squaredNorm();
    out.grad_embeddings.row(i) = scale * diff;
    out.grad_centers.row(k) -= scale * diff;
  }
  out.loss = 0.5 * scale * acc;
  return out;
}

CenterLossResult hinged_center_loss(const Eigen::MatrixXd& embeddings, std::span<const Label> labels,
                                    const Eigen::MatrixXd& centers, double margin,
                                    Reduction reduction) {
  auto out = center_loss(embeddings, labels, centers, reduction);
  if (out.loss > margin) {
    out.loss -= margin;
  } else {
    out.loss = 0.0;
    out.grad_embeddings.setZero();
    out.grad_centers.setZero();
  }
  return out;
}

CenterLossResult smooth_hinged_center_loss(const Eigen::MatrixXd& embeddings,
                                           std::span<const Label> labels,
                                           const Eigen::MatrixXd& centers, double beta,
                                           double margin, bool inverse_beta_scale,
                                           Reduction reduction) {
  if (!(beta > 0.0)) throw ValidationError("softplus sharpness beta must be > 0");
  auto out = center_loss(embeddings, labels, centers, reduction);
  const double z = beta * (out.loss - margin);
  const double scale = inverse_beta_scale ? 1.0 / beta : 1.0;
  out.loss = scale * softplus(z);
  const double factor = scale * sigmoid(z) * beta;
  out.grad_embeddings *= factor;
  out.grad_centers *= factor;
  return out;
}

OcSoftmaxResult oc_softmax_loss(const Eigen::MatrixXd& embeddings, std::span<const Label> labels,
                                const Eigen::VectorXd& direction, double alpha, double margin_real,
                                double margin_fake) {
  check_batch(embeddings, labels);
  if (direction.size() != embeddings.cols())
    throw ValidationError("OC-softmax direction length does not match the embeddings");
  const double w_norm = direction.norm();
  if (!(w_norm > 0.0)) throw ValidationError("OC-softmax direction must be nonzero");
  const Eigen::VectorXd w_hat = direction / w_norm;
  const auto n = embeddings.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  OcSoftmaxResult out;
  out.grad_embeddings = Eigen::MatrixXd::Zero(n, embeddings.cols());
  out.grad_direction = Eigen::VectorXd::Zero(direction.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool fake = labels[static_cast<std::size_t>(i)] == Label::fake;
    const Eigen::VectorXd x = embeddings.row(i).transpose();
    const double x_norm = x.norm();
    const Eigen::VectorXd x_hat = x_norm > 0.0 ? Eigen::VectorXd(x / x_norm) : Eigen::VectorXd::Zero(x.size());
    const double s = w_hat.dot(x_hat);
    const double margin = fake ? margin_fake : margin_real;
    const double sign = fake ? -1.0 : 1.0;
    const double arg = alpha * (margin - s) * sign;
    acc += softplus(arg);

    const double d_s = inv_n * sigmoid(arg) * (-alpha * sign);
    if (x_norm > 0.0) out.grad_embeddings.row(i) = (d_s / x_norm) * (w_hat - s * x_hat).transpose();
    out.grad_direction += (d_s / w_norm) * (x_hat - s * w_hat);
  }
  out.loss = acc * inv_n;
  return out;
}

void validate(const LossConfig& c) {
  if (!(c.gamma >= 0.0)) throw ValidationError("loss.gamma must be >= 0");
  if (!(c.beta > 0.0)) throw ValidationError("loss.beta must be > 0");
  if (!std::isfinite(c.hinge_margin)) throw ValidationError("loss.hinge_margin must be finite");
  if (!(c.oc_alpha > 0.0)) throw ValidationError("loss.oc_alpha must be > 0");
  if (!(c.distill_temperature > 0.0)) throw ValidationError("loss.distill_temperature must be > 0");
  if (!(c.distill_weight >= 0.0)) throw ValidationError("loss.distill_weight must be >= 0");
  const auto& w = c.weights;
  for (double v : {w.cross_entropy, w.focal, w.center, w.hinged_center, w.smooth_hinged_center,
                   w.oc_softmax})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("loss weights must be finite and >= 0");
}

CompositeLoss composite_loss(const ModelState& state, std::span<const ForwardTrace> traces,
                             std::span<const Label> labels, const LossConfig& config,
                             std::span<const std::optional<Eigen::Vector2d>> teacher_probs,
                             bool with_gradients) {
  validate(config);
  const auto n = traces.size();
  if (n == 0) throw ValidationError("composite loss needs a non-empty batch");
  if (labels.size() != n) throw ValidationError("composite loss: label count mismatch");
  if (!teacher_probs.empty() && teacher_probs.size() != n)
    throw ValidationError("composite loss: teacher probability count mismatch");

  const auto& w = config.weights;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<Eigen::Vector2d> d_logits(n, Eigen::Vector2d::Zero());
  Eigen::MatrixXd penultimate(static_cast<Eigen::Index>(n), kEmbeddingDim);
  for (std::size_t i = 0; i < n; ++i) penultimate.row(static_cast<Eigen::Index>(i)) = traces[i].penultimate.transpose();
  Eigen::MatrixXd d_penultimate = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), kEmbeddingDim);

  CompositeLoss out;
  if (with_gradients) out.gradients = state.params.zeros_like();

  auto add_logit_term = [&](const char* name, double weight, auto&& per_item) {
    if (weight == 0.0) return;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const LogitLoss l = per_item(i);
      sum += l.loss;
      d_logits[i] += (weight * inv_n) * l.grad;
    }
    out.terms[name] = weight * sum * inv_n;
  };
  add_logit_term("cross_entropy", w.cross_entropy,
                 [&](std::size_t i) { return cross_entropy(traces[i].logits, labels[i]); });
  add_logit_term("focal", w.focal,
                 [&](std::size_t i) { return focal_loss(traces[i].logits, labels[i], config.gamma); });
  if (!teacher_probs.empty()) {
    add_logit_term("distillation", config.distill_weight, [&](std::size_t i) {
      if (!teacher_probs[i]) return LogitLoss{};
      return distillation_loss(traces[i].logits, *teacher_probs[i], config.distill_temperature);
    });
  }

  auto add_center_term = [&](const char* name, double weight, const CenterLossResult& r) {
    out.terms[name] = weight * r.loss;
    d_penultimate += weight * r.grad_embeddings;
    if (out.gradients) out.gradients->centers += weight * r.grad_centers;
  };
  const auto& centers = state.params.centers;
  if (w.center != 0.0)
    add_center_term("center", w.center, center_loss(penultimate, labels, centers, config.center_reduction));
  if (w.hinged_center != 0.0)
    add_center_term("hinged_center", w.hinged_center,
                    hinged_center_loss(penultimate, labels, centers, config.hinge_margin,
                                       config.center_reduction));
  if (w.smooth_hinged_center != 0.0)
    add_center_term("smooth_hinged_center", w.smooth_hinged_center,
                    smooth_hinged_center_loss(penultimate, labels, centers, config.beta,
                                              config.hinge_margin, config.smooth_hinge_inverse_beta,
                                              config.center_reduction));
  if (w.oc_softmax != 0.0) {
    const auto r = oc_softmax_loss(penultimate, labels, state.params.oc_direction, config.oc_alpha,
                                   config.oc_margin_real, config.oc_margin_fake);
    out.terms["oc_softmax"] = w.oc_softmax * r.loss;
    d_penultimate += w.oc_softmax * r.grad_embeddings;
    if (out.gradients) out.gradients->oc_direction += w.oc_softmax * r.grad_direction;
  }

  for (const auto& [name, value] : out.terms) out.loss += value;

  if (out.gradients) {
    for (std::size_t i = 0; i < n; ++i)
      backward_accumulate(state, traces[i], d_logits[i],
                          d_penultimate.row(static_cast<Eigen::Index>(i)).transpose(), *out.gradients);
  }
  return out;
}

}  // namespace spoofkit
