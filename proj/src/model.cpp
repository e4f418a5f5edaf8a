#include "spoofkit/model.hpp"

#include <cmath>
#include <string>

#include "spoofkit/error.hpp"
#include "spoofkit/io.hpp"
#include "spoofkit/rng.hpp"
#include "spoofkit/tensor_file.hpp"

namespace spoofkit {
namespace {

constexpr int kModelFormatVersion = 1;

double leaky(double z, double slope) { return z > 0.0 ? z : slope * z; }

Eigen::VectorXd leaky(const Eigen::VectorXd& z, double slope) {
  return z.unaryExpr([slope](double v) { return leaky(v, slope); });
}

Eigen::VectorXd leaky_grad(const Eigen::VectorXd& z, const Eigen::VectorXd& upstream, double slope) {
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out(i) = z(i) > 0.0 ? upstream(i) : slope * upstream(i);
  return out;
}

Linear uniform_linear(Eigen::Index out, Eigen::Index in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Linear layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
  // Row-major draw order so the init is independent of Eigen's storage order.
  for (Eigen::Index r = 0; r < out; ++r)
    for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
  for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = rng.uniform(-bound, bound);
  return layer;
}

template <class Tensor>
void round_tensor(Tensor& t) {
  for (Eigen::Index i = 0; i < t.size(); ++i)
    t.data()[i] = static_cast<double>(static_cast<float>(t.data()[i]));
}

template <class Tensor>
NamedTensor to_named(std::string_view name, const Tensor& t) {
  NamedTensor out;
  out.name = std::string(name);
  if constexpr (Tensor::ColsAtCompileTime == 1) {
    out.shape = {static_cast<std::int64_t>(t.size())};
    out.values.resize(static_cast<std::size_t>(t.size()));
    for (Eigen::Index i = 0; i < t.size(); ++i) out.values[static_cast<std::size_t>(i)] = static_cast<float>(t(i));
  } else {
    out.shape = {static_cast<std::int64_t>(t.rows()), static_cast<std::int64_t>(t.cols())};
    out.values.resize(static_cast<std::size_t>(t.size()));
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) out.values[k++] = static_cast<float>(t(r, c));
  }
  return out;
}

Eigen::MatrixXd matrix_from(const NamedTensor& t) {
  if (t.shape.size() != 2) throw ValidationError("tensor '" + t.name + "' must be 2-D");
  Eigen::MatrixXd m(t.shape[0], t.shape[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.values[k++];
  return m;
}

Eigen::VectorXd vector_from(const NamedTensor& t) {
  if (t.shape.size() != 1) throw ValidationError("tensor '" + t.name + "' must be 1-D");
  Eigen::VectorXd v(t.shape[0]);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = t.values[static_cast<std::size_t>(i)];
  return v;
}

void expect_shape(std::string_view name, Eigen::Index rows, Eigen::Index cols, Eigen::Index want_rows,
                  Eigen::Index want_cols) {
  if (rows != want_rows || cols != want_cols)
    throw ValidationError("parameter '" + std::string(name) + "' has shape " +
                          std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                          std::to_string(want_rows) + "x" + std::to_string(want_cols));
}

}  // namespace

Parameters Parameters::zeros_like() const {
  Parameters z = *this;
  z.for_each([](std::string_view, auto& t) { t.setZero(); });
  return z;
}

std::size_t Parameters::scalar_count() const {
  std::size_t n = 0;
  for_each([&n](std::string_view, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

void validate(const ModelState& state) {
  const auto& p = state.params;
  const auto d = p.fc1.weight.cols();
  if (d < 1) throw ValidationError("model input dimension must be >= 1");
  if (p.adapter) {
    expect_shape("adapter.weight", p.adapter->weight.rows(), p.adapter->weight.cols(), d, d);
    expect_shape("adapter.bias", p.adapter->bias.rows(), 1, d, 1);
  }
  expect_shape("head.0.weight", p.fc1.weight.rows(), p.fc1.weight.cols(), kHiddenDim, d);
  expect_shape("head.0.bias", p.fc1.bias.rows(), 1, kHiddenDim, 1);
  expect_shape("head.2.weight", p.fc2.weight.rows(), p.fc2.weight.cols(), kEmbeddingDim, kHiddenDim);
  expect_shape("head.2.bias", p.fc2.bias.rows(), 1, kEmbeddingDim, 1);
  expect_shape("head.4.weight", p.fc3.weight.rows(), p.fc3.weight.cols(), kNumClasses, kEmbeddingDim);
  expect_shape("head.4.bias", p.fc3.bias.rows(), 1, kNumClasses, 1);
  expect_shape("centers", p.centers.rows(), p.centers.cols(), kNumClasses, kEmbeddingDim);
  expect_shape("oc_direction", p.oc_direction.rows(), 1, kEmbeddingDim, 1);
  p.for_each([](std::string_view name, const auto& t) {
    if (!t.allFinite()) throw ValidationError("parameter '" + std::string(name) + "' is not finite");
  });
  if (!std::isfinite(state.leaky_slope)) throw ValidationError("leaky slope must be finite");
}

ModelState init_state(std::uint64_t seed, Eigen::Index input_dim, bool with_adapter,
                      double leaky_slope) {
  if (input_dim < 1) throw ValidationError("input dimension must be >= 1");
  Rng rng(seed);
  ModelState state;
  state.seed = seed;
  state.leaky_slope = leaky_slope;
  auto& p = state.params;
  if (with_adapter)
    p.adapter = Linear{Eigen::MatrixXd::Identity(input_dim, input_dim), Eigen::VectorXd::Zero(input_dim)};
  p.fc1 = uniform_linear(kHiddenDim, input_dim, rng);
  p.fc2 = uniform_linear(kEmbeddingDim, kHiddenDim, rng);
  p.fc3 = uniform_linear(kNumClasses, kEmbeddingDim, rng);
  p.centers = Eigen::MatrixXd::Zero(kNumClasses, kEmbeddingDim);
  p.oc_direction.resize(kEmbeddingDim);
  for (Eigen::Index i = 0; i < kEmbeddingDim; ++i) p.oc_direction(i) = rng.normal();
  p.oc_direction.normalize();
  round_to_float32(p);
  return state;
}

void round_to_float32(Parameters& params) {
  params.for_each([](std::string_view, auto& t) { round_tensor(t); });
}

Eigen::VectorXd pool_temporal_mean(const EmbeddingSequence& sequence) {
  if (sequence.length() < 1) throw ValidationError("cannot pool an empty embedding sequence");
  return sequence.frames.colwise().mean().transpose();
}

Eigen::Vector2d ForwardTrace::probabilities() const {
  const double m = logits.maxCoeff();
  Eigen::Vector2d e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

ForwardTrace forward_pooled(const ModelState& state, const Eigen::VectorXd& pooled) {
  const auto& p = state.params;
  if (pooled.size() != state.input_dim())
    throw ValidationError("embedding dimension " + std::to_string(pooled.size()) +
                          " does not match model input dimension " +
                          std::to_string(state.input_dim()));
  ForwardTrace t;
  t.pooled = pooled;
  t.adapted = p.adapter ? Eigen::VectorXd(p.adapter->weight * pooled + p.adapter->bias) : pooled;
  t.hidden_pre = p.fc1.weight * t.adapted + p.fc1.bias;
  t.hidden = leaky(t.hidden_pre, state.leaky_slope);
  t.penultimate_pre = p.fc2.weight * t.hidden + p.fc2.bias;
  t.penultimate = leaky(t.penultimate_pre, state.leaky_slope);
  t.logits = p.fc3.weight * t.penultimate + p.fc3.bias;
  if (!t.logits.allFinite()) throw NumericError("forward pass produced non-finite logits");
  return t;
}

ForwardTrace forward(const ModelState& state, const EmbeddingSequence& sequence) {
  return forward_pooled(state, pool_temporal_mean(sequence));
}

void backward_accumulate(const ModelState& state, const ForwardTrace& trace,
                         const Eigen::Vector2d& d_logits, const Eigen::VectorXd& d_penultimate,
                         GradientSet& grads) {
  const auto& p = state.params;
  if (d_penultimate.size() != kEmbeddingDim)
    throw ValidationError("penultimate gradient must have 64 entries");
  if (trace.pooled.size() != state.input_dim())
    throw ValidationError("trace does not belong to this model state");
  if (grads.adapter.has_value() != p.adapter.has_value())
    throw ValidationError("gradient set and model state disagree on the adapter");

  grads.fc3.weight.noalias() += d_logits * trace.penultimate.transpose();
  grads.fc3.bias += d_logits;
  const Eigen::VectorXd d_pen = p.fc3.weight.transpose() * d_logits + d_penultimate;
  const Eigen::VectorXd d_pen_pre = leaky_grad(trace.penultimate_pre, d_pen, state.leaky_slope);

  grads.fc2.weight.noalias() += d_pen_pre * trace.hidden.transpose();
  grads.fc2.bias += d_pen_pre;
  const Eigen::VectorXd d_hidden = p.fc2.weight.transpose() * d_pen_pre;
  const Eigen::VectorXd d_hidden_pre = leaky_grad(trace.hidden_pre, d_hidden, state.leaky_slope);

  grads.fc1.weight.noalias() += d_hidden_pre * trace.adapted.transpose();
  grads.fc1.bias += d_hidden_pre;
  if (p.adapter) {
    const Eigen::VectorXd d_adapted = p.fc1.weight.transpose() * d_hidden_pre;
    grads.adapter->weight.noalias() += d_adapted * trace.pooled.transpose();
    grads.adapter->bias += d_adapted;
  }
}

GradientSet backward(const ModelState& state, const ForwardTrace& trace,
                     const Eigen::Vector2d& d_logits, const Eigen::VectorXd& d_penultimate) {
  GradientSet grads = state.params.zeros_like();
  backward_accumulate(state, trace, d_logits, d_penultimate, grads);
  return grads;
}

std::string encode_checkpoint(const ModelState& state) {
  validate(state);
  TensorFile file;
  file.meta = state.meta;
  file.meta["kind"] = "spoofkit-model";
  file.meta["model_version"] = kModelFormatVersion;
  file.meta["input_dim"] = state.input_dim();
  file.meta["adapter"] = state.has_adapter();
  file.meta["leaky_slope"] = state.leaky_slope;
  file.meta["seed"] = state.seed;
  state.params.for_each(
      [&file](std::string_view name, const auto& t) { file.tensors.push_back(to_named(name, t)); });
  return encode_tensor_file(file);
}

ModelState decode_checkpoint(std::string_view bytes) {
  const auto file = decode_tensor_file(bytes);
  if (file.meta.value("kind", "") != "spoofkit-model")
    throw ValidationError("tensor file is not a spoofkit model checkpoint");
  if (file.meta.value("model_version", 0) != kModelFormatVersion)
    throw ValidationError("unsupported checkpoint model version");

  ModelState state;
  state.meta = file.meta;
  for (const char* key : {"kind", "model_version", "input_dim", "adapter", "leaky_slope", "seed"})
    state.meta.erase(key);
  state.leaky_slope = file.meta.at("leaky_slope").get<double>();
  state.seed = file.meta.at("seed").get<std::uint64_t>();
  auto& p = state.params;
  if (file.meta.at("adapter").get<bool>())
    p.adapter = Linear{matrix_from(file.at("adapter.weight")), vector_from(file.at("adapter.bias"))};
  p.fc1 = {matrix_from(file.at("head.0.weight")), vector_from(file.at("head.0.bias"))};
  p.fc2 = {matrix_from(file.at("head.2.weight")), vector_from(file.at("head.2.bias"))};
  p.fc3 = {matrix_from(file.at("head.4.weight")), vector_from(file.at("head.4.bias"))};
  p.centers = matrix_from(file.at("centers"));
  p.oc_direction = vector_from(file.at("oc_direction"));
  validate(state);
  return state;
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& state) {
  write_file(path, encode_checkpoint(state));
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("checkpoint not found: " + path.string());
  try {
    return decode_checkpoint(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": malformed checkpoint header: " + e.what());
  }
}

}  // namespace spoofkit
