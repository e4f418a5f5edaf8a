#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spoofkit/error.hpp"
#include "spoofkit/losses.hpp"
#include "spoofkit/model.hpp"
#include "spoofkit/tensor_file.hpp"

using namespace spoofkit;

namespace {

bool float32_exact(double v) { return static_cast<double>(static_cast<float>(v)) == v; }

// Plain-loop forward pass used as the reference.
Eigen::Vector2d reference_logits(const ModelState& s, const Eigen::VectorXd& x) {
  auto layer = [&](const Linear& l, const std::vector<double>& in, bool act) {
    std::vector<double> out(static_cast<std::size_t>(l.weight.rows()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      double acc = l.bias(r);
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) acc += l.weight(r, c) * in[static_cast<std::size_t>(c)];
      out[static_cast<std::size_t>(r)] = act && acc <= 0.0 ? s.leaky_slope * acc : acc;
    }
    return out;
  };
  std::vector<double> v(x.data(), x.data() + x.size());
  if (s.params.adapter) v = layer(*s.params.adapter, v, false);
  v = layer(s.params.fc1, v, true);
  v = layer(s.params.fc2, v, true);
  v = layer(s.params.fc3, v, false);
  return {v[0], v[1]};
}

}  // namespace

TEST(Model, InitShapesAndValues) {
  const auto s = init_state(3, 12, true);
  EXPECT_NO_THROW(validate(s));
  EXPECT_EQ(s.input_dim(), 12);
  EXPECT_EQ(s.params.fc1.weight.rows(), kHiddenDim);
  EXPECT_EQ(s.params.fc2.weight.rows(), kEmbeddingDim);
  EXPECT_EQ(s.params.fc3.weight.rows(), kNumClasses);
  EXPECT_TRUE(s.params.adapter->weight.isIdentity(0.0));
  EXPECT_TRUE(s.params.centers.isZero(0.0));
  EXPECT_NEAR(s.params.oc_direction.norm(), 1.0, 1e-6);
  const double bound = 1.0 / std::sqrt(12.0);
  EXPECT_LE(s.params.fc1.weight.cwiseAbs().maxCoeff(), bound);
  s.params.for_each([&](std::string_view name, const auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) ASSERT_TRUE(float32_exact(t.data()[i])) << name;
  });
  EXPECT_EQ(s.params.scalar_count(), std::size_t(12 * 12 + 12 + 12 * 512 + 512 + 512 * 64 + 64 + 64 * 2 + 2 + 128 + 64));
}

TEST(Model, InitIsSeeded) {
  EXPECT_TRUE(oracle::parameters_equal(init_state(5, 8, false).params, init_state(5, 8, false).params));
  EXPECT_FALSE(oracle::parameters_equal(init_state(5, 8, false).params, init_state(6, 8, false).params));
}

TEST(Model, ForwardMatchesReference) {
  Rng rng(1);
  for (bool adapter : {false, true}) {
    auto s = init_state(11, 7, adapter);
    if (adapter) s.params.adapter->weight(2, 3) = 0.5;
    Eigen::MatrixXd frames(9, 7);
    for (Eigen::Index i = 0; i < frames.size(); ++i) frames.data()[i] = rng.normal();
    const EmbeddingSequence seq{frames};
    const auto t = forward(s, seq);
    EXPECT_NEAR((t.pooled - frames.colwise().mean().transpose()).norm(), 0.0, 1e-14);
    EXPECT_NEAR((t.logits - reference_logits(s, t.pooled)).norm(), 0.0, 1e-12);
    EXPECT_NEAR(t.probabilities().sum(), 1.0, 1e-15);
    EXPECT_GE(t.p_fake(), 0.0);
  }
}

TEST(Model, BackwardAccumulateSums) {
  Rng rng(2);
  const auto s = init_state(4, 5, true);
  auto total = s.params.zeros_like();
  auto expected = s.params.zeros_like();
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd x(5);
    for (auto& v : x) v = rng.normal();
    const auto t = forward_pooled(s, x);
    const Eigen::Vector2d dz(rng.normal(), rng.normal());
    const Eigen::VectorXd dp = Eigen::VectorXd::Constant(kEmbeddingDim, 0.01 * i);
    backward_accumulate(s, t, dz, dp, total);
    const auto g = backward(s, t, dz, dp);
    std::vector<double*> dst;
    expected.for_each([&](std::string_view, auto& m) { dst.push_back(m.data()); });
    std::size_t k = 0;
    g.for_each([&](std::string_view, const auto& m) {
      for (Eigen::Index j = 0; j < m.size(); ++j) dst[k][j] += m.data()[j];
      ++k;
    });
  }
  std::vector<double> a, b;
  total.for_each([&](std::string_view, const auto& m) { a.insert(a.end(), m.data(), m.data() + m.size()); });
  expected.for_each([&](std::string_view, const auto& m) { b.insert(b.end(), m.data(), m.data() + m.size()); });
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-12);
}

TEST(Model, CheckpointRoundTripIsBitExact) {
  auto s = init_state(8, 10, true, 0.05);
  s.params.centers(1, 3) = 0.25;
  s.meta = {{"config_hash", "abc"}, {"epoch", 4}};
  const auto bytes = encode_checkpoint(s);
  const auto back = decode_checkpoint(bytes);
  EXPECT_TRUE(oracle::parameters_equal(s.params, back.params));
  EXPECT_EQ(back.leaky_slope, 0.05);
  EXPECT_EQ(back.seed, 8u);
  EXPECT_EQ(back.meta, s.meta);
  EXPECT_EQ(encode_checkpoint(back), bytes);

  const auto path = std::filesystem::path(oracle::scratch_dir("ckpt")) / "m.ckpt";
  save_checkpoint(path, s);
  EXPECT_TRUE(oracle::parameters_equal(load_checkpoint(path).params, s.params));
}

TEST(Model, CheckpointRejectsCorruption) {
  const auto bytes = encode_checkpoint(init_state(1, 4, false));
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), ValidationError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), ValidationError);
  EXPECT_THROW(decode_checkpoint(""), ValidationError);
  EXPECT_THROW(load_checkpoint("/nonexistent/model.ckpt"), ValidationError);
}

TEST(Model, ValidateRejectsBadStates) {
  auto s = init_state(1, 4, false);
  s.params.fc1.weight(0, 0) = NAN;
  EXPECT_THROW(validate(s), ValidationError);
  s = init_state(1, 4, false);
  s.params.fc2.bias.resize(3);
  EXPECT_THROW(validate(s), ValidationError);
}

TEST(Model, ForwardRejectsDimensionMismatch) {
  const auto s = init_state(1, 4, false);
  EXPECT_THROW(forward(s, EmbeddingSequence{Eigen::MatrixXd::Ones(3, 5)}), ValidationError);
  EXPECT_THROW(forward(s, EmbeddingSequence{Eigen::MatrixXd(0, 4)}), ValidationError);
}

TEST(TensorFile, RoundTrip) {
  TensorFile f;
  f.meta = {{"k", 1}};
  f.tensors.push_back({"a", {2, 3}, {1, 2, 3, 4, 5, 6}});
  f.tensors.push_back({"b", {1}, {-0.5f}});
  const auto back = decode_tensor_file(encode_tensor_file(f));
  EXPECT_EQ(back.meta["k"], 1);
  EXPECT_EQ(back.at("a").values, f.tensors[0].values);
  EXPECT_EQ(back.at("b").shape, std::vector<std::int64_t>{1});
  EXPECT_THROW(back.at("c"), ValidationError);
  f.tensors[0].shape = {4, 3};
  EXPECT_THROW(encode_tensor_file(f), ValidationError);
}
