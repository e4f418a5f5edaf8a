#include <filesystem>

#include <gtest/gtest.h>

#include "checks.hpp"
#include "oracles.hpp"
#include "spoofkit/error.hpp"
#include "spoofkit/provider.hpp"
#include "spoofkit/synth.hpp"
#include "spoofkit/train.hpp"

using namespace spoofkit;

namespace {

struct Fixture {
  SplitManifests split;
  std::unique_ptr<EmbeddingProvider> provider;
  int dim = 8;
};

Fixture embedding_fixture(const std::string& tag, double separation = 3.0) {
  SynthSpec spec;
  spec.n_per_class = 30;
  spec.dim = 8;
  spec.separation = separation;
  spec.duration_s = {1.0, 2.0};
  spec.seed = 10;
  Fixture f;
  f.split = split_by_subset(generate_embedding_store(spec, oracle::scratch_dir(tag)));
  ProviderConfig pc;
  pc.kind = "file";
  f.provider = embedding_provider_load(pc);
  return f;
}

TrainConfig small_config(int epochs = 4) {
  TrainConfig c;
  c.optimizer.epochs = epochs;
  c.optimizer.batch_size = 8;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(Swa, MatchesNaiveAverage) {
  const auto v = checks::swa_correctness(oracle::scratch_dir("swa"));
  EXPECT_TRUE(v.pass) << v.detail;
}

TEST(Swa, SelectionRules) {
  std::vector<CheckpointRecord> records(3);
  for (int i = 0; i < 3; ++i) {
    records[static_cast<std::size_t>(i)].epoch = i + 1;
    records[static_cast<std::size_t>(i)].state = init_state(static_cast<std::uint64_t>(i), 4, false);
  }
  records[0].val_loss = 0.5;
  records[1].val_loss = 0.2;
  records[2].val_loss = 0.2;
  EXPECT_EQ(best_checkpoint_index(records), 1u);
  EXPECT_THROW(select_checkpoint(records, SelectionStrategy::swa(0)), ValidationError);
  EXPECT_THROW(select_checkpoint(records, SelectionStrategy::swa(4)), ValidationError);
  std::vector<ModelState> all{records[0].state, records[1].state, records[2].state};
  EXPECT_TRUE(oracle::parameters_equal(average_states(all).params, oracle::naive_average(all)));
  EXPECT_TRUE(oracle::parameters_equal(select_checkpoint(records, SelectionStrategy::swa(3)).params,
                                       oracle::naive_average(all)));
}

TEST(Train, IsDeterministicPerSeed) {
  const auto f = embedding_fixture("train_det");
  const auto a = train(f.split.train, f.split.val, *f.provider, init_state(1, f.dim, false), small_config());
  const auto b = train(f.split.train, f.split.val, *f.provider, init_state(1, f.dim, false), small_config());
  EXPECT_TRUE(oracle::parameters_equal(a.final_state.params, b.final_state.params));
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].val_loss, b.log[i].val_loss);

  auto other = small_config();
  other.seed = 4;
  const auto c = train(f.split.train, f.split.val, *f.provider, init_state(1, f.dim, false), other);
  EXPECT_FALSE(oracle::parameters_equal(a.final_state.params, c.final_state.params));
}

TEST(Train, LogsUntrainedStateAndOneCheckpointPerEpoch) {
  const auto f = embedding_fixture("train_log");
  const auto initial = init_state(1, f.dim, false);
  const auto run = train(f.split.train, f.split.val, *f.provider, initial, small_config(5));
  ASSERT_EQ(run.log.size(), 6u);
  EXPECT_EQ(run.log[0].epoch, 0);
  EXPECT_FALSE(run.log[0].train_loss.has_value());
  ASSERT_EQ(run.checkpoints.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(run.checkpoints[i].epoch, static_cast<int>(i + 1));
    EXPECT_EQ(run.checkpoints[i].val_loss, run.log[i + 1].val_loss);
  }
  const auto steps_per_epoch = (f.split.train.size() + 7) / 8;
  EXPECT_EQ(run.step, static_cast<std::int64_t>(5 * steps_per_epoch));
  EXPECT_LT(run.log.back().val_loss, run.log.front().val_loss);
  EXPECT_TRUE(oracle::parameters_equal(run.checkpoints.back().state.params, run.final_state.params));
}

TEST(Train, DistillationTermUsesTeacher) {
  const auto f = embedding_fixture("train_teacher");
  auto config = small_config(2);
  config.teacher = init_state(99, f.dim, false);
  const auto with = train(f.split.train, f.split.val, *f.provider, init_state(1, f.dim, false), config);
  const auto without = train(f.split.train, f.split.val, *f.provider, init_state(1, f.dim, false), small_config(2));
  EXPECT_FALSE(oracle::parameters_equal(with.final_state.params, without.final_state.params));
}

TEST(Train, RejectsBadInputs) {
  const auto f = embedding_fixture("train_bad");
  EXPECT_THROW(train(Manifest{}, f.split.val, *f.provider, init_state(1, f.dim, false), small_config()),
               ValidationError);
  EXPECT_THROW(train(f.split.train, f.split.val, *f.provider, init_state(1, f.dim + 1, false), small_config()),
               ValidationError);
}
