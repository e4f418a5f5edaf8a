#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spoofkit/error.hpp"
#include "spoofkit/eval.hpp"
#include "spoofkit/io.hpp"
#include "spoofkit/synth.hpp"

using namespace spoofkit;

namespace {

// Mean projection of each utterance onto the class direction, as a score set.
ScoreSet projections(const SynthSpec& spec) {
  const auto plan = plan_corpus(spec);
  const Eigen::VectorXd u = class_direction(spec);
  ScoreSet out;
  for (const auto& e : plan.entries) {
    const auto seq = synthesize_embedding(spec, e);
    ScoreRecord r;
    r.id = e.id;
    r.label = e.label;
    r.score = (seq.frames * u).mean();
    out.push_back(r);
  }
  return out;
}

SynthSpec fast_embedding_spec(double separation) {
  SynthSpec s;
  s.n_per_class = 10000;
  s.dim = 8;
  s.duration_s = {0.1, 0.2};
  s.separation = separation;
  s.seed = 12;
  return s;
}

}  // namespace

TEST(Synth, EmbeddingClassGapMatchesSeparation) {
  const auto scores = projections(fast_embedding_spec(1.5));
  double real = 0, fake = 0;
  for (const auto& r : scores) (r.label == Label::fake ? fake : real) += r.score;
  const double gap = (fake - real) / 10000.0;
  EXPECT_NEAR(gap, 1.5, 0.05 * 1.5);
}

TEST(Synth, ZeroSeparationIsChance) {
  auto spec = fast_embedding_spec(0.0);
  spec.n_per_class = 1000;
  EXPECT_NEAR(compute_auc(projections(spec)), 0.5, 0.05);
}

TEST(Synth, PlanHonoursSpec) {
  SynthSpec s;
  s.n_per_class = 40;
  s.duration_s = {0.5, 16.0};
  s.log_uniform_duration = true;
  s.seed = 1;
  const auto m = plan_corpus(s);
  ASSERT_EQ(m.size(), 80u);
  EXPECT_EQ(m.count(Label::fake), 40u);
  std::size_t train = 0, val = 0;
  for (const auto& e : m.entries) {
    EXPECT_GE(e.duration_s, 0.5 - 1e-4);
    EXPECT_LE(e.duration_s, 16.0 + 1e-4);
    EXPECT_EQ(e.attack.has_value(), e.label == Label::fake);
    train += e.subset == Subset::train;
    val += e.subset == Subset::val;
  }
  EXPECT_EQ(train, 56u);
  EXPECT_EQ(val, 12u);
  EXPECT_EQ(m.entries[40].id, "fake_00000");
  EXPECT_EQ(*m.entries[41].attack, "A02");
  EXPECT_EQ(plan_corpus(s).entries, m.entries);
  s.seed = 2;
  EXPECT_NE(plan_corpus(s).entries, m.entries);
}

TEST(Synth, DurationDependentNoiseFollowsDuration) {
  SynthSpec s;
  s.n_per_class = 20;
  s.duration_s = {0.5, 16.0};
  s.duration_dependent_noise = true;
  s.noise_db_at_1s = 2.0;
  s.noise_db_per_octave = 6.0;
  for (const auto& e : plan_corpus(s).entries)
    EXPECT_NEAR(*e.quality_sisdr_db, 2.0 + 6.0 * std::log2(e.duration_s), 1e-9);
}

TEST(Synth, AudioCorpusIsReproducible) {
  SynthSpec s;
  s.n_per_class = 3;
  s.duration_s = {0.5, 1.0};
  s.seed = 4;
  const std::filesystem::path a = oracle::scratch_dir("synth_a"), b = oracle::scratch_dir("synth_b");
  const auto ma = generate_corpus(s, a);
  generate_corpus(s, b);
  EXPECT_EQ(read_file(a / "manifest.jsonl"), read_file(b / "manifest.jsonl"));
  for (const auto& e : ma.entries) {
    EXPECT_EQ(read_file(a / e.source), read_file(b / e.source)) << e.id;
    const auto audio = synthesize_audio(s, e);
    EXPECT_EQ(audio.samples.size(), static_cast<std::size_t>(std::llround(e.duration_s * kSampleRate)));
    for (double x : audio.samples) ASSERT_LE(std::abs(x), 1.0);
  }
}

TEST(Synth, SpecJsonAndValidation) {
  SynthSpec s;
  s.separation = 2.5;
  s.attacks = {"X"};
  EXPECT_EQ(synth_spec_from_json(to_json(s)), s);
  EXPECT_THROW(synth_spec_from_json(nlohmann::json{{"duration_s", {3.0, 1.0}}}), ValidationError);
  EXPECT_THROW(synth_spec_from_json(nlohmann::json{{"separation", -1.0}}), ValidationError);
  EXPECT_THROW(synth_spec_from_json(nlohmann::json{{"train_fraction", 0.9}, {"val_fraction", 0.2}}), ValidationError);
  EXPECT_THROW(synth_spec_from_json(nlohmann::json{{"n_per_class", "many"}}), ValidationError);
}
