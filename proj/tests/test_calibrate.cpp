#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "checks.hpp"
#include "oracles.hpp"
#include "spoofkit/calibrate.hpp"
#include "spoofkit/error.hpp"
#include "spoofkit/rng.hpp"

using namespace spoofkit;

namespace {

ScoreSet logistic_set(double a0, double a1, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  ScoreSet out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = out[i];
    r.id = "s" + std::to_string(i);
    r.score = rng.uniform(0.0, 1.0);
    const double p_fake = 1.0 / (1.0 + std::exp(a0 + a1 * r.score));
    r.label = rng.uniform(0.0, 1.0) < p_fake ? Label::fake : Label::real;
  }
  return out;
}

}  // namespace

TEST(Platt, RecoversGeneratingCoefficients) {
  const auto set = logistic_set(2.0, -4.0, 10000, 8);
  const auto fit = platt_fit(set);
  EXPECT_NEAR(fit.model.a0, 2.0, 0.2);
  EXPECT_NEAR(fit.model.a1, -4.0, 0.2);
  EXPECT_FALSE(fit.bound_hit);
  EXPECT_FALSE(fit.orientation_warning);
  EXPECT_LE(fit.gradient_norm, 1e-8);
}

TEST(Platt, SeparableDataHitsTheBound) {
  ScoreSet s = logistic_set(0.0, 0.0, 200, 1);
  for (auto& r : s) r.label = r.score > 0.5 ? Label::fake : Label::real;
  const auto fit = platt_fit(s);
  EXPECT_TRUE(fit.bound_hit);
  EXPECT_LE(std::abs(fit.model.a0), kPlattCoefficientBound);
  EXPECT_LE(std::abs(fit.model.a1), kPlattCoefficientBound);
  EXPECT_LT(fit.model.a1, 0.0);
}

TEST(Platt, UninformativeScoresGiveFlatModel) {
  ScoreSet s;
  for (int i = 0; i < 4; ++i) {
    ScoreRecord r;
    r.id = std::to_string(i);
    r.score = i < 2 ? 0.25 : 0.75;
    r.label = i % 2 ? Label::fake : Label::real;
    s.push_back(r);
  }
  const auto fit = platt_fit(s);
  EXPECT_NEAR(fit.model.a0, 0.0, 1e-8);
  EXPECT_NEAR(fit.model.a1, 0.0, 1e-8);
  EXPECT_NEAR(fit.nll, std::log(2.0), 1e-12);
}

TEST(Platt, ReversedScoresWarnAndAreRefused) {
  auto s = logistic_set(-2.0, 4.0, 2000, 3);
  const auto fit = platt_fit(s);
  EXPECT_TRUE(fit.orientation_warning);
  EXPECT_THROW(calibrate_scores(fit.model, s), ValidationError);
  EXPECT_THROW(calibrate_scores(PlattModel{0.0, 0.0}, s), ValidationError);
}

TEST(Platt, PriorSmoothingShrinksTowardsPrior) {
  const auto s = logistic_set(1.0, -2.0, 300, 4);
  PlattFitOptions smooth;
  smooth.prior_smoothing = true;
  const auto plain = platt_fit(s);
  const auto smoothed = platt_fit(s, smooth);
  EXPECT_LT(std::abs(smoothed.model.a1), std::abs(plain.model.a1));
}

TEST(Platt, PreservesRankingMetrics) {
  const auto v = checks::calibration_invariance(100, 51);
  EXPECT_TRUE(v.pass) << v.detail;
}

TEST(Platt, ImprovesAccuracyOfMiscalibratedScores) {
  const auto v = checks::calibration_accuracy(52);
  EXPECT_TRUE(v.pass) << v.detail;
}

TEST(Platt, ApplyAndValidation) {
  EXPECT_DOUBLE_EQ(platt_apply({0.0, -2.0}, 0.0), 0.5);
  EXPECT_NEAR(platt_apply({1.0, -3.0}, 0.5), 1.0 / (1.0 + std::exp(-0.5)), 1e-15);
  EXPECT_THROW(platt_apply({0.0, -1.0}, 1.5), ValidationError);
  ScoreSet one_class = logistic_set(0, 0, 10, 2);
  for (auto& r : one_class) r.label = Label::real;
  EXPECT_THROW(platt_fit(one_class), ValidationError);
  ScoreSet bad = logistic_set(0, 0, 10, 2);
  bad[0].score = -0.1;
  EXPECT_THROW(platt_fit(bad), ValidationError);
}

TEST(Platt, ModelFileRoundTrip) {
  const std::filesystem::path dir = oracle::scratch_dir("platt");
  const PlattModel m{0.123456789012345, -7.5};
  save_platt_model(dir / "cal.json", m, "val.csv", 42);
  EXPECT_EQ(load_platt_model(dir / "cal.json"), m);
  const auto j = to_json(m, "val.csv", 42);
  EXPECT_EQ(platt_model_from_json(j), m);
  EXPECT_THROW(platt_model_from_json(nlohmann::json{{"a0", 1.0}}), ValidationError);
  EXPECT_THROW(load_platt_model(dir / "missing.json"), ValidationError);
}
