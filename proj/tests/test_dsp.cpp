#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "checks.hpp"
#include "oracles.hpp"
#include "spoofkit/dsp.hpp"
#include "spoofkit/error.hpp"

using namespace spoofkit;

namespace {

AudioBuffer noise(Rng& rng, std::size_t n, double sd = 0.3) {
  AudioBuffer a;
  a.samples.resize(n);
  for (auto& v : a.samples) v = sd * rng.normal();
  return a;
}

}  // namespace

TEST(Dsp, BandpassContract) {
  const auto v = checks::dsp_bandpass();
  EXPECT_TRUE(v.pass) << v.detail;
}

TEST(Dsp, ResampleContract) {
  const auto v = checks::dsp_resample();
  EXPECT_TRUE(v.pass) << v.detail;
}

TEST(Dsp, AwgnContract) {
  const auto v = checks::dsp_awgn();
  EXPECT_TRUE(v.pass) << v.detail;
}

TEST(Dsp, FilterDesignGains) {
  const auto lp = design_lowpass(3800.0, 16000, kResampleTaps);
  EXPECT_NEAR(std::accumulate(lp.begin(), lp.end(), 0.0), 1.0, 1e-12);
  const auto bp = design_bandpass(300.0, 3400.0, 16000, kBandpassTaps);
  EXPECT_NEAR(std::accumulate(bp.begin(), bp.end(), 0.0), 0.0, 1e-9);
  // Linear phase: symmetric taps.
  for (std::size_t i = 0; i < bp.size(); ++i) ASSERT_NEAR(bp[i], bp[bp.size() - 1 - i], 1e-15);
  EXPECT_THROW(design_lowpass(9000.0, 16000, 11), ValidationError);
  EXPECT_THROW(design_bandpass(3000.0, 300.0, 16000, 11), ValidationError);
  EXPECT_THROW(design_lowpass(1000.0, 16000, 10), ValidationError);
}

TEST(Dsp, FirIsDelayCompensated) {
  AudioBuffer impulse;
  impulse.samples.assign(101, 0.0);
  impulse.samples[50] = 1.0;
  const std::vector<double> taps{0.25, 0.5, 0.25};
  const auto out = fir_filter(impulse, taps);
  ASSERT_EQ(out.size(), impulse.size());
  EXPECT_DOUBLE_EQ(out.samples[49], 0.25);
  EXPECT_DOUBLE_EQ(out.samples[50], 0.5);
  EXPECT_DOUBLE_EQ(out.samples[51], 0.25);
}

TEST(Dsp, StandardizeAndCondition) {
  Rng rng(1);
  auto a = noise(rng, 4000);
  for (auto& v : a.samples) v = 3.0 * v + 2.0;
  const auto s = standardize(a);
  EXPECT_FALSE(s.degenerate);
  double mean = 0, var = 0;
  for (double v : s.audio.samples) mean += v;
  mean /= 4000;
  for (double v : s.audio.samples) var += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(var / 4000, 1.0, 1e-9);

  AudioBuffer flat;
  flat.samples.assign(100, 0.7);
  const auto f = standardize(flat);
  EXPECT_TRUE(f.degenerate);
  for (double v : f.audio.samples) EXPECT_NEAR(v, 0.0, 1e-15);
  EXPECT_THROW(standardize(AudioBuffer{}), ValidationError);
  EXPECT_EQ(condition(a).audio.size(), a.size());
}

TEST(Dsp, PowerOperations) {
  Rng rng(2);
  const auto a = noise(rng, 3000);
  EXPECT_NEAR(mean_power(set_power(a, 0.25).samples), 0.25, 1e-12);
  for (int i = 0; i < 50; ++i) {
    const double p = mean_power(random_power_scale(a, {1e-5, 1.2}, rng).samples);
    EXPECT_GE(p, 1e-5 * (1 - 1e-9));
    EXPECT_LE(p, 1.2 * (1 + 1e-9));
  }
  AudioBuffer silent;
  silent.samples.assign(10, 0.0);
  EXPECT_THROW(set_power(silent, 1.0), ValidationError);
  EXPECT_THROW(add_awgn(silent, 10.0, rng), ValidationError);
}

TEST(Dsp, RirKeepsLengthAndPower) {
  Rng rng(3);
  const auto a = noise(rng, 5000);
  AudioBuffer rir;
  rir.samples = {1.0, 0.0, 0.5, 0.0, 0.25};
  const auto out = convolve_rir(a, rir);
  ASSERT_EQ(out.size(), a.size());
  EXPECT_NEAR(mean_power(out.samples), mean_power(a.samples), 1e-12);
  AudioBuffer delta;
  delta.samples = {1.0};
  const auto same = convolve_rir(a, delta);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(same.samples[i], a.samples[i], 1e-12);
  rir.sample_rate_hz = 8000;
  EXPECT_THROW(convolve_rir(a, rir), ValidationError);
}

TEST(Dsp, ResampleKeepsLength) {
  Rng rng(4);
  const auto a = noise(rng, 16001);
  EXPECT_EQ(resample_roundtrip(a).size(), a.size());
  AudioBuffer wrong = a;
  wrong.sample_rate_hz = 8000;
  EXPECT_THROW(resample_roundtrip(wrong), ValidationError);
}

TEST(Dsp, Windowing) {
  EXPECT_EQ(window_offsets(10, 4, 2), (std::vector<std::size_t>{0, 2, 4, 6}));
  EXPECT_EQ(window_offsets(3, 4, 2), (std::vector<std::size_t>{0}));
  EXPECT_EQ(window_offsets(4, 4, 1), (std::vector<std::size_t>{0}));
  EXPECT_THROW(window_offsets(4, 0, 1), ValidationError);

  AudioBuffer a;
  a.samples.resize(16000 * 5);
  std::iota(a.samples.begin(), a.samples.end(), 0.0);
  const auto w = window_segments(a, 3.5, 0.5);
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w[1].samples.front(), 8000.0);
  for (const auto& s : w) EXPECT_EQ(s.size(), 56000u);

  AudioBuffer shorty;
  shorty.samples = {1.0, 2.0, 3.0};
  const auto padded = repeat_pad(shorty, 7);
  EXPECT_EQ(padded.samples, (std::vector<double>{1, 2, 3, 1, 2, 3, 1}));

  const auto c = center_crop(a, 1.0);
  EXPECT_EQ(c.samples.front(), 32000.0);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto r = random_crop(a, 1.0, rng);
    ASSERT_EQ(r.size(), 16000u);
    EXPECT_EQ(r.samples.back() - r.samples.front(), 15999.0);
  }
}

TEST(Dsp, PolicyIsSeededAndValidated) {
  Rng src(6);
  const auto a = noise(src, 8000);
  AugmentationPolicy policy;
  policy.awgn_probability = 0.5;
  policy.resample_roundtrip = true;
  Rng r1(9), r2(9);
  EXPECT_EQ(apply_policy(a, policy, r1).samples, apply_policy(a, policy, r2).samples);

  AugmentationPolicy bad;
  bad.rir_probability = 0.5;
  EXPECT_THROW(validate(bad), ValidationError);
  bad = {};
  bad.awgn_probability = 1.5;
  EXPECT_THROW(validate(bad), ValidationError);

  int calls = 0;
  AugmentationPolicy plugged;
  plugged.plugin_probability = 1.0;
  plugged.plugin = [&](const AudioBuffer& in, Rng&) {
    ++calls;
    return in;
  };
  Rng r3(1);
  apply_policy(a, plugged, r3);
  EXPECT_EQ(calls, 1);
}
