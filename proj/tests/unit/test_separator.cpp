#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "unmixx/metrics.hpp"
#include "unmixx/separator.hpp"

using namespace unmixx;

namespace {

AudioClip make_sine(double freq, double seconds, int sr, double amp) {
  AudioClip c;
  c.sample_rate = sr;
  c.samples.resize(static_cast<std::size_t>(seconds * sr));
  for (std::size_t n = 0; n < c.samples.size(); ++n)
    c.samples[n] =
        amp * std::sin(2.0 * std::numbers::pi * freq * n / sr);
  return c;
}

AudioClip mix_of(const AudioClip& a, const AudioClip& b) {
  AudioClip m = a;
  for (std::size_t i = 0; i < m.samples.size(); ++i)
    m.samples[i] += b.samples[i];
  return m;
}

SeparatorConfig small_config() {
  SeparatorConfig cfg;
  cfg.stft.window_len = 256;
  cfg.stft.hop = 64;
  cfg.stft.fft_size = 256;
  cfg.channels = 4;
  cfg.heads = 2;
  cfg.embed_per_head = 2;
  cfg.repeats = 1;
  return cfg;
}

}  // namespace

TEST_CASE("ideal ratio masks are complementary and bounded") {
  SeparatorConfig cfg;  // full-size default config
  AudioClip gt1 = make_sine(440.0, 0.5, 24000, 0.5);
  AudioClip gt2 = make_sine(3200.0, 0.5, 24000, 0.5);
  MaskPair masks = ideal_ratio_masks(gt1, gt2, cfg);
  for (std::size_t i = 0; i < masks.m1.grid.size(); ++i) {
    CHECK(masks.m1.grid[i] >= 0.0);
    CHECK(masks.m1.grid[i] <= 1.0);
    CHECK(masks.m2.grid[i] >= 0.0);
    CHECK(masks.m2.grid[i] <= 1.0);
    CHECK(masks.m1.grid[i] + masks.m2.grid[i] <= 1.0 + 1e-12);
  }

  AudioClip shorter = make_sine(440.0, 0.25, 24000, 0.5);
  CHECK_THROWS(ideal_ratio_masks(gt1, shorter, cfg));
}

TEST_CASE("oracle masking separates disjoint sines well") {
  SeparatorConfig cfg;
  AudioClip gt1 = make_sine(440.0, 1.0, 24000, 0.5);
  AudioClip gt2 = make_sine(3200.0, 1.0, 24000, 0.5);
  AudioClip mix = mix_of(gt1, gt2);

  MaskPair masks = ideal_ratio_masks(gt1, gt2, cfg);
  auto [est1, est2] = apply_masks(mix, masks, cfg);
  CHECK(est1.samples.size() == mix.samples.size());
  CHECK(est2.samples.size() == mix.samples.size());

  // tones far apart in frequency: the oracle mask should nail them
  CHECK(si_sdr(est1, gt1) > 20.0);
  CHECK(si_sdr(est2, gt2) > 20.0);
  // and each estimate should be a poor match for the other source
  CHECK(si_sdr(est1, gt2) < 0.0);
}

TEST_CASE("apply_masks rejects mismatched mask shapes") {
  SeparatorConfig cfg = small_config();
  AudioClip mix = make_sine(500.0, 0.25, 8000, 0.3);
  MaskPair masks = ideal_ratio_masks(mix, mix, cfg);
  masks.m1.frames -= 1;  // corrupt the shape
  CHECK_THROWS(apply_masks(mix, masks, cfg));
}

TEST_CASE("separating silence yields silence of the same length") {
  SeparatorConfig cfg = small_config();
  AudioClip mix;
  mix.sample_rate = 8000;
  mix.samples.assign(4000, 0.0);
  SeparatorWeights w =
      SeparatorWeights::seeded(cfg, cfg.stft.bins(), mix.sample_rate);
  auto [est1, est2] = separate(mix, cfg, w);
  CHECK(est1.samples.size() == mix.samples.size());
  CHECK(est2.samples.size() == mix.samples.size());
  for (double v : est1.samples) CHECK(v == 0.0);
  for (double v : est2.samples) CHECK(v == 0.0);
}

TEST_CASE("forward pass is deterministic under the seed") {
  SeparatorConfig cfg = small_config();
  AudioClip gt1 = make_sine(500.0, 0.5, 8000, 0.4);
  AudioClip gt2 = make_sine(1700.0, 0.5, 8000, 0.4);
  AudioClip mix = mix_of(gt1, gt2);

  SeparatorWeights wa =
      SeparatorWeights::seeded(cfg, cfg.stft.bins(), mix.sample_rate);
  SeparatorWeights wb =
      SeparatorWeights::seeded(cfg, cfg.stft.bins(), mix.sample_rate);
  auto [a1, a2] = separate(mix, cfg, wa);
  auto [b1, b2] = separate(mix, cfg, wb);
  CHECK(a1.samples == b1.samples);
  CHECK(a2.samples == b2.samples);
  CHECK(a1.samples.size() == mix.samples.size());
  for (double v : a1.samples) CHECK(std::isfinite(v));
  for (double v : a2.samples) CHECK(std::isfinite(v));

  SeparatorConfig other = cfg;
  other.seed = cfg.seed + 1;
  SeparatorWeights wc =
      SeparatorWeights::seeded(other, other.stft.bins(), mix.sample_rate);
  auto [c1, c2] = separate(mix, other, wc);
  CHECK(a1.samples != c1.samples);  // different seed, different masks
}

TEST_CASE("mask synthesis maps arbitrary logits into the unit interval") {
  FullbandLogits l1, l2;
  l1.frames = l2.frames = 3;
  l1.bins = l2.bins = 4;
  l1.data.resize(3 * 4 * 2);
  l2.data.resize(3 * 4 * 2);
  double v = -50.0;
  for (auto& x : l1.data) x = (v += 7.9);  // spans large +/- logits
  v = 60.0;
  for (auto& x : l2.data) x = (v -= 9.3);
  MaskPair m = masks_from_logits(l1, l2);
  CHECK(m.m1.frames == 3);
  CHECK(m.m1.bins == 4);
  for (double x : m.m1.grid) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
  for (double x : m.m2.grid) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
  // spot-check the sigmoid itself: logit 0 must give exactly 0.5
  l1.data.assign(l1.data.size(), 0.0);
  MaskPair half = masks_from_logits(l1, l2);
  for (double x : half.m1.grid) CHECK(x == doctest::Approx(0.5));
}

TEST_CASE("odd channel counts are rejected") {
  SeparatorConfig cfg = small_config();
  cfg.channels = 5;
  CHECK_THROWS(SeparatorWeights::seeded(cfg, cfg.stft.bins(), 8000));
}
