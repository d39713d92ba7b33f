#include "unmixx/separator.hpp"

#include <cmath>
#include <stdexcept>

#include "unmixx/kernels.hpp"
#include "unmixx/rng.hpp"

namespace unmixx {

namespace {

constexpr double kIrmEps = 1e-12;

AudioClip fit_length(AudioClip clip, std::size_t len) {
  clip.samples.resize(len, 0.0);
  return clip;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SeparatorWeights SeparatorWeights::seeded(const SeparatorConfig& cfg,
                                          std::size_t bins, int sample_rate) {
  if (cfg.channels % 2 != 0)
    throw std::runtime_error("SeparatorConfig: channels must be even");
  SeparatorWeights w;
  w.scheme = default_scheme(bins, sample_rate);
  Rng rng(cfg.seed);
  w.split_proj = BandProjection::seeded(w.scheme, cfg.channels, cfg.channels,
                                        rng.next_u64());
  const std::size_t n = cfg.channels;
  w.pre_weight.resize(n * n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (double& v : w.pre_weight) v = s * rng.normal();
  w.pre_bias.assign(n, 0.0);
  StackConfig scfg{cfg.heads, cfg.embed_per_head, cfg.repeats, true};
  w.stack = InterleavedStack::seeded(n, scfg, rng.next_u64());
  // mask heads consume one channel half each
  w.mask_proj1 =
      BandProjection::seeded(w.scheme, n, n / 2, rng.next_u64());
  w.mask_proj2 =
      BandProjection::seeded(w.scheme, n, n / 2, rng.next_u64());
  return w;
}

MaskPair masks_from_logits(const FullbandLogits& l1, const FullbandLogits& l2) {
  MaskPair m;
  for (auto* pair : {&m.m1, &m.m2}) {
    pair->frames = l1.frames;
    pair->bins = l1.bins;
    pair->compression_exponent = 1.0;
    pair->grid.resize(l1.frames * l1.bins);
  }
  for (std::size_t t = 0; t < l1.frames; ++t)
    for (std::size_t f = 0; f < l1.bins; ++f) {
      // logit per bin: mean of the two restored components
      m.m1.at(t, f) = sigmoid(0.5 * (l1.at(t, f, 0) + l1.at(t, f, 1)));
      m.m2.at(t, f) = sigmoid(0.5 * (l2.at(t, f, 0) + l2.at(t, f, 1)));
    }
  return m;
}

std::pair<AudioClip, AudioClip> apply_masks(const AudioClip& mix,
                                            const MaskPair& masks,
                                            const SeparatorConfig& cfg) {
  ComplexSpec spec = stft(mix, cfg.stft);
  if (masks.m1.frames != spec.frames || masks.m1.bins != spec.bins)
    throw std::runtime_error("apply_masks: mask/spec shape mismatch");
  ComplexSpec s1 = spec, s2 = spec;
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    s1.grid[i] = spec.grid[i] * masks.m1.grid[i];
    s2.grid[i] = spec.grid[i] * masks.m2.grid[i];
  }
  return {fit_length(istft(s1), mix.samples.size()),
          fit_length(istft(s2), mix.samples.size())};
}

std::pair<AudioClip, AudioClip> separate(const AudioClip& mix,
                                         const SeparatorConfig& cfg,
                                         const SeparatorWeights& weights) {
  ComplexSpec spec = stft(mix, cfg.stft);
  FeatureTensor feat = split_project(spec, weights.scheme, weights.split_proj);

  // pass-through stage in place of the upstream multi-scale module
  {
    const std::size_t n = feat.channels;
    const std::size_t block = feat.bands * feat.frames;
    FeatureTensor pre(n, feat.bands, feat.frames);
    for (std::size_t c = 0; c < n; ++c) {
      double* oc = pre.data.data() + c * block;
      for (std::size_t ch = 0; ch < n; ++ch)
        kernels::axpy(weights.pre_weight[c * n + ch],
                      feat.data.data() + ch * block, oc, block);
      for (std::size_t i = 0; i < block; ++i)
        oc[i] = std::tanh(oc[i] + weights.pre_bias[c]);
    }
    // residual keeps the untrained stage close to identity
    kernels::add(pre.data.data(), feat.data.data(), pre.data.data(),
                 pre.data.size());
    feat = std::move(pre);
  }

  feat = weights.stack.forward(feat);

  // front half -> singer 1, back half -> singer 2
  const std::size_t half = feat.channels / 2;
  const std::size_t block = feat.bands * feat.frames;
  FeatureTensor h1(half, feat.bands, feat.frames);
  FeatureTensor h2(half, feat.bands, feat.frames);
  std::copy(feat.data.begin(), feat.data.begin() + half * block,
            h1.data.begin());
  std::copy(feat.data.begin() + half * block, feat.data.end(),
            h2.data.begin());

  FullbandLogits l1 = restore_fullband(h1, weights.scheme, weights.mask_proj1);
  FullbandLogits l2 = restore_fullband(h2, weights.scheme, weights.mask_proj2);
  MaskPair masks = masks_from_logits(l1, l2);
  return apply_masks(mix, masks, cfg);
}

MaskPair ideal_ratio_masks(const AudioClip& gt1, const AudioClip& gt2,
                           const SeparatorConfig& cfg) {
  if (gt1.samples.size() != gt2.samples.size())
    throw std::runtime_error("ideal_ratio_masks: length mismatch");
  MagSpec m1 = magnitude(stft(gt1, cfg.stft));
  MagSpec m2 = magnitude(stft(gt2, cfg.stft));
  MaskPair masks;
  masks.m1 = m1;
  masks.m2 = m2;
  for (std::size_t i = 0; i < m1.grid.size(); ++i) {
    const double denom = m1.grid[i] + m2.grid[i] + kIrmEps;
    masks.m1.grid[i] = m1.grid[i] / denom;
    masks.m2.grid[i] = m2.grid[i] / denom;
  }
  return masks;
}

}  // namespace unmixx
