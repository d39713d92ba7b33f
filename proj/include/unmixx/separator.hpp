#pragma once

#include <cstdint>
#include <utility>

#include "unmixx/attention.hpp"
#include "unmixx/audio.hpp"
#include "unmixx/bandsplit.hpp"
#include "unmixx/stft.hpp"

namespace unmixx {

struct SeparatorConfig {
  StftConfig stft;
  std::size_t channels = 16;  // N, even
  std::size_t heads = 4;
  std::size_t embed_per_head = 8;
  std::size_t repeats = 2;
  std::uint64_t seed = 7;
  // two singers throughout
  static constexpr std::size_t kSources = 2;
};

struct MaskPair {
  MagSpec m1, m2;  // values in [0, 1]
};

// All the seeded weights of the toy forward path.
struct SeparatorWeights {
  BandScheme scheme;
  BandProjection split_proj;
  // pass-through stage standing in for the upstream multi-scale module
  std::vector<double> pre_weight, pre_bias;  // N x N 1x1 conv, tanh after
  InterleavedStack stack;
  // one mask head per channel half
  BandProjection mask_proj1, mask_proj2;

  static SeparatorWeights seeded(const SeparatorConfig& cfg, std::size_t bins,
                                 int sample_rate);
};

// mixture -> stft -> band split -> attention stack -> two sigmoid masks
// -> masked istft. Untrained weights: a mechanism check, not a quality
// claim. Outputs are trimmed/padded to the mixture length.
std::pair<AudioClip, AudioClip> separate(const AudioClip& mix,
                                         const SeparatorConfig& cfg,
                                         const SeparatorWeights& weights);

// Oracle path: mask_i = |S_i| / (|S_1| + |S_2| + eps).
MaskPair ideal_ratio_masks(const AudioClip& gt1, const AudioClip& gt2,
                           const SeparatorConfig& cfg);

// Apply a mask pair to the mixture spectrogram and resynthesize.
std::pair<AudioClip, AudioClip> apply_masks(const AudioClip& mix,
                                            const MaskPair& masks,
                                            const SeparatorConfig& cfg);

MaskPair masks_from_logits(const FullbandLogits& l1, const FullbandLogits& l2);

}  // namespace unmixx
