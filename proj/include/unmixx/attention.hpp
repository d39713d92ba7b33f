#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unmixx/tensor.hpp"

namespace unmixx {

enum class AttentionAxis { kFrequency, kTime };

struct AttentionConfig {
  std::size_t heads = 4;           // A; must divide N
  std::size_t embed_per_head = 8;  // E
  AttentionAxis axis = AttentionAxis::kFrequency;
  bool residual = true;
};

// 1x1 convolutions over channels: q, k and q_rev map N -> A*E, v maps
// N -> N, and out merges the concatenated heads back to N channels.
struct QkvProjections {
  std::size_t in_channels = 0;  // N
  std::size_t qk_dim = 0;       // A*E
  std::vector<double> q, k, q_rev;  // qk_dim x N, row-major
  std::vector<double> v;            // N x N
  std::vector<double> out;          // N x N
  std::vector<double> q_bias, k_bias, q_rev_bias, v_bias, out_bias;

  static QkvProjections seeded(std::size_t channels, const AttentionConfig& cfg,
                               std::uint64_t seed);
  static QkvProjections zeros(std::size_t channels, const AttentionConfig& cfg);
};

// Swap the front and back channel halves (the two singer halves).
// Involution; throws on odd N.
FeatureTensor reverse_split_swap(const FeatureTensor& z);

// Row-stochastic attention matrices, one per head. For the frequency axis
// each row/key position is a sub-band (K x K logits, queries flattened
// over E x T, scale sqrt(E*T)); the time axis is symmetric (T x T, scale
// sqrt(E*K)). negate flips the logit sign before the softmax.
struct AttentionMatrix {
  std::vector<double> rows;  // heads x P x P
  std::size_t heads = 0;
  std::size_t positions = 0;

  double at(std::size_t h, std::size_t i, std::size_t j) const {
    return rows[(h * positions + i) * positions + j];
  }
};

// q/k are the projected tensors (qk_dim channels).
AttentionMatrix attention_weights(const FeatureTensor& q,
                                  const FeatureTensor& k,
                                  const AttentionConfig& cfg, bool negate);

// One F3A block: O = 0.5 * (A_self V + A_cs V), heads re-merged, output
// 1x1 conv, optional residual. Pre-norm layer normalization over channels.
FeatureTensor f3a_forward(const FeatureTensor& z, const QkvProjections& proj,
                          const AttentionConfig& cfg);

struct StackConfig {
  std::size_t heads = 4;
  std::size_t embed_per_head = 8;
  std::size_t repeats = 8;
  bool residual = true;
};

// Interleaved frequency-then-time F3A blocks with per-block seeded weights.
struct InterleavedStack {
  StackConfig cfg;
  std::vector<QkvProjections> freq_proj, time_proj;  // one per repeat

  static InterleavedStack seeded(std::size_t channels, const StackConfig& cfg,
                                 std::uint64_t seed);
  FeatureTensor forward(const FeatureTensor& z) const;

  // flat weight blob with a JSON header; shared with the CLI
  void save(const std::string& path) const;
  static InterleavedStack load(const std::string& path);
};

FeatureTensor layer_norm_channels(const FeatureTensor& z);

}  // namespace unmixx
