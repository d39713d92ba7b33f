#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unmixx/stft.hpp"
#include "unmixx/tensor.hpp"

namespace unmixx {

// Non-uniform partition of the F frequency bins into K contiguous bands.
// edges[0] = 0 < edges[1] < ... < edges[K] = F.
struct BandScheme {
  std::vector<std::size_t> edges;

  std::size_t num_bands() const { return edges.empty() ? 0 : edges.size() - 1; }
  std::size_t total_bins() const { return edges.empty() ? 0 : edges.back(); }
  std::size_t band_width(std::size_t b) const {
    return edges[b + 1] - edges[b];
  }
  void check() const;  // throws unless a valid partition

  std::string to_json() const;
  static BandScheme from_json(const std::string& text);
};

// Finer bands where vocal fundamentals and low harmonics live: 1-bin bands
// up to 1 kHz, 2-bin to 4 kHz, 8-bin to 8 kHz, the remainder split into 8
// roughly equal bands. Falls back to min(F, 8) equal bands when F is too
// small for the pattern; requires F >= 8.
BandScheme default_scheme(std::size_t bins, int sample_rate);

// Per-band affine maps: band b of width w_b, input [re, im] pairs (2*w_b)
// -> feature_dim, plus the inverse map feature_dim -> 2*w_b used for mask
// synthesis. Weights are seeded pseudo-random; no training in scope.
struct BandProjection {
  std::size_t feature_dim = 0;            // N
  std::vector<std::size_t> band_widths;   // per band
  // forward[b]: feature_dim x (2*w_b) row-major, plus bias[feature_dim]
  std::vector<std::vector<double>> fwd_weight, fwd_bias;
  // inverse[b]: (2*w_b) x in_dim row-major, plus bias[2*w_b]
  std::size_t inverse_in_dim = 0;
  std::vector<std::vector<double>> inv_weight, inv_bias;

  static BandProjection seeded(const BandScheme& scheme, std::size_t feature_dim,
                               std::size_t inverse_in_dim, std::uint64_t seed);
  // identity maps; requires unit-width bands and feature_dim == 2
  static BandProjection identity(const BandScheme& scheme);

  void check_matches(const BandScheme& scheme) const;
};

FeatureTensor split_project(const ComplexSpec& spec, const BandScheme& scheme,
                            const BandProjection& proj);

// Restored full-band grid, frames x bins x {re, im}, fed to mask synthesis.
struct FullbandLogits {
  std::vector<double> data;  // [(t*bins + f)*2 + c]
  std::size_t frames = 0;
  std::size_t bins = 0;

  double& at(std::size_t t, std::size_t f, std::size_t c) {
    return data[(t * bins + f) * 2 + c];
  }
  double at(std::size_t t, std::size_t f, std::size_t c) const {
    return data[(t * bins + f) * 2 + c];
  }
};

FullbandLogits restore_fullband(const FeatureTensor& feat,
                                const BandScheme& scheme,
                                const BandProjection& proj);

}  // namespace unmixx
