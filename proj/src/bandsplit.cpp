#include "unmixx/bandsplit.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "unmixx/kernels.hpp"
#include "unmixx/rng.hpp"

namespace unmixx {

void BandScheme::check() const {
  if (edges.size() < 2 || edges.front() != 0)
    throw std::runtime_error("BandScheme: edges must start at 0");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i] <= edges[i - 1])
      throw std::runtime_error("BandScheme: edges must be strictly increasing");
}

std::string BandScheme::to_json() const {
  nlohmann::json j;
  j["edges"] = edges;
  return j.dump();
}

BandScheme BandScheme::from_json(const std::string& text) {
  BandScheme s;
  auto j = nlohmann::json::parse(text);
  s.edges = j.at("edges").get<std::vector<std::size_t>>();
  s.check();
  return s;
}

BandScheme default_scheme(std::size_t bins, int sample_rate) {
  if (bins < 8) throw std::runtime_error("default_scheme: need at least 8 bins");

  // bin index -> center frequency; bin spacing = nyquist / (bins - 1)
  const double bin_hz = 0.5 * sample_rate / static_cast<double>(bins - 1);
  auto bins_below = [&](double hz) {
    auto b = static_cast<std::size_t>(std::ceil(hz / bin_hz));
    return std::min(b, bins);
  };

  const std::size_t e1k = bins_below(1000.0);
  const std::size_t e4k = bins_below(4000.0);
  const std::size_t e8k = bins_below(8000.0);

  BandScheme s;
  // fallback: the pattern needs room for the 8-band tail
  if (e8k + 8 > bins || (e4k - e1k) % 2 != 0 || (e8k - e4k) % 8 != 0) {
    const std::size_t k = std::min<std::size_t>(bins, 8);
    s.edges.push_back(0);
    for (std::size_t b = 1; b <= k; ++b)
      s.edges.push_back(b * bins / k);
    s.check();
    return s;
  }

  s.edges.push_back(0);
  for (std::size_t e = 1; e <= e1k; ++e) s.edges.push_back(e);
  for (std::size_t e = e1k + 2; e <= e4k; e += 2) s.edges.push_back(e);
  for (std::size_t e = e4k + 8; e <= e8k; e += 8) s.edges.push_back(e);
  const std::size_t rest = bins - e8k;
  for (std::size_t b = 1; b <= 8; ++b)
    s.edges.push_back(e8k + b * rest / 8);
  s.check();
  return s;
}

void BandProjection::check_matches(const BandScheme& scheme) const {
  if (band_widths.size() != scheme.num_bands())
    throw std::runtime_error("BandProjection: band count mismatch");
  for (std::size_t b = 0; b < band_widths.size(); ++b)
    if (band_widths[b] != scheme.band_width(b))
      throw std::runtime_error("BandProjection: band width mismatch");
}

BandProjection BandProjection::seeded(const BandScheme& scheme,
                                      std::size_t feature_dim,
                                      std::size_t inverse_in_dim,
                                      std::uint64_t seed) {
  scheme.check();
  BandProjection p;
  p.feature_dim = feature_dim;
  p.inverse_in_dim = inverse_in_dim;
  Rng rng(seed);
  const std::size_t k = scheme.num_bands();
  p.band_widths.resize(k);
  p.fwd_weight.resize(k);
  p.fwd_bias.resize(k);
  p.inv_weight.resize(k);
  p.inv_bias.resize(k);
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t w = scheme.band_width(b);
    p.band_widths[b] = w;
    const std::size_t in = 2 * w;
    p.fwd_weight[b].resize(feature_dim * in);
    const double fwd_std = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : p.fwd_weight[b]) v = fwd_std * rng.normal();
    p.fwd_bias[b].assign(feature_dim, 0.0);
    p.inv_weight[b].resize(in * inverse_in_dim);
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(inverse_in_dim));
    for (double& v : p.inv_weight[b]) v = inv_std * rng.normal();
    p.inv_bias[b].assign(in, 0.0);
  }
  return p;
}

BandProjection BandProjection::identity(const BandScheme& scheme) {
  scheme.check();
  BandProjection p;
  p.feature_dim = 2;
  p.inverse_in_dim = 2;
  const std::size_t k = scheme.num_bands();
  p.band_widths.resize(k);
  p.fwd_weight.resize(k);
  p.fwd_bias.resize(k);
  p.inv_weight.resize(k);
  p.inv_bias.resize(k);
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t w = scheme.band_width(b);
    if (w != 1)
      throw std::runtime_error("identity projection needs unit-width bands");
    p.band_widths[b] = w;
    p.fwd_weight[b] = {1.0, 0.0, 0.0, 1.0};
    p.fwd_bias[b] = {0.0, 0.0};
    p.inv_weight[b] = {1.0, 0.0, 0.0, 1.0};
    p.inv_bias[b] = {0.0, 0.0};
  }
  return p;
}

FeatureTensor split_project(const ComplexSpec& spec, const BandScheme& scheme,
                            const BandProjection& proj) {
  scheme.check();
  proj.check_matches(scheme);
  if (scheme.total_bins() != spec.bins)
    throw std::runtime_error("split_project: scheme does not cover the spec");

  const std::size_t n = proj.feature_dim;
  const std::size_t k = scheme.num_bands();
  const std::size_t frames = spec.frames;
  FeatureTensor out(n, k, frames);

  std::vector<double> in;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t w = scheme.band_width(b);
    const std::size_t lo = scheme.edges[b];
    in.resize(2 * w);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t i = 0; i < w; ++i) {
        in[2 * i] = spec.at(t, lo + i).real();
        in[2 * i + 1] = spec.at(t, lo + i).imag();
      }
      const double* wt = proj.fwd_weight[b].data();
      for (std::size_t c = 0; c < n; ++c)
        out.at(c, b, t) =
            proj.fwd_bias[b][c] + kernels::dot(wt + c * 2 * w, in.data(), 2 * w);
    }
  }
  return out;
}

FullbandLogits restore_fullband(const FeatureTensor& feat,
                                const BandScheme& scheme,
                                const BandProjection& proj) {
  scheme.check();
  proj.check_matches(scheme);
  if (feat.bands != scheme.num_bands())
    throw std::runtime_error("restore_fullband: band count mismatch");
  if (feat.channels != proj.inverse_in_dim)
    throw std::runtime_error("restore_fullband: channel count mismatch");

  FullbandLogits out;
  out.frames = feat.frames;
  out.bins = scheme.total_bins();
  out.data.assign(out.frames * out.bins * 2, 0.0);

  const std::size_t in_dim = proj.inverse_in_dim;
  std::vector<double> in(in_dim);
  for (std::size_t b = 0; b < scheme.num_bands(); ++b) {
    const std::size_t w = scheme.band_width(b);
    const std::size_t lo = scheme.edges[b];
    for (std::size_t t = 0; t < feat.frames; ++t) {
      for (std::size_t c = 0; c < in_dim; ++c) in[c] = feat.at(c, b, t);
      const double* wt = proj.inv_weight[b].data();
      for (std::size_t i = 0; i < 2 * w; ++i) {
        const double v =
            proj.inv_bias[b][i] + kernels::dot(wt + i * in_dim, in.data(), in_dim);
        out.at(t, lo + i / 2, i % 2) = v;
      }
    }
  }
  return out;
}

}  // namespace unmixx
