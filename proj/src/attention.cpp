#include "unmixx/attention.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "unmixx/kernels.hpp"
#include "unmixx/rng.hpp"

namespace unmixx {

namespace {

void fill_normal(std::vector<double>& v, double stddev, Rng& rng) {
  for (double& x : v) x = stddev * rng.normal();
}

// out[c] block += W[c][n] * in[n] block; channel blocks are contiguous K*T
FeatureTensor conv1x1(const FeatureTensor& in, const std::vector<double>& w,
                      const std::vector<double>& bias, std::size_t out_channels) {
  const std::size_t n = in.channels;
  const std::size_t block = in.bands * in.frames;
  FeatureTensor out(out_channels, in.bands, in.frames);
  for (std::size_t c = 0; c < out_channels; ++c) {
    double* oc = out.data.data() + c * block;
    if (bias[c] != 0.0)
      for (std::size_t i = 0; i < block; ++i) oc[i] = bias[c];
    for (std::size_t ch = 0; ch < n; ++ch) {
      const double a = w[c * n + ch];
      if (a != 0.0)
        kernels::axpy(a, in.data.data() + ch * block, oc, block);
    }
  }
  return out;
}

void softmax_row(double* row, std::size_t n) {
  double mx = row[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, row[i]);
  if (!std::isfinite(mx))
    throw std::runtime_error("attention_weights: non-finite logits");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    row[i] = std::exp(row[i] - mx);
    sum += row[i];
  }
  for (std::size_t i = 0; i < n; ++i) row[i] /= sum;
}

}  // namespace

QkvProjections QkvProjections::seeded(std::size_t channels,
                                      const AttentionConfig& cfg,
                                      std::uint64_t seed) {
  if (channels % cfg.heads != 0)
    throw std::runtime_error("QkvProjections: heads must divide channels");
  QkvProjections p;
  p.in_channels = channels;
  p.qk_dim = cfg.heads * cfg.embed_per_head;
  Rng rng(seed);
  const double s_qk = 1.0 / std::sqrt(static_cast<double>(channels));
  p.q.resize(p.qk_dim * channels);
  p.k.resize(p.qk_dim * channels);
  p.q_rev.resize(p.qk_dim * channels);
  p.v.resize(channels * channels);
  p.out.resize(channels * channels);
  fill_normal(p.q, s_qk, rng);
  fill_normal(p.k, s_qk, rng);
  fill_normal(p.q_rev, s_qk, rng);
  fill_normal(p.v, s_qk, rng);
  fill_normal(p.out, s_qk, rng);
  p.q_bias.assign(p.qk_dim, 0.0);
  p.k_bias.assign(p.qk_dim, 0.0);
  p.q_rev_bias.assign(p.qk_dim, 0.0);
  p.v_bias.assign(channels, 0.0);
  p.out_bias.assign(channels, 0.0);
  return p;
}

QkvProjections QkvProjections::zeros(std::size_t channels,
                                     const AttentionConfig& cfg) {
  QkvProjections p = seeded(channels, cfg, 0);
  std::fill(p.q.begin(), p.q.end(), 0.0);
  std::fill(p.k.begin(), p.k.end(), 0.0);
  std::fill(p.q_rev.begin(), p.q_rev.end(), 0.0);
  std::fill(p.v.begin(), p.v.end(), 0.0);
  std::fill(p.out.begin(), p.out.end(), 0.0);
  return p;
}

FeatureTensor reverse_split_swap(const FeatureTensor& z) {
  if (z.channels % 2 != 0)
    throw std::runtime_error("reverse_split_swap: channel count must be even");
  const std::size_t half = z.channels / 2;
  const std::size_t block = z.bands * z.frames;
  FeatureTensor out(z.channels, z.bands, z.frames);
  std::memcpy(out.data.data(), z.data.data() + half * block,
              half * block * sizeof(double));
  std::memcpy(out.data.data() + half * block, z.data.data(),
              half * block * sizeof(double));
  return out;
}

FeatureTensor layer_norm_channels(const FeatureTensor& z) {
  constexpr double kEps = 1e-5;
  FeatureTensor out(z.channels, z.bands, z.frames);
  const std::size_t block = z.bands * z.frames;
  for (std::size_t i = 0; i < block; ++i) {
    double mean = 0.0;
    for (std::size_t c = 0; c < z.channels; ++c) mean += z.data[c * block + i];
    mean /= static_cast<double>(z.channels);
    double var = 0.0;
    for (std::size_t c = 0; c < z.channels; ++c) {
      const double d = z.data[c * block + i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(z.channels);
    const double inv = 1.0 / std::sqrt(var + kEps);
    for (std::size_t c = 0; c < z.channels; ++c)
      out.data[c * block + i] = (z.data[c * block + i] - mean) * inv;
  }
  return out;
}

AttentionMatrix attention_weights(const FeatureTensor& q,
                                  const FeatureTensor& k,
                                  const AttentionConfig& cfg, bool negate) {
  if (!q.same_shape(k))
    throw std::runtime_error("attention_weights: q/k shape mismatch");
  const std::size_t e = cfg.embed_per_head;
  if (q.channels != cfg.heads * e)
    throw std::runtime_error("attention_weights: channel/head mismatch");

  const bool freq = cfg.axis == AttentionAxis::kFrequency;
  const std::size_t positions = freq ? q.bands : q.frames;
  const std::size_t flat = freq ? q.frames : q.bands;  // per-embed length
  const double scale = std::sqrt(static_cast<double>(e * flat));
  const double sign = negate ? -1.0 : 1.0;

  AttentionMatrix a;
  a.heads = cfg.heads;
  a.positions = positions;
  a.rows.assign(cfg.heads * positions * positions, 0.0);

  // gather one (head, position) vector; frequency rows are contiguous in t
  std::vector<double> qv(e * flat), kv(e * flat);
  auto gather = [&](const FeatureTensor& src, std::size_t h, std::size_t p,
                    std::vector<double>& dst) {
    if (freq) {
      for (std::size_t i = 0; i < e; ++i)
        std::memcpy(dst.data() + i * flat,
                    src.data.data() + ((h * e + i) * src.bands + p) * src.frames,
                    flat * sizeof(double));
    } else {
      for (std::size_t i = 0; i < e; ++i)
        for (std::size_t b = 0; b < flat; ++b)
          dst[i * flat + b] = src.at(h * e + i, b, p);
    }
  };

  std::vector<double> keys;  // all key vectors for the current head
  keys.resize(positions * e * flat);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    for (std::size_t p = 0; p < positions; ++p) {
      gather(k, h, p, kv);
      std::memcpy(keys.data() + p * e * flat, kv.data(),
                  e * flat * sizeof(double));
    }
    for (std::size_t i = 0; i < positions; ++i) {
      gather(q, h, i, qv);
      double* row = a.rows.data() + (h * positions + i) * positions;
      for (std::size_t j = 0; j < positions; ++j)
        row[j] = sign *
                 kernels::dot(qv.data(), keys.data() + j * e * flat, e * flat) /
                 scale;
      softmax_row(row, positions);
    }
  }
  return a;
}

namespace {

// O[c] = sum_j A[h(c)][p][j] V[c] along the attended axis
FeatureTensor apply_attention(const AttentionMatrix& a, const FeatureTensor& v,
                              const AttentionConfig& cfg) {
  const std::size_t per_head = v.channels / cfg.heads;
  FeatureTensor out(v.channels, v.bands, v.frames);
  if (cfg.axis == AttentionAxis::kFrequency) {
    for (std::size_t c = 0; c < v.channels; ++c) {
      const std::size_t h = c / per_head;
      for (std::size_t kb = 0; kb < v.bands; ++kb) {
        double* dst = out.data.data() + (c * v.bands + kb) * v.frames;
        for (std::size_t j = 0; j < v.bands; ++j) {
          const double w = a.at(h, kb, j);
          kernels::axpy(w, v.data.data() + (c * v.bands + j) * v.frames, dst,
                        v.frames);
        }
      }
    }
  } else {
    for (std::size_t c = 0; c < v.channels; ++c) {
      const std::size_t h = c / per_head;
      for (std::size_t kb = 0; kb < v.bands; ++kb) {
        const double* src = v.data.data() + (c * v.bands + kb) * v.frames;
        double* dst = out.data.data() + (c * v.bands + kb) * v.frames;
        for (std::size_t t = 0; t < v.frames; ++t) {
          const double* arow = a.rows.data() + (h * v.frames + t) * v.frames;
          dst[t] = kernels::dot(arow, src, v.frames);
        }
      }
    }
  }
  return out;
}

}  // namespace

FeatureTensor f3a_forward(const FeatureTensor& z, const QkvProjections& proj,
                          const AttentionConfig& cfg) {
  if (z.channels != proj.in_channels)
    throw std::runtime_error("f3a_forward: channel count mismatch");
  if (z.channels % cfg.heads != 0)
    throw std::runtime_error("f3a_forward: heads must divide channels");

  const FeatureTensor zn = layer_norm_channels(z);
  const FeatureTensor z_rev = reverse_split_swap(zn);

  const FeatureTensor q = conv1x1(zn, proj.q, proj.q_bias, proj.qk_dim);
  const FeatureTensor k = conv1x1(zn, proj.k, proj.k_bias, proj.qk_dim);
  const FeatureTensor v = conv1x1(zn, proj.v, proj.v_bias, z.channels);
  const FeatureTensor q_rev =
      conv1x1(z_rev, proj.q_rev, proj.q_rev_bias, proj.qk_dim);

  const AttentionMatrix a_self = attention_weights(q, k, cfg, false);
  const AttentionMatrix a_cs = attention_weights(q_rev, k, cfg, true);

  FeatureTensor o_self = apply_attention(a_self, v, cfg);
  const FeatureTensor o_cs = apply_attention(a_cs, v, cfg);
  kernels::add(o_self.data.data(), o_cs.data.data(), o_self.data.data(),
               o_self.data.size());
  kernels::scale(o_self.data.data(), 0.5, o_self.data.size());

  FeatureTensor out = conv1x1(o_self, proj.out, proj.out_bias, z.channels);
  if (cfg.residual)
    kernels::add(out.data.data(), z.data.data(), out.data.data(),
                 out.data.size());
  return out;
}

InterleavedStack InterleavedStack::seeded(std::size_t channels,
                                          const StackConfig& cfg,
                                          std::uint64_t seed) {
  if (cfg.repeats < 1)
    throw std::runtime_error("InterleavedStack: repeats must be >= 1");
  InterleavedStack s;
  s.cfg = cfg;
  Rng rng(seed);
  AttentionConfig acfg{cfg.heads, cfg.embed_per_head, AttentionAxis::kFrequency,
                       cfg.residual};
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    s.freq_proj.push_back(QkvProjections::seeded(channels, acfg, rng.next_u64()));
    s.time_proj.push_back(QkvProjections::seeded(channels, acfg, rng.next_u64()));
  }
  return s;
}

FeatureTensor InterleavedStack::forward(const FeatureTensor& z) const {
  AttentionConfig freq_cfg{cfg.heads, cfg.embed_per_head,
                           AttentionAxis::kFrequency, cfg.residual};
  AttentionConfig time_cfg{cfg.heads, cfg.embed_per_head, AttentionAxis::kTime,
                           cfg.residual};
  FeatureTensor cur = z;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    cur = f3a_forward(cur, freq_proj[r], freq_cfg);
    cur = f3a_forward(cur, time_proj[r], time_cfg);
  }
  return cur;
}

namespace {

void append_blob(std::ofstream& f, const std::vector<double>& v) {
  f.write(reinterpret_cast<const char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_blob(std::ifstream& f, std::vector<double>& v, std::size_t n) {
  v.resize(n);
  f.read(reinterpret_cast<char*>(v.data()),
         static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw std::runtime_error("weight blob truncated");
}

}  // namespace

void InterleavedStack::save(const std::string& path) const {
  const std::size_t channels = freq_proj.at(0).in_channels;
  nlohmann::json hdr;
  hdr["channels"] = channels;
  hdr["heads"] = cfg.heads;
  hdr["embed_per_head"] = cfg.embed_per_head;
  hdr["repeats"] = cfg.repeats;
  hdr["residual"] = cfg.residual;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write weights: " + path);
  const std::string h = hdr.dump();
  f << h << '\n';
  for (const auto* list : {&freq_proj, &time_proj})
    for (const auto& p : *list) {
      append_blob(f, p.q);
      append_blob(f, p.k);
      append_blob(f, p.q_rev);
      append_blob(f, p.v);
      append_blob(f, p.out);
      append_blob(f, p.q_bias);
      append_blob(f, p.k_bias);
      append_blob(f, p.q_rev_bias);
      append_blob(f, p.v_bias);
      append_blob(f, p.out_bias);
    }
}

InterleavedStack InterleavedStack::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read weights: " + path);
  std::string line;
  std::getline(f, line);
  auto hdr = nlohmann::json::parse(line);
  StackConfig cfg;
  cfg.heads = hdr.at("heads").get<std::size_t>();
  cfg.embed_per_head = hdr.at("embed_per_head").get<std::size_t>();
  cfg.repeats = hdr.at("repeats").get<std::size_t>();
  cfg.residual = hdr.at("residual").get<bool>();
  const auto channels = hdr.at("channels").get<std::size_t>();

  InterleavedStack s;
  s.cfg = cfg;
  AttentionConfig acfg{cfg.heads, cfg.embed_per_head, AttentionAxis::kFrequency,
                       cfg.residual};
  const std::size_t qk = cfg.heads * cfg.embed_per_head;
  for (auto* list : {&s.freq_proj, &s.time_proj})
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      QkvProjections p = QkvProjections::zeros(channels, acfg);
      read_blob(f, p.q, qk * channels);
      read_blob(f, p.k, qk * channels);
      read_blob(f, p.q_rev, qk * channels);
      read_blob(f, p.v, channels * channels);
      read_blob(f, p.out, channels * channels);
      read_blob(f, p.q_bias, qk);
      read_blob(f, p.k_bias, qk);
      read_blob(f, p.q_rev_bias, qk);
      read_blob(f, p.v_bias, channels);
      read_blob(f, p.out_bias, channels);
      list->push_back(std::move(p));
    }
  return s;
}

}  // namespace unmixx
