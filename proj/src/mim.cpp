#include "unmixx/mim.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "unmixx/kernels.hpp"
#include "unmixx/stft.hpp"

namespace unmixx {

void AnnotatedSong::check() const {
  validate(clip);
  for (std::size_t i = 1; i < beats.size(); ++i)
    if (beats[i] <= beats[i - 1])
      throw std::runtime_error("AnnotatedSong: beats must be strictly increasing");
  const double dur = clip.duration_s();
  for (double d : downbeats)
    if (d < 0.0 || d > dur)
      throw std::runtime_error("AnnotatedSong: downbeat outside clip");
  if (f0)
    for (double v : f0->values)
      if (v < 0.0) throw std::runtime_error("AnnotatedSong: negative f0");
}

std::string AnnotatedSong::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["beats"] = beats;
  j["downbeats"] = downbeats;
  if (f0) {
    j["f0"]["hop_s"] = f0->hop_s;
    j["f0"]["values"] = f0->values;
  }
  return j.dump();
}

AnnotatedSong AnnotatedSong::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  AnnotatedSong s;
  s.id = j.at("id").get<std::string>();
  s.beats = j.at("beats").get<std::vector<double>>();
  s.downbeats = j.at("downbeats").get<std::vector<double>>();
  if (j.contains("f0")) {
    F0Track t;
    t.hop_s = j["f0"].at("hop_s").get<double>();
    t.values = j["f0"].at("values").get<std::vector<double>>();
    s.f0 = std::move(t);
  }
  return s;
}

double estimate_bpm(const std::vector<double>& beats) {
  if (beats.size() < 3)
    throw std::runtime_error("estimate_bpm: insufficient beats");
  std::vector<double> ibi(beats.size() - 1);
  for (std::size_t i = 1; i < beats.size(); ++i)
    ibi[i - 1] = beats[i] - beats[i - 1];
  std::sort(ibi.begin(), ibi.end());
  const std::size_t n = ibi.size();
  const double median =
      n % 2 ? ibi[n / 2] : 0.5 * (ibi[n / 2 - 1] + ibi[n / 2]);
  return 60.0 / median;
}

std::vector<TempoGroup> group_by_tempo(
    const std::vector<std::pair<std::string, double>>& song_bpms,
    double tolerance_bpm) {
  if (song_bpms.empty())
    throw std::runtime_error("group_by_tempo: empty corpus");
  auto sorted = song_bpms;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) {
              return a.second != b.second ? a.second < b.second
                                          : a.first < b.first;
            });
  std::vector<TempoGroup> groups;
  for (const auto& [id, bpm] : sorted) {
    if (groups.empty() || bpm > groups.back().bpm_center + tolerance_bpm) {
      TempoGroup g;
      g.bpm_center = bpm;
      g.tolerance = tolerance_bpm;
      groups.push_back(g);
    }
    groups.back().members.push_back(id);
  }
  return groups;
}

std::pair<AudioClip, double> crop_at_downbeat(const AnnotatedSong& song,
                                              double length_s, Rng& rng) {
  const double dur = song.clip.duration_s();
  std::vector<double> eligible;
  for (double d : song.downbeats)
    if (d + length_s <= dur) eligible.push_back(d);
  if (eligible.empty())
    throw std::runtime_error("crop_at_downbeat: song too short for crop");
  const double start = eligible[rng.uniform_index(eligible.size())];
  const auto rate = song.clip.sample_rate;
  const auto begin = static_cast<std::size_t>(std::llround(start * rate));
  const auto len = static_cast<std::size_t>(std::llround(length_s * rate));
  AudioClip out;
  out.sample_rate = rate;
  out.samples.assign(song.clip.samples.begin() + begin,
                     song.clip.samples.begin() + std::min(begin + len,
                                                          song.clip.samples.size()));
  out.samples.resize(len, 0.0);
  return {out, start};
}

double harmonic_overlap_score(const F0Track& a, const F0Track& b,
                              int n_overtones, double tol_cents) {
  for (const F0Track* t : {&a, &b})
    for (double v : t->values)
      if (v < 0.0) throw std::runtime_error("harmonic_overlap_score: negative f0");

  // nearest-neighbor resample of the shorter track onto the longer grid
  const F0Track& longer = a.values.size() >= b.values.size() ? a : b;
  const F0Track& shorter = a.values.size() >= b.values.size() ? b : a;
  const std::size_t frames = longer.values.size();
  if (frames == 0) return 0.0;

  double total = 0.0;
  std::size_t voiced_frames = 0;
  for (std::size_t i = 0; i < frames; ++i) {
    const double fa = longer.values[i];
    std::size_t j = i;
    if (shorter.values.size() != frames && !shorter.values.empty()) {
      const double t_s = static_cast<double>(i) * longer.hop_s;
      j = std::min<std::size_t>(
          shorter.values.size() - 1,
          static_cast<std::size_t>(std::llround(t_s / shorter.hop_s)));
    }
    if (shorter.values.empty()) return 0.0;
    const double fb = shorter.values[j];
    if (fa <= 0.0 || fb <= 0.0) continue;  // skip unvoiced frames
    ++voiced_frames;
    int matches = 0;
    for (int p = 1; p <= n_overtones; ++p) {
      bool hit = false;
      for (int q = 1; q <= n_overtones && !hit; ++q) {
        const double cents =
            1200.0 * std::log2(p * fa / (static_cast<double>(q) * fb));
        hit = std::abs(cents) < tol_cents;
      }
      if (hit) ++matches;
    }
    total += static_cast<double>(matches) / n_overtones;
  }
  return voiced_frames ? total / static_cast<double>(voiced_frames) : 0.0;
}

F0Track estimate_f0(const AudioClip& clip, const F0Config& cfg) {
  validate(clip);
  const int rate = clip.sample_rate;
  const auto frame = static_cast<std::size_t>(std::llround(cfg.frame_s * rate));
  const auto hop = static_cast<std::size_t>(std::llround(cfg.hop_s * rate));
  if (clip.samples.size() < frame)
    throw std::runtime_error("estimate_f0: clip shorter than one frame");

  const auto lag_min = static_cast<std::size_t>(rate / cfg.fmax);
  const auto lag_max =
      std::min(frame - 1, static_cast<std::size_t>(rate / cfg.fmin));

  F0Track track;
  track.hop_s = cfg.hop_s;
  const std::size_t n_frames = 1 + (clip.samples.size() - frame) / hop;
  track.values.reserve(n_frames);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* x = clip.samples.data() + t * hop;
    const double energy = kernels::sum_sq(x, frame);
    std::vector<double> corr(lag_max + 1, 0.0);
    double best = 0.0;
    if (energy > 1e-12) {
      for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
        const double r = kernels::dot(x, x + lag, frame - lag);
        const double norm =
            std::sqrt(kernels::sum_sq(x, frame - lag) *
                      kernels::sum_sq(x + lag, frame - lag));
        corr[lag] = norm > 1e-12 ? r / norm : 0.0;
        best = std::max(best, corr[lag]);
      }
    }
    // a periodic signal also peaks at every lag multiple; take the
    // smallest peak within 5% of the global best to avoid octave errors
    std::size_t pick = 0;
    if (best >= cfg.voicing_threshold) {
      for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
        const bool peak = (lag == lag_min || corr[lag] >= corr[lag - 1]) &&
                          (lag == lag_max || corr[lag] >= corr[lag + 1]);
        if (peak && corr[lag] >= 0.95 * best &&
            corr[lag] >= cfg.voicing_threshold) {
          pick = lag;
          break;
        }
      }
    }
    if (pick > 0) {
      // parabolic refinement around the autocorrelation peak
      double lag = static_cast<double>(pick);
      if (pick > lag_min && pick < lag_max) {
        const double ym = corr[pick - 1], y0 = corr[pick], yp = corr[pick + 1];
        const double denom = ym - 2.0 * y0 + yp;
        if (std::abs(denom) > 1e-12) {
          const double delta = 0.5 * (ym - yp) / denom;
          if (std::abs(delta) < 1.0) lag += delta;
        }
      }
      track.values.push_back(rate / lag);
    } else {
      track.values.push_back(0.0);
    }
  }
  return track;
}

void estimate_beats(AnnotatedSong& song) {
  const AudioClip& clip = song.clip;
  StftConfig cfg;
  cfg.window_len = 1024;
  cfg.hop = 512;
  cfg.fft_size = 1024;
  if (clip.sample_rate < 8000 || clip.samples.size() < 4096)
    throw std::runtime_error("estimate_beats: clip too short");

  MagSpec mag = magnitude(stft(clip, cfg));
  // half-wave rectified spectral flux
  std::vector<double> onset(mag.frames, 0.0);
  for (std::size_t t = 1; t < mag.frames; ++t) {
    double acc = 0.0;
    for (std::size_t f = 0; f < mag.bins; ++f) {
      const double d = mag.at(t, f) - mag.at(t - 1, f);
      if (d > 0.0) acc += d;
    }
    onset[t] = acc;
  }
  const double mean = kernels::sum(onset.data(), onset.size()) /
                      static_cast<double>(onset.size());
  for (double& v : onset) v -= mean;

  // tempo from the onset autocorrelation, 60..180 BPM
  const double frame_s = static_cast<double>(cfg.hop) / clip.sample_rate;
  const auto lag_lo = static_cast<std::size_t>(60.0 / 180.0 / frame_s);
  const auto lag_hi = std::min(onset.size() / 2,
                               static_cast<std::size_t>(60.0 / 60.0 / frame_s));
  double best = -1.0;
  std::size_t best_lag = lag_lo;
  for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
    const double r =
        kernels::dot(onset.data(), onset.data() + lag, onset.size() - lag);
    if (r > best) {
      best = r;
      best_lag = lag;
    }
  }
  const double period_s = static_cast<double>(best_lag) * frame_s;

  // phase by maximizing comb energy over one period
  double best_phase = 0.0, best_energy = -1.0;
  for (std::size_t off = 0; off < best_lag; ++off) {
    double acc = 0.0;
    for (std::size_t t = off; t < onset.size(); t += best_lag) acc += onset[t];
    if (acc > best_energy) {
      best_energy = acc;
      best_phase = static_cast<double>(off) * frame_s;
    }
  }

  song.beats.clear();
  song.downbeats.clear();
  const double dur = clip.duration_s();
  std::size_t idx = 0;
  for (double t = best_phase; t < dur; t += period_s, ++idx) {
    song.beats.push_back(t);
    if (idx % 4 == 0) song.downbeats.push_back(t);
  }
}

std::vector<MixPair> mine_batch(std::vector<MixPair> candidates,
                                std::size_t batch_size, std::size_t factor_m,
                                std::size_t factor_big_m, Rng& rng) {
  if (factor_m >= factor_big_m)
    throw std::runtime_error("mine_batch: need m < M");
  if (candidates.size() < batch_size * factor_big_m)
    throw std::runtime_error("mine_batch: candidate pool underfilled");

  auto pair_id = [](const MixPair& p) { return p.song_a + "|" + p.song_b; };
  std::sort(candidates.begin(), candidates.end(),
            [&](const MixPair& a, const MixPair& b) {
              if (a.harmonic_score != b.harmonic_score)
                return a.harmonic_score > b.harmonic_score;
              return pair_id(a) < pair_id(b);
            });
  candidates.resize(batch_size * factor_m);

  // sample batch_size without replacement (partial Fisher-Yates)
  std::vector<MixPair> out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t j =
        i + rng.uniform_index(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
    out.push_back(candidates[i]);
  }
  return out;
}

namespace {

AudioClip crop_fixed(const AnnotatedSong& song, double start_s,
                     double length_s) {
  const auto rate = song.clip.sample_rate;
  const auto begin = static_cast<std::size_t>(std::llround(start_s * rate));
  const auto len = static_cast<std::size_t>(std::llround(length_s * rate));
  if (begin > song.clip.samples.size())
    throw std::runtime_error("crop: start beyond clip end");
  AudioClip out;
  out.sample_rate = rate;
  out.samples.assign(
      song.clip.samples.begin() + begin,
      song.clip.samples.begin() +
          std::min(begin + len, song.clip.samples.size()));
  out.samples.resize(len, 0.0);
  return out;
}

Mixture mix_segments(AudioClip seg_a, AudioClip seg_b, double rms_a,
                     double rms_b, Rng& rng) {
  // +/-3 dB offset around equal loudness, split across the two sources
  const double offset_db = rng.uniform(-3.0, 3.0);
  double gain_a = std::pow(10.0, offset_db / 40.0);
  double gain_b = (rms_a / rms_b) * std::pow(10.0, -offset_db / 40.0);

  Mixture mx;
  mx.gt1 = std::move(seg_a);
  mx.gt2 = std::move(seg_b);
  kernels::scale(mx.gt1.samples.data(), gain_a, mx.gt1.samples.size());
  kernels::scale(mx.gt2.samples.data(), gain_b, mx.gt2.samples.size());
  mx.mix = mx.gt1;
  kernels::add(mx.mix.samples.data(), mx.gt2.samples.data(),
               mx.mix.samples.data(), mx.mix.samples.size());

  double peak = 0.0;
  for (double s : mx.mix.samples) peak = std::max(peak, std::abs(s));
  if (peak > 1.0) {
    const double g = 1.0 / peak;
    // keep additivity bit-exact: rebuild the mix from the scaled parts
    kernels::scale(mx.gt1.samples.data(), g, mx.gt1.samples.size());
    kernels::scale(mx.gt2.samples.data(), g, mx.gt2.samples.size());
    kernels::add(mx.gt1.samples.data(), mx.gt2.samples.data(),
                 mx.mix.samples.data(), mx.mix.samples.size());
    gain_a *= g;
    gain_b *= g;
  }
  mx.pair.gain_a = gain_a;
  mx.pair.gain_b = gain_b;
  return mx;
}

}  // namespace

Mixture make_mixture(const AnnotatedSong& song_a, const AnnotatedSong& song_b,
                     double length_s, Rng& rng, int max_retries) {
  for (int attempt = 0;; ++attempt) {
    auto [seg_a, start_a] = crop_at_downbeat(song_a, length_s, rng);
    auto [seg_b, start_b] = crop_at_downbeat(song_b, length_s, rng);
    const double rms_a = rms(seg_a);
    const double rms_b = rms(seg_b);
    if (rms_a < 1e-6 || rms_b < 1e-6) {
      if (attempt >= max_retries)
        throw std::runtime_error("make_mixture: silent segment after retries");
      continue;
    }
    Mixture mx = mix_segments(std::move(seg_a), std::move(seg_b), rms_a, rms_b,
                              rng);
    mx.pair.song_a = song_a.id;
    mx.pair.song_b = song_b.id;
    mx.pair.start_a = start_a;
    mx.pair.start_b = start_b;
    mx.pair.length_s = length_s;
    return mx;
  }
}

Mixture make_mixture_at(const AnnotatedSong& song_a,
                        const AnnotatedSong& song_b, const MixPair& pair,
                        Rng& rng) {
  AudioClip seg_a = crop_fixed(song_a, pair.start_a, pair.length_s);
  AudioClip seg_b = crop_fixed(song_b, pair.start_b, pair.length_s);
  const double rms_a = rms(seg_a);
  const double rms_b = rms(seg_b);
  if (rms_a < 1e-6 || rms_b < 1e-6)
    throw std::runtime_error("make_mixture_at: silent segment");
  Mixture mx = mix_segments(std::move(seg_a), std::move(seg_b), rms_a, rms_b,
                            rng);
  const double ga = mx.pair.gain_a, gb = mx.pair.gain_b;
  mx.pair = pair;
  mx.pair.gain_a = ga;
  mx.pair.gain_b = gb;
  return mx;
}

F0Track slice_f0(const F0Track& track, double start_s, double length_s) {
  F0Track out;
  out.hop_s = track.hop_s;
  const auto lo = static_cast<std::size_t>(std::llround(start_s / track.hop_s));
  const auto n = static_cast<std::size_t>(std::llround(length_s / track.hop_s));
  for (std::size_t i = lo; i < lo + n && i < track.values.size(); ++i)
    out.values.push_back(track.values[i]);
  return out;
}

}  // namespace unmixx
