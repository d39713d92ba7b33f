// unmixx command-line front end: dataset mixing, separation, evaluation,
// gradient checks, the penalty demo, and the swap simulator.

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "unmixx/audio.hpp"
#include "unmixx/attention.hpp"
#include "unmixx/kernels.hpp"
#include "unmixx/losses.hpp"
#include "unmixx/metrics.hpp"
#include "unmixx/mim.hpp"
#include "unmixx/rng.hpp"
#include "unmixx/separator.hpp"
#include "unmixx/stft.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace unmixx;

namespace {

constexpr const char* kVersion = "unmixx 0.1.0";

unsigned g_threads = std::thread::hardware_concurrency();

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned workers =
      std::max(1u, std::min<unsigned>(g_threads, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          error = e.what();
          failed.store(true);
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failed.load()) throw std::runtime_error(error);
}

AudioClip make_sine(double freq, double duration_s, int rate,
                    double amplitude) {
  AudioClip clip;
  clip.sample_rate = rate;
  const auto n = static_cast<std::size_t>(duration_s * rate);
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    clip.samples[i] = amplitude * std::sin(2.0 * M_PI * freq * i / rate);
  return clip;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// grad-check

struct GradCheckResult {
  std::string name;
  double worst_rel = 0.0;
  bool pass = false;
};

double rel_err(double analytic, double numeric, double floor_abs = 1e-8) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), floor_abs});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult check_gradient(const std::string& name, std::size_t dim,
                               std::size_t trials, Rng& rng,
                               const std::function<double(const std::vector<double>&)>& value,
                               const std::function<std::vector<double>(const std::vector<double>&)>& grad,
                               std::vector<double> x, double tol = 1e-4,
                               double h = 1e-5) {
  GradCheckResult r;
  r.name = name;
  const std::vector<double> g = grad(x);
  // central differences carry ~eps*|L|/h roundoff; below that scale a
  // coordinate's relative error is meaningless, so floor the denominator
  const double floor_abs =
      std::max(1e-8, 1e-6 * std::max(1.0, std::abs(value(x))));
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t i = rng.uniform_index(dim);
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = value(x);
    x[i] = orig - h;
    const double fm = value(x);
    x[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    r.worst_rel = std::max(r.worst_rel, rel_err(g[i], numeric, floor_abs));
  }
  r.pass = r.worst_rel < tol;
  return r;
}

std::vector<GradCheckResult> run_grad_checks(std::uint64_t seed,
                                             std::size_t trials) {
  std::vector<GradCheckResult> results;
  Rng rng(seed);

  const int rate = 8000;
  const std::size_t n = 1000;
  auto random_clip = [&](double amp) {
    AudioClip c;
    c.sample_rate = rate;
    c.samples.resize(n);
    for (auto& s : c.samples) s = amp * rng.normal();
    return c;
  };
  AudioClip ref = random_clip(0.3);
  AudioClip est = ref;
  for (auto& s : est.samples) s += 0.1 * rng.normal();

  // SNR loss over the estimate waveform
  results.push_back(check_gradient(
      "snr", n, trials, rng,
      [&](const std::vector<double>& x) {
        AudioClip e = est;
        e.samples = x;
        return snr_loss(e, ref, 1e-8).value;
      },
      [&](const std::vector<double>& x) {
        AudioClip e = est;
        e.samples = x;
        return snr_loss(e, ref, 1e-8).grad;
      },
      est.samples));

  // magnitude L2 over a random grid
  MagSpec mref;
  mref.frames = 12;
  mref.bins = 33;
  mref.compression_exponent = 0.5;
  mref.grid.resize(mref.frames * mref.bins);
  for (auto& v : mref.grid) v = std::abs(rng.normal());
  MagSpec mest = mref;
  for (auto& v : mest.grid) v += 0.2 * std::abs(rng.normal());
  auto as_mag = [&](const std::vector<double>& x) {
    MagSpec m = mest;
    m.grid = x;
    return m;
  };
  results.push_back(check_gradient(
      "mag", mest.grid.size(), trials, rng,
      [&](const std::vector<double>& x) { return mag_loss(as_mag(x), mref).value; },
      [&](const std::vector<double>& x) { return mag_loss(as_mag(x), mref).grad; },
      mest.grid));

  // penalty over the same grid with a random mask
  InterferenceMask imask;
  imask.frames = mref.frames;
  imask.bins = mref.bins;
  imask.grid.resize(mref.grid.size());
  for (auto& v : imask.grid) v = rng.uniform() < 0.3 ? 1 : 0;
  results.push_back(check_gradient(
      "penalty", mest.grid.size(), trials, rng,
      [&](const std::vector<double>& x) {
        return penalty_loss(as_mag(x), imask, 1e-8).value;
      },
      [&](const std::vector<double>& x) {
        return penalty_loss(as_mag(x), imask, 1e-8).grad;
      },
      mest.grid));

  // total loss chained through compression and the STFT, per estimate
  TotalLossConfig tcfg;
  tcfg.stft.window_len = 256;
  tcfg.stft.hop = 64;
  tcfg.stft.fft_size = 256;
  // thresholds scaled to the short random signals so the mask is non-empty
  tcfg.tau_max = 0.6;
  tcfg.tau_min = 0.4;
  AudioClip ref2 = random_clip(0.3);
  AudioClip est2 = ref2;
  for (auto& s : est2.samples) s += 0.1 * rng.normal();
  results.push_back(check_gradient(
      "total", n, trials, rng,
      [&](const std::vector<double>& x) {
        AudioClip e = est;
        e.samples = x;
        return total_loss(e, est2, ref, ref2, tcfg).value;
      },
      [&](const std::vector<double>& x) {
        AudioClip e = est;
        e.samples = x;
        return total_loss(e, est2, ref, ref2, tcfg).grad1;
      },
      est.samples));

  // The full mask chain: logits -> sigmoid -> masked spectrogram -> losses.
  // Spectrally distinct sources and mask logits biased toward the matching
  // source keep the permutation choice stable under the probe step (the
  // assignment switch is the one genuine non-smoothness of the objective).
  AudioClip src1 = make_sine(440.0, 0.125, rate, 0.4);
  AudioClip src2 = make_sine(3000.0, 0.125, rate, 0.4);
  for (auto& s : src1.samples) s += 0.01 * rng.normal();
  for (auto& s : src2.samples) s += 0.01 * rng.normal();
  AudioClip mix = src1;
  kernels::add(mix.samples.data(), src2.samples.data(), mix.samples.data(),
               mix.samples.size());
  MaskObjective obj(mix, src1, src2, tcfg);
  const std::size_t grid = obj.frames() * obj.bins();
  MagSpec sm1 = magnitude(stft(src1, tcfg.stft));
  MagSpec sm2 = magnitude(stft(src2, tcfg.stft));
  std::vector<double> logits1(grid), logits2(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    const double toward1 = sm1.grid[i] > sm2.grid[i] ? 2.0 : -2.0;
    logits1[i] = toward1 + 0.3 * rng.normal();
    logits2[i] = -toward1 + 0.3 * rng.normal();
  }
  results.push_back(check_gradient(
      "mask-chain", grid, trials, rng,
      [&](const std::vector<double>& x) {
        return obj.evaluate(x, logits2, false).value;
      },
      [&](const std::vector<double>& x) {
        return obj.evaluate(x, logits2, true).grad1;
      },
      logits1));

  return results;
}

// ---------------------------------------------------------------------------
// selftest

struct SelfCheck {
  std::string name;
  bool pass = false;
  std::string note;
};

std::vector<SelfCheck> run_selftest(std::uint64_t seed) {
  std::vector<SelfCheck> checks;
  Rng rng(seed);
  auto add = [&](const std::string& name, bool pass, std::string note = "") {
    checks.push_back({name, pass, std::move(note)});
  };

  // kernels: SIMD backend agrees with the scalar reference
  {
    std::vector<double> a(1001), b(1001);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    double worst = 0.0;
    worst = std::max(worst, rel_err(kernels::dot(a.data(), b.data(), a.size()),
                                    kernels::scalar::dot(a.data(), b.data(), a.size())));
    worst = std::max(worst, rel_err(kernels::sum_sq(a.data(), a.size()),
                                    kernels::scalar::sum_sq(a.data(), a.size())));
    add("kernels-equivalence (" + std::string(kernels::active_backend()) + ")",
        worst < 1e-12);
  }

  // COLA constant for the default window
  {
    StftConfig cfg;
    const auto w = make_window(cfg.window, cfg.window_len);
    std::vector<double> acc(3 * cfg.window_len, 0.0);
    for (int k = 0; k * cfg.hop < static_cast<int>(acc.size()); ++k)
      for (int i = 0; i < cfg.window_len; ++i) {
        const int m = k * cfg.hop + i;
        if (m < static_cast<int>(acc.size())) acc[m] += w[i] * w[i];
      }
    double lo = 1e300, hi = 0.0;
    for (int m = cfg.window_len; m < 2 * cfg.window_len; ++m) {
      lo = std::min(lo, acc[m]);
      hi = std::max(hi, acc[m]);
    }
    add("cola-constant", (hi - lo) / hi < 1e-6);
  }

  // STFT round trip on a random signal
  {
    StftConfig cfg;
    AudioClip x;
    x.sample_rate = 24000;
    x.samples.resize(4 * cfg.window_len);
    for (auto& s : x.samples) s = 0.5 * rng.normal();
    AudioClip y = istft(stft(x, cfg));
    double num = 0.0, den = 0.0;
    for (std::size_t i = cfg.window_len;
         i + cfg.window_len < std::min(x.samples.size(), y.samples.size()); ++i) {
      const double d = x.samples[i] - y.samples[i];
      num += d * d;
      den += x.samples[i] * x.samples[i];
    }
    add("stft-roundtrip", std::sqrt(num / den) < 1e-6);
  }

  // attention rows are stochastic and negation reverses the ranking
  {
    FeatureTensor z(8, 5, 6);
    for (auto& v : z.data) v = rng.normal();
    AttentionConfig cfg{2, 4, AttentionAxis::kFrequency, true};
    // z already has qk_dim = heads * embed_per_head channels
    AttentionMatrix pos = attention_weights(z, z, cfg, false);
    AttentionMatrix neg = attention_weights(z, z, cfg, true);
    bool rows_ok = true, rank_ok = true;
    for (std::size_t h = 0; h < pos.heads; ++h)
      for (std::size_t i = 0; i < pos.positions; ++i) {
        double sum = 0.0;
        std::size_t argmax_p = 0, argmin_n = 0;
        for (std::size_t j = 0; j < pos.positions; ++j) {
          sum += pos.at(h, i, j);
          if (pos.at(h, i, j) > pos.at(h, i, argmax_p)) argmax_p = j;
          if (neg.at(h, i, j) < neg.at(h, i, argmin_n)) argmin_n = j;
        }
        rows_ok = rows_ok && std::abs(sum - 1.0) < 1e-9;
        rank_ok = rank_ok && argmax_p == argmin_n;
      }
    add("attention-row-stochastic", rows_ok);
    add("attention-negation-reversal", rank_ok);
  }

  // reverse_split_swap is an involution
  {
    FeatureTensor z(6, 4, 3);
    for (auto& v : z.data) v = rng.normal();
    FeatureTensor w = reverse_split_swap(reverse_split_swap(z));
    add("reverse-swap-involution", w.data == z.data);
  }

  // PSSNR dominates SSNR
  {
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      AudioClip g1, g2, e1, e2;
      g1.sample_rate = g2.sample_rate = e1.sample_rate = e2.sample_rate = 8000;
      const std::size_t len = 8000 * 3;
      for (auto* c : {&g1, &g2, &e1, &e2}) {
        c->samples.resize(len);
        for (auto& s : c->samples) s = 0.3 * rng.normal();
      }
      ok = pssnr(e1, e2, g1, g2) >= ssnr(e1, e2, g1, g2) - 1e-12;
    }
    add("pssnr-dominates-ssnr", ok);
  }

  // mining keeps only top-scored candidates
  {
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      std::vector<MixPair> pool(2 * 16);
      for (std::size_t i = 0; i < pool.size(); ++i) {
        pool[i].song_a = "a" + std::to_string(i);
        pool[i].song_b = "b" + std::to_string(i);
        pool[i].harmonic_score = rng.uniform();
      }
      auto sorted = pool;
      std::sort(sorted.begin(), sorted.end(),
                [](const MixPair& x, const MixPair& y) {
                  return x.harmonic_score > y.harmonic_score;
                });
      const double cutoff = sorted[2 * 8 - 1].harmonic_score;
      auto picked = mine_batch(pool, 2, 8, 16, rng);
      for (const auto& p : picked) ok = ok && p.harmonic_score >= cutoff;
    }
    add("mine-batch-top-subset", ok);
  }

  // ideal ratio masks are complementary on active bins
  {
    SeparatorConfig cfg;
    AudioClip g1 = make_sine(440.0, 1.0, 24000, 0.4);
    AudioClip g2 = make_sine(3000.0, 1.0, 24000, 0.4);
    MaskPair masks = ideal_ratio_masks(g1, g2, cfg);
    MagSpec m1 = magnitude(stft(g1, cfg.stft));
    MagSpec m2 = magnitude(stft(g2, cfg.stft));
    bool ok = true;
    for (std::size_t i = 0; i < masks.m1.grid.size(); ++i)
      if (m1.grid[i] + m2.grid[i] > 1e-6) {
        const double s = masks.m1.grid[i] + masks.m2.grid[i];
        ok = ok && s > 1.0 - 1e-6 && s <= 1.0 + 1e-12;
      }
    add("irm-complementarity", ok);
  }

  return checks;
}

// ---------------------------------------------------------------------------
// mix pipeline

struct CorpusSong {
  AnnotatedSong song;
  double bpm = 0.0;
};

std::vector<CorpusSong> load_corpus(const std::string& corpus_dir,
                                    const std::string& annotations_dir) {
  std::vector<fs::path> ann_files;
  for (const auto& entry : fs::directory_iterator(annotations_dir))
    if (entry.path().extension() == ".json") ann_files.push_back(entry.path());
  std::sort(ann_files.begin(), ann_files.end());
  if (ann_files.empty())
    throw std::runtime_error("no annotation files in " + annotations_dir);

  std::vector<CorpusSong> corpus(ann_files.size());
  parallel_for(ann_files.size(), [&](std::size_t i) {
    AnnotatedSong song = AnnotatedSong::from_json(read_file(ann_files[i]));
    const fs::path wav = fs::path(corpus_dir) / (song.id + ".wav");
    song.clip = resample(read_wav(wav.string()), 24000);
    if (song.beats.size() < 3) estimate_beats(song);
    song.check();
    if (!song.f0) song.f0 = estimate_f0(song.clip);
    CorpusSong cs;
    cs.bpm = estimate_bpm(song.beats);
    cs.song = std::move(song);
    corpus[i] = std::move(cs);
  });
  return corpus;
}

int run_mix(const std::string& corpus_dir, const std::string& annotations_dir,
            const std::string& out_dir, std::size_t count, double length_s,
            std::size_t batch, std::size_t big_m, std::size_t small_m,
            std::uint64_t seed) {
  auto corpus = load_corpus(corpus_dir, annotations_dir);
  std::vector<std::pair<std::string, double>> bpms;
  for (const auto& cs : corpus) bpms.emplace_back(cs.song.id, cs.bpm);
  auto groups = group_by_tempo(bpms);

  auto find_song = [&](const std::string& id) -> const AnnotatedSong& {
    for (const auto& cs : corpus)
      if (cs.song.id == id) return cs.song;
    throw std::runtime_error("unknown song id: " + id);
  };

  fs::create_directories(out_dir);
  Rng rng(seed);
  json manifest = json::array();
  std::size_t written = 0;
  while (written < count) {
    // candidate pool: crops first (sequential, owns the rng), scores after
    std::vector<MixPair> pool;
    std::size_t attempts = 0;
    while (pool.size() < batch * big_m) {
      if (++attempts > batch * big_m * 20)
        throw std::runtime_error("mix: cannot fill candidate pool "
                                 "(songs too short for the crop length?)");
      const auto& group = groups[rng.uniform_index(groups.size())];
      const auto& a = find_song(group.members[rng.uniform_index(group.members.size())]);
      const auto& b = find_song(group.members[rng.uniform_index(group.members.size())]);
      MixPair cand;
      cand.song_a = a.id;
      cand.song_b = b.id;
      cand.length_s = length_s;
      try {
        Rng crop_rng = rng.fork(pool.size());
        cand.start_a = crop_at_downbeat(a, length_s, crop_rng).second;
        cand.start_b = crop_at_downbeat(b, length_s, crop_rng).second;
      } catch (const std::exception&) {
        continue;
      }
      pool.push_back(cand);
    }
    parallel_for(pool.size(), [&](std::size_t i) {
      const auto& a = find_song(pool[i].song_a);
      const auto& b = find_song(pool[i].song_b);
      pool[i].harmonic_score = harmonic_overlap_score(
          slice_f0(*a.f0, pool[i].start_a, length_s),
          slice_f0(*b.f0, pool[i].start_b, length_s));
    });
    auto batch_pairs = mine_batch(std::move(pool), batch, small_m, big_m, rng);
    for (const auto& pair : batch_pairs) {
      if (written >= count) break;
      Mixture mx = make_mixture_at(find_song(pair.song_a),
                                   find_song(pair.song_b), pair, rng);
      char idx[16];
      std::snprintf(idx, sizeof idx, "%04zu", written);
      const std::string mix_name = std::string("mix_") + idx + ".wav";
      const std::string gt1_name = std::string("gt1_") + idx + ".wav";
      const std::string gt2_name = std::string("gt2_") + idx + ".wav";
      write_wav((fs::path(out_dir) / mix_name).string(), mx.mix);
      write_wav((fs::path(out_dir) / gt1_name).string(), mx.gt1);
      write_wav((fs::path(out_dir) / gt2_name).string(), mx.gt2);
      json e;
      e["index"] = written;
      e["mix"] = mix_name;
      e["gt1"] = gt1_name;
      e["gt2"] = gt2_name;
      e["song_a"] = mx.pair.song_a;
      e["song_b"] = mx.pair.song_b;
      e["start_a"] = mx.pair.start_a;
      e["start_b"] = mx.pair.start_b;
      e["length_s"] = mx.pair.length_s;
      e["gain_a"] = mx.pair.gain_a;
      e["gain_b"] = mx.pair.gain_b;
      e["harmonic_score"] = mx.pair.harmonic_score;
      e["same_singer"] = mx.pair.song_a == mx.pair.song_b;
      manifest.push_back(e);
      ++written;
    }
  }
  std::ofstream mf(fs::path(out_dir) / "manifest.json");
  mf << manifest.dump(2) << '\n';
  std::cerr << "wrote " << written << " mixtures to " << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

StftConfig stft_from_json(const json& j) {
  StftConfig cfg;
  if (j.contains("window_len")) cfg.window_len = j["window_len"].get<int>();
  if (j.contains("hop")) cfg.hop = j["hop"].get<int>();
  if (j.contains("fft_size")) cfg.fft_size = j["fft_size"].get<int>();
  if (j.contains("centered")) cfg.centered = j["centered"].get<bool>();
  return cfg;
}

json separator_config_json(const SeparatorConfig& cfg) {
  json j;
  j["stft"]["window_len"] = cfg.stft.window_len;
  j["stft"]["hop"] = cfg.stft.hop;
  j["stft"]["fft_size"] = cfg.stft.fft_size;
  j["stft"]["centered"] = cfg.stft.centered;
  j["channels"] = cfg.channels;
  j["heads"] = cfg.heads;
  j["embed_per_head"] = cfg.embed_per_head;
  j["repeats"] = cfg.repeats;
  j["seed"] = cfg.seed;
  return j;
}

int run_eval(const std::string& manifest_path, const std::string& out_path,
             const std::string& csv_path, double seg_s) {
  auto j = json::parse(read_file(manifest_path));
  if (!j.is_array() || j.empty()) {
    std::cerr << "error: empty manifest\n";
    return 1;
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  auto resolve = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? p : (base / p).string();
  };
  std::vector<EvalItem> items(j.size());
  parallel_for(j.size(), [&](std::size_t i) {
    const auto& e = j[i];
    EvalItem item;
    item.id = e.at("id").get<std::string>();
    item.mix = read_wav(resolve(e.at("mix").get<std::string>()));
    item.est1 = read_wav(resolve(e.at("est")[0].get<std::string>()));
    item.est2 = read_wav(resolve(e.at("est")[1].get<std::string>()));
    item.gt1 = read_wav(resolve(e.at("gt")[0].get<std::string>()));
    item.gt2 = read_wav(resolve(e.at("gt")[1].get<std::string>()));
    item.same_singer = e.value("same_singer", false);
    items[i] = std::move(item);
  });
  SegSnrConfig cfg;
  cfg.seg_s = seg_s;
  std::vector<ItemMetrics> per_item(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    per_item[i] = evaluate_item(items[i], cfg);
  });
  MetricReport rep;
  rep.items = std::move(per_item);
  std::sort(rep.items.begin(), rep.items.end(),
            [](const ItemMetrics& a, const ItemMetrics& b) { return a.id < b.id; });
  const auto n = static_cast<double>(rep.items.size());
  for (const auto& m : rep.items) {
    rep.mean_sdr_i += m.sdr_i / n;
    rep.mean_si_sdr_i += m.si_sdr_i / n;
    rep.mean_ssnr += m.ssnr_db / n;
    rep.mean_pssnr += m.pssnr_db / n;
  }
  rep.hssnr = hssnr(rep.items);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write: " + out_path);
  out << rep.to_json() << '\n';
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    csv << rep.to_csv();
  }
  std::cerr << "hssnr " << rep.hssnr << " dB over " << rep.items.size()
            << " items -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UNMIXX mechanisms: musically informed mixing, cross-source "
               "attention, magnitude penalty loss, and segmental metrics"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.add_option("--threads", g_threads, "cap for data-parallel sections");

  // ---- mix
  auto* mix_cmd = app.add_subcommand("mix", "build correlated two-singer mixtures");
  std::string corpus_dir, annotations_dir, mix_out;
  std::size_t mix_count = 100, opt_b = 8, opt_big_m = 16, opt_small_m = 8;
  double mix_length = 4.0;
  std::uint64_t mix_seed = 0;
  mix_cmd->add_option("--corpus", corpus_dir, "directory of <id>.wav files")->required();
  mix_cmd->add_option("--annotations", annotations_dir, "directory of <id>.json files")->required();
  mix_cmd->add_option("--out", mix_out, "output directory")->required();
  mix_cmd->add_option("--count", mix_count, "number of mixtures");
  mix_cmd->add_option("--length-s", mix_length, "crop length in seconds");
  mix_cmd->add_option("--B", opt_b, "batch size");
  mix_cmd->add_option("--M", opt_big_m, "candidate multiplier");
  mix_cmd->add_option("--m", opt_small_m, "retained multiplier (m < M)");
  mix_cmd->add_option("--seed", mix_seed, "rng seed")->required();

  // ---- score-harmonic
  auto* score_cmd = app.add_subcommand("score-harmonic",
                                       "harmonic overlap score of two songs");
  std::string score_a, score_b;
  score_cmd->add_option("--a", score_a, "annotation json")->required();
  score_cmd->add_option("--b", score_b, "annotation json")->required();

  // ---- separate
  auto* sep_cmd = app.add_subcommand("separate", "two-singer separation");
  std::string sep_in, sep_out1, sep_out2, sep_config, sep_weights, sep_save;
  std::vector<std::string> sep_ideal;
  std::uint64_t sep_seed = 7;
  bool sep_dump = false;
  sep_cmd->add_option("--in", sep_in, "mixture wav")->required();
  sep_cmd->add_option("--out1", sep_out1, "singer 1 output wav")->required();
  sep_cmd->add_option("--out2", sep_out2, "singer 2 output wav")->required();
  sep_cmd->add_option("--config", sep_config, "separator config json");
  sep_cmd->add_option("--seed", sep_seed, "weight seed");
  sep_cmd->add_option("--ideal", sep_ideal, "gt1.wav gt2.wav: ideal-mask oracle path")
      ->expected(2);
  sep_cmd->add_option("--weights", sep_weights, "load attention weight blob");
  sep_cmd->add_option("--save-weights", sep_save, "save attention weight blob");
  sep_cmd->add_flag("--dump-config", sep_dump, "print effective config and exit");

  // ---- eval
  auto* eval_cmd = app.add_subcommand("eval", "metric report from a manifest");
  std::string eval_manifest, eval_out, eval_csv;
  double eval_seg = 1.0;
  eval_cmd->add_option("--manifest", eval_manifest, "eval manifest json")->required();
  eval_cmd->add_option("--out", eval_out, "report json")->required();
  eval_cmd->add_option("--csv", eval_csv, "csv mirror of the report");
  eval_cmd->add_option("--seg-s", eval_seg, "segment length in seconds");

  // ---- swap-sim
  auto* swap_cmd = app.add_subcommand("swap-sim",
                                      "segment-swap metric simulation");
  std::string swap_gt1, swap_gt2, swap_out, swap_ratios = "0.1,0.2,0.3,0.4,0.5";
  double swap_seg = 1.0;
  std::uint64_t swap_seed = 7;
  swap_cmd->add_option("--gt1", swap_gt1, "ground truth 1 wav")->required();
  swap_cmd->add_option("--gt2", swap_gt2, "ground truth 2 wav")->required();
  swap_cmd->add_option("--ratios", swap_ratios, "comma-separated swap ratios");
  swap_cmd->add_option("--out", swap_out, "output csv")->required();
  swap_cmd->add_option("--seg-s", swap_seg, "segment length in seconds");
  swap_cmd->add_option("--seed", swap_seed, "rng seed");

  // ---- grad-check
  auto* grad_cmd = app.add_subcommand("grad-check",
                                      "analytic gradients vs finite differences");
  std::uint64_t grad_seed = 7;
  std::size_t grad_trials = 100;
  grad_cmd->add_option("--seed", grad_seed, "rng seed");
  grad_cmd->add_option("--trials", grad_trials, "coordinates per loss");

  // ---- demo-penalty
  auto* demo_cmd = app.add_subcommand("demo-penalty",
                                      "mask-descent demo of the penalty loss");
  std::string demo_out, demo_gt1, demo_gt2;
  double demo_lp = 0.02, demo_lm = 0.1, demo_lr = 0.05;
  std::size_t demo_steps = 500, demo_from = 0;
  bool demo_dump = false;
  demo_cmd->add_option("--out", demo_out, "trajectory csv")->required();
  demo_cmd->add_option("--lambda-penalty", demo_lp, "penalty weight");
  demo_cmd->add_option("--lambda-mag", demo_lm, "magnitude weight");
  demo_cmd->add_option("--steps", demo_steps, "descent steps");
  demo_cmd->add_option("--lr", demo_lr, "learning rate");
  demo_cmd->add_option("--penalty-from-step", demo_from,
                       "first step with the penalty active");
  demo_cmd->add_option("--gt1", demo_gt1, "optional source 1 wav");
  demo_cmd->add_option("--gt2", demo_gt2, "optional source 2 wav");
  demo_cmd->add_flag("--dump-config", demo_dump, "print effective config and exit");

  // ---- selftest
  auto* self_cmd = app.add_subcommand("selftest",
                                      "invariant suite on synthetic signals");
  std::uint64_t self_seed = 7;
  self_cmd->add_option("--seed", self_seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (mix_cmd->parsed()) {
      return run_mix(corpus_dir, annotations_dir, mix_out, mix_count,
                     mix_length, opt_b, opt_big_m, opt_small_m, mix_seed);
    }

    if (score_cmd->parsed()) {
      auto load = [&](const std::string& path) {
        AnnotatedSong s = AnnotatedSong::from_json(read_file(path));
        if (!s.f0) {
          const fs::path wav = fs::path(path).replace_extension(".wav");
          if (!fs::exists(wav))
            throw std::runtime_error("annotation has no f0 and no sibling wav: " + path);
          s.clip = read_wav(wav.string());
          s.f0 = estimate_f0(s.clip);
        }
        return s;
      };
      AnnotatedSong a = load(score_a), b = load(score_b);
      std::cout << harmonic_overlap_score(*a.f0, *b.f0) << "\n";
      return 0;
    }

    if (sep_cmd->parsed()) {
      SeparatorConfig cfg;
      cfg.seed = sep_seed;
      if (!sep_config.empty()) {
        auto j = json::parse(read_file(sep_config));
        if (j.contains("stft")) cfg.stft = stft_from_json(j["stft"]);
        if (j.contains("channels")) cfg.channels = j["channels"].get<std::size_t>();
        if (j.contains("heads")) cfg.heads = j["heads"].get<std::size_t>();
        if (j.contains("embed_per_head"))
          cfg.embed_per_head = j["embed_per_head"].get<std::size_t>();
        if (j.contains("repeats")) cfg.repeats = j["repeats"].get<std::size_t>();
      }
      if (sep_dump) {
        std::cout << separator_config_json(cfg).dump(2) << "\n";
        return 0;
      }
      AudioClip mix = resample(read_wav(sep_in), 24000);
      std::pair<AudioClip, AudioClip> outs;
      if (!sep_ideal.empty()) {
        AudioClip g1 = resample(read_wav(sep_ideal[0]), 24000);
        AudioClip g2 = resample(read_wav(sep_ideal[1]), 24000);
        outs = apply_masks(mix, ideal_ratio_masks(g1, g2, cfg), cfg);
      } else {
        SeparatorWeights weights = SeparatorWeights::seeded(
            cfg, static_cast<std::size_t>(cfg.stft.bins()), mix.sample_rate);
        if (!sep_weights.empty())
          weights.stack = InterleavedStack::load(sep_weights);
        if (!sep_save.empty()) weights.stack.save(sep_save);
        outs = separate(mix, cfg, weights);
      }
      write_wav(sep_out1, outs.first);
      write_wav(sep_out2, outs.second);
      return 0;
    }

    if (eval_cmd->parsed())
      return run_eval(eval_manifest, eval_out, eval_csv, eval_seg);

    if (swap_cmd->parsed()) {
      AudioClip g1 = read_wav(swap_gt1);
      AudioClip g2 = read_wav(swap_gt2);
      std::vector<double> ratios;
      std::stringstream ss(swap_ratios);
      for (std::string tok; std::getline(ss, tok, ',');)
        ratios.push_back(std::stod(tok));
      auto rows = swap_sweep(g1, g2, ratios, swap_seg, swap_seed);
      write_swap_csv(swap_out, rows);
      std::cerr << "wrote " << rows.size() << " rows to " << swap_out << "\n";
      return 0;
    }

    if (grad_cmd->parsed()) {
      auto results = run_grad_checks(grad_seed, grad_trials);
      bool all_pass = true;
      double worst = 0.0;
      for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name
                  << "  worst relative error " << r.worst_rel << "\n";
        all_pass = all_pass && r.pass;
        worst = std::max(worst, r.worst_rel);
      }
      std::cout << "worst overall: " << worst << "\n";
      return all_pass ? 0 : 2;
    }

    if (demo_cmd->parsed()) {
      DemoConfig cfg;
      cfg.loss.weights.lambda_penalty = demo_lp;
      cfg.loss.weights.lambda_mag = demo_lm;
      cfg.steps = demo_steps;
      cfg.lr = demo_lr;
      cfg.penalty_from_step = demo_from;
      if (demo_dump) {
        json j;
        j["lambda_penalty"] = demo_lp;
        j["lambda_mag"] = demo_lm;
        j["steps"] = demo_steps;
        j["lr"] = demo_lr;
        j["penalty_from_step"] = demo_from;
        std::cout << j.dump(2) << "\n";
        return 0;
      }
      AudioClip g1, g2, mix;
      if (!demo_gt1.empty() && !demo_gt2.empty()) {
        g1 = resample(read_wav(demo_gt1), 24000);
        g2 = resample(read_wav(demo_gt2), 24000);
        mix = g1;
        kernels::add(mix.samples.data(), g2.samples.data(), mix.samples.data(),
                     mix.samples.size());
      } else {
        // Two bin-centered tones (exact DFT bins, so each tone occupies
        // three bins and the interference masks stay small and sharp).
        // The references are the tones at twice the amplitude found in
        // the mixture: a [0, 1] mask cannot reach them, so the SNR term
        // floors at the same gain-mismatch residual in every run instead
        // of racing to -inf, and the final L_SNR comparison between the
        // penalty and no-penalty runs is made on that shared floor.
        AudioClip t1 = make_sine(450.0, 1.0, 24000, 0.4);
        AudioClip t2 = make_sine(3000.0, 1.0, 24000, 0.4);
        mix = t1;
        kernels::add(mix.samples.data(), t2.samples.data(), mix.samples.data(),
                     mix.samples.size());
        g1 = t1;
        g2 = t2;
        kernels::scale(g1.samples.data(), 2.0, g1.samples.size());
        kernels::scale(g2.samples.data(), 2.0, g2.samples.size());
      }
      auto traj = optimize_masks_demo(mix, g1, g2, cfg);
      write_demo_csv(demo_out, traj);
      std::cerr << "final loss " << traj.back().loss << ", masked energy "
                << traj.back().masked_energy << " -> " << demo_out << "\n";
      return 0;
    }

    if (self_cmd->parsed()) {
      auto checks = run_selftest(self_seed);
      bool all_pass = true;
      for (const auto& c : checks) {
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name;
        if (!c.note.empty()) std::cout << "  " << c.note;
        std::cout << "\n";
        all_pass = all_pass && c.pass;
      }
      return all_pass ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
