#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "unmixx/mim.hpp"
#include "unmixx/rng.hpp"

using namespace unmixx;

namespace {

AudioClip make_sine(double freq, double seconds, int sr, double amp) {
  AudioClip c;
  c.sample_rate = sr;
  c.samples.resize(static_cast<std::size_t>(seconds * sr));
  for (std::size_t n = 0; n < c.samples.size(); ++n)
    c.samples[n] = amp * std::sin(2.0 * std::numbers::pi * freq * n / sr);
  return c;
}

F0Track constant_track(double hz, std::size_t frames, double hop = 0.01) {
  F0Track t;
  t.hop_s = hop;
  t.values.assign(frames, hz);
  return t;
}

// Independent oracle: literal double loop over partial pairs, no shared
// helpers with the library implementation.
double oracle_overlap(const F0Track& a, const F0Track& b, int n, double tol) {
  double total = 0.0;
  std::size_t voiced = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double fa = a.values[i], fb = b.values[i];
    if (fa <= 0.0 || fb <= 0.0) continue;
    ++voiced;
    int matches = 0;
    for (int p = 1; p <= n; ++p) {
      bool hit = false;
      for (int q = 1; q <= n; ++q)
        if (std::abs(1200.0 * std::log2((p * fa) / (q * fb))) < tol) hit = true;
      if (hit) ++matches;
    }
    total += static_cast<double>(matches) / n;
  }
  return voiced ? total / static_cast<double>(voiced) : 0.0;
}

AnnotatedSong simple_song(const std::string& id, double freq, double seconds,
                          double beat_s = 0.5) {
  AnnotatedSong s;
  s.id = id;
  s.clip = make_sine(freq, seconds, 24000, 0.4);
  for (double t = 0.0; t < seconds; t += beat_s) s.beats.push_back(t);
  for (double t = 0.0; t < seconds; t += 4.0 * beat_s) s.downbeats.push_back(t);
  return s;
}

}  // namespace

TEST_CASE("bpm is the reciprocal median inter-beat interval") {
  CHECK(estimate_bpm({0.0, 0.5, 1.0, 1.5, 2.0}) ==
        doctest::Approx(120.0).epsilon(1e-12));
  CHECK(estimate_bpm({0.0, 0.75, 1.5}) == doctest::Approx(80.0).epsilon(1e-12));
  // median discards a single dropped beat
  CHECK(estimate_bpm({0.0, 0.5, 1.0, 2.0, 2.5, 3.0}) ==
        doctest::Approx(120.0).epsilon(1e-12));
  CHECK_THROWS(estimate_bpm({0.0, 0.5}));
}

TEST_CASE("tempo grouping clusters within the tolerance") {
  std::vector<std::pair<std::string, double>> bpms = {
      {"d", 150.0}, {"a", 118.0}, {"c", 121.0}, {"b", 120.0}};
  auto groups = group_by_tempo(bpms, 4.0);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].bpm_center == doctest::Approx(118.0));
  CHECK(groups[0].members == std::vector<std::string>{"a", "b", "c"});
  CHECK(groups[1].members == std::vector<std::string>{"d"});
  CHECK_THROWS(group_by_tempo({}, 4.0));
}

TEST_CASE("harmonic overlap: unison is 1.0, the octave is 0.5") {
  F0Track unison = constant_track(220.0, 10);
  CHECK(harmonic_overlap_score(unison, unison) == doctest::Approx(1.0));

  F0Track octave = constant_track(440.0, 10);
  // odd partials of 220 Hz fall between the partials of 440 Hz: 8/16
  CHECK(harmonic_overlap_score(unison, octave) == doctest::Approx(0.5));

  // all-unvoiced tracks score zero
  F0Track silent = constant_track(0.0, 10);
  CHECK(harmonic_overlap_score(unison, silent) == 0.0);
  CHECK_THROWS(harmonic_overlap_score(constant_track(-1.0, 3), unison));
}

TEST_CASE("harmonic overlap matches the brute-force oracle exactly") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t frames = 1 + rng.uniform_index(20);
    F0Track a, b;
    a.hop_s = b.hop_s = 0.01;
    for (std::size_t i = 0; i < frames; ++i) {
      a.values.push_back(rng.uniform(0.0, 1.0) < 0.2
                             ? 0.0
                             : rng.uniform(80.0, 800.0));
      b.values.push_back(rng.uniform(0.0, 1.0) < 0.2
                             ? 0.0
                             : rng.uniform(80.0, 800.0));
    }
    CHECK(harmonic_overlap_score(a, b) == oracle_overlap(a, b, 16, 50.0));
  }
}

TEST_CASE("f0 estimation recovers a pure tone and rejects silence") {
  AudioClip tone = make_sine(440.0, 0.5, 24000, 0.5);
  F0Track track = estimate_f0(tone);
  REQUIRE(!track.values.empty());
  std::size_t voiced = 0;
  for (double v : track.values)
    if (v > 0.0) {
      ++voiced;
      CHECK(v == doctest::Approx(440.0).epsilon(0.01));  // within ~4 Hz
    }
  CHECK(voiced > track.values.size() / 2);

  AudioClip quiet;
  quiet.sample_rate = 24000;
  quiet.samples.assign(12000, 0.0);
  F0Track silent = estimate_f0(quiet);
  for (double v : silent.values) CHECK(v == 0.0);

  AudioClip tiny;
  tiny.sample_rate = 24000;
  tiny.samples.assign(100, 0.0);
  CHECK_THROWS(estimate_f0(tiny));
}

TEST_CASE("crops start on downbeats and respect the clip end") {
  AnnotatedSong song = simple_song("s", 300.0, 10.0);
  Rng rng(42);
  for (int i = 0; i < 20; ++i) {
    auto [clip, start] = crop_at_downbeat(song, 3.0, rng);
    CHECK(std::find(song.downbeats.begin(), song.downbeats.end(), start) !=
          song.downbeats.end());
    CHECK(start + 3.0 <= song.clip.duration_s() + 1e-9);
    CHECK(clip.samples.size() == 3 * 24000);
    // the crop is the literal sample range of the song
    const auto begin = static_cast<std::size_t>(std::llround(start * 24000));
    CHECK(clip.samples[0] == song.clip.samples[begin]);
    CHECK(clip.samples[100] == song.clip.samples[begin + 100]);
  }
  CHECK_THROWS(crop_at_downbeat(song, 60.0, rng));  // nothing fits
}

TEST_CASE("onset-based beat fallback finds a click track's tempo") {
  // 120 BPM click track: short decaying bursts every 0.5 s
  AudioClip clip;
  clip.sample_rate = 24000;
  clip.samples.assign(24000 * 10, 0.0);
  for (std::size_t n = 0; n < clip.samples.size(); n += 12000)
    for (std::size_t i = 0; i < 480 && n + i < clip.samples.size(); ++i)
      clip.samples[n + i] =
          0.8 * std::exp(-static_cast<double>(i) / 96.0) *
          std::sin(2.0 * std::numbers::pi * 1000.0 * i / 24000.0);

  AnnotatedSong song;
  song.id = "click";
  song.clip = clip;
  estimate_beats(song);
  REQUIRE(song.beats.size() >= 3);
  const double bpm = estimate_bpm(song.beats);
  CHECK(bpm > 108.0);
  CHECK(bpm < 132.0);  // quantized by the hop; coarse agreement suffices
  // downbeats are every fourth beat
  CHECK(song.downbeats.size() == (song.beats.size() + 3) / 4);
  for (double d : song.downbeats)
    CHECK(std::find(song.beats.begin(), song.beats.end(), d) !=
          song.beats.end());

  AnnotatedSong shorty;
  shorty.id = "x";
  shorty.clip.sample_rate = 24000;
  shorty.clip.samples.assign(1000, 0.0);
  CHECK_THROWS(estimate_beats(shorty));
}

TEST_CASE("batch mining samples only from the top candidates") {
  Rng rng(43);
  std::vector<MixPair> pool;
  for (int i = 0; i < 40; ++i) {
    MixPair p;
    p.song_a = "a" + std::to_string(i);
    p.song_b = "b" + std::to_string(i);
    p.harmonic_score = static_cast<double>(i);  // distinct, 39 is best
    pool.push_back(p);
  }
  // batch 4, m = 2, M = 10: selection universe is the top 8 scores 32..39
  for (int trial = 0; trial < 25; ++trial) {
    auto batch = mine_batch(pool, 4, 2, 10, rng);
    REQUIRE(batch.size() == 4);
    std::set<std::string> seen;
    for (const auto& p : batch) {
      CHECK(p.harmonic_score >= 32.0);
      CHECK(seen.insert(p.song_a).second);  // without replacement
    }
  }

  Rng r2(44);
  CHECK_THROWS(mine_batch(pool, 4, 10, 10, r2));  // m must be < M
  CHECK_THROWS(mine_batch(pool, 8, 2, 10, r2));   // 8*10 > pool size
}

TEST_CASE("mixtures are bit-exact sums of their ground truths") {
  AnnotatedSong sa = simple_song("sa", 350.0, 8.0);
  AnnotatedSong sb = simple_song("sb", 520.0, 8.0);
  Rng rng(45);
  for (int trial = 0; trial < 10; ++trial) {
    Mixture mx = make_mixture(sa, sb, 3.0, rng);
    REQUIRE(mx.mix.samples.size() == mx.gt1.samples.size());
    REQUIRE(mx.mix.samples.size() == mx.gt2.samples.size());
    for (std::size_t i = 0; i < mx.mix.samples.size(); ++i)
      CHECK(mx.mix.samples[i] == mx.gt1.samples[i] + mx.gt2.samples[i]);
    CHECK(mx.pair.song_a == "sa");
    CHECK(std::find(sa.downbeats.begin(), sa.downbeats.end(),
                    mx.pair.start_a) != sa.downbeats.end());
    // the gain policy keeps the offset within +/-3 dB around equal rms
    const double ratio_db =
        20.0 * std::log10(rms(mx.gt1) / rms(mx.gt2));
    CHECK(std::abs(ratio_db) <= 3.0 + 1e-9);
  }

  // loud inputs trigger the joint peak normalization but keep additivity
  AnnotatedSong la = simple_song("la", 350.0, 8.0);
  AnnotatedSong lb = simple_song("lb", 520.0, 8.0);
  for (auto& v : la.clip.samples) v *= 2.4;
  for (auto& v : lb.clip.samples) v *= 2.4;
  Mixture loud = make_mixture(la, lb, 3.0, rng);
  double peak = 0.0;
  for (double v : loud.mix.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak <= 1.0 + 1e-12);
  for (std::size_t i = 0; i < loud.mix.samples.size(); ++i)
    CHECK(loud.mix.samples[i] == loud.gt1.samples[i] + loud.gt2.samples[i]);

  // silent material is rejected after retries
  AnnotatedSong silent = simple_song("mute", 350.0, 8.0);
  silent.clip.samples.assign(silent.clip.samples.size(), 0.0);
  CHECK_THROWS(make_mixture(silent, sb, 3.0, rng));
}

TEST_CASE("fixed-start mixing reuses the mined pair verbatim") {
  AnnotatedSong sa = simple_song("sa", 350.0, 8.0);
  AnnotatedSong sb = simple_song("sb", 520.0, 8.0);
  MixPair pair;
  pair.song_a = "sa";
  pair.song_b = "sb";
  pair.start_a = 2.0;
  pair.start_b = 0.0;
  pair.length_s = 3.0;
  pair.harmonic_score = 0.25;
  Rng rng(46);
  Mixture mx = make_mixture_at(sa, sb, pair, rng);
  CHECK(mx.pair.start_a == 2.0);
  CHECK(mx.pair.harmonic_score == 0.25);
  CHECK(mx.mix.samples.size() == 3 * 24000);
  for (std::size_t i = 0; i < mx.mix.samples.size(); ++i)
    CHECK(mx.mix.samples[i] == mx.gt1.samples[i] + mx.gt2.samples[i]);
}

TEST_CASE("f0 slicing selects the matching frame range") {
  F0Track t;
  t.hop_s = 0.01;
  for (int i = 0; i < 100; ++i) t.values.push_back(static_cast<double>(i));
  F0Track s = slice_f0(t, 0.5, 0.2);
  REQUIRE(s.values.size() == 20);
  CHECK(s.values.front() == 50.0);
  CHECK(s.values.back() == 69.0);
  // ranges past the end are clipped
  F0Track tail = slice_f0(t, 0.95, 0.2);
  CHECK(tail.values.size() == 5);
}

TEST_CASE("annotation json round trip and validation") {
  AnnotatedSong s = simple_song("roundtrip", 300.0, 4.0);
  s.f0 = constant_track(220.0, 40);
  s.check();
  AnnotatedSong back = AnnotatedSong::from_json(s.to_json());
  CHECK(back.id == s.id);
  CHECK(back.beats == s.beats);
  CHECK(back.downbeats == s.downbeats);
  REQUIRE(back.f0.has_value());
  CHECK(back.f0->values == s.f0->values);
  CHECK(back.f0->hop_s == s.f0->hop_s);

  CHECK_THROWS(AnnotatedSong::from_json("{\"beats\": []}"));  // id required

  AnnotatedSong bad = simple_song("bad", 300.0, 4.0);
  bad.beats = {0.0, 1.0, 0.5};
  CHECK_THROWS(bad.check());
  bad = simple_song("bad2", 300.0, 4.0);
  bad.downbeats = {9.5};  // past the clip end
  CHECK_THROWS(bad.check());
}
