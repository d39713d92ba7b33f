#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "unmixx/audio.hpp"
#include "unmixx/rng.hpp"

namespace unmixx {

struct F0Track {
  double hop_s = 0.01;
  std::vector<double> values;  // Hz, 0 = unvoiced
};

struct AnnotatedSong {
  std::string id;
  AudioClip clip;
  std::vector<double> beats;      // seconds, strictly increasing
  std::vector<double> downbeats;  // seconds, subset of the beat grid
  std::optional<F0Track> f0;

  void check() const;
  std::string to_json() const;  // annotation only, no audio
  static AnnotatedSong from_json(const std::string& text);
};

struct TempoGroup {
  double bpm_center = 0.0;
  double tolerance = 4.0;
  std::vector<std::string> members;
};

struct MixPair {
  std::string song_a, song_b;
  double start_a = 0.0, start_b = 0.0;  // downbeat seconds
  double length_s = 0.0;
  double gain_a = 1.0, gain_b = 1.0;
  double harmonic_score = 0.0;
};

// 60 / median inter-beat interval; needs at least 3 beats.
double estimate_bpm(const std::vector<double>& beats);

// Greedy clustering on sorted BPMs: a new group starts when the next BPM
// exceeds the current center + tolerance.
std::vector<TempoGroup> group_by_tempo(
    const std::vector<std::pair<std::string, double>>& song_bpms,
    double tolerance_bpm = 4.0);

// Uniformly random downbeat with at least length_s of audio after it.
std::pair<AudioClip, double> crop_at_downbeat(const AnnotatedSong& song,
                                              double length_s, Rng& rng);

// Fraction of the first n_overtones partials of a that coincide (within
// tol_cents) with some partial of b, averaged over voiced-voiced frames.
double harmonic_overlap_score(const F0Track& a, const F0Track& b,
                              int n_overtones = 16, double tol_cents = 50.0);

struct F0Config {
  double frame_s = 0.032;
  double hop_s = 0.010;
  double fmin = 60.0;
  double fmax = 1000.0;
  double voicing_threshold = 0.5;
};

// Autocorrelation peak picking with a voicing threshold.
F0Track estimate_f0(const AudioClip& clip, const F0Config& cfg = {});

// Onset-strength autocorrelation fallback for unannotated corpora. Lower
// quality than real annotations; downbeats are every fourth beat.
void estimate_beats(AnnotatedSong& song);

// Sort candidates by score descending (ties by pair id), keep the top
// batch_size*m, sample batch_size of those without replacement.
std::vector<MixPair> mine_batch(std::vector<MixPair> candidates,
                                std::size_t batch_size, std::size_t factor_m,
                                std::size_t factor_big_m, Rng& rng);

struct Mixture {
  AudioClip mix, gt1, gt2;
  MixPair pair;
};

// Gain both crops to a random +/-3 dB offset around equal RMS, sum, and
// peak-normalize all three together if the mix clips. mix == gt1 + gt2
// holds bit-exactly.
Mixture make_mixture(const AnnotatedSong& song_a, const AnnotatedSong& song_b,
                     double length_s, Rng& rng, int max_retries = 5);

// Same gain policy, but at the given (already mined) downbeat starts.
Mixture make_mixture_at(const AnnotatedSong& song_a,
                        const AnnotatedSong& song_b, const MixPair& pair,
                        Rng& rng);

// f0 sub-track covering [start_s, start_s + length_s)
F0Track slice_f0(const F0Track& track, double start_s, double length_s);

}  // namespace unmixx
