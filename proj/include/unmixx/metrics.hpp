#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unmixx/audio.hpp"

namespace unmixx {

// Scale-invariant SDR in dB, capped at +100.
double si_sdr(const AudioClip& est, const AudioClip& ref);

// Plain energy-ratio SDR (no allowed filter), capped at +100.
double sdr(const AudioClip& est, const AudioClip& ref);

enum class PairMetric { kSdr, kSiSdr };

// Pair-level score under the best global permutation of the estimates,
// mean over the two sources.
double pair_score(PairMetric metric, const AudioClip& est1,
                  const AudioClip& est2, const AudioClip& gt1,
                  const AudioClip& gt2);

// improvement over using the mixture itself as both estimates
double pair_improvement(PairMetric metric, const AudioClip& est1,
                        const AudioClip& est2, const AudioClip& gt1,
                        const AudioClip& gt2, const AudioClip& mix);

struct SegSnrConfig {
  double seg_s = 1.0;
  double clamp_lo_db = -10.0;
  double clamp_hi_db = 35.0;
  double eps = 1e-8;
};

// Segmental SNR with one global permutation over both sources.
double ssnr(const AudioClip& est1, const AudioClip& est2, const AudioClip& gt1,
            const AudioClip& gt2, const SegSnrConfig& cfg = {});

// Same segmentation but the 2-way permutation is re-chosen per segment.
double pssnr(const AudioClip& est1, const AudioClip& est2, const AudioClip& gt1,
             const AudioClip& gt2, const SegSnrConfig& cfg = {});

struct EvalItem {
  std::string id;
  AudioClip mix, est1, est2, gt1, gt2;
  bool same_singer = false;
};

struct ItemMetrics {
  std::string id;
  bool same_singer = false;
  double sdr_i = 0.0;
  double si_sdr_i = 0.0;
  double ssnr_db = 0.0;
  double pssnr_db = 0.0;
  double hssnr_contribution = 0.0;  // pssnr if same singer, else ssnr
};

struct MetricReport {
  std::vector<ItemMetrics> items;
  double mean_sdr_i = 0.0, mean_si_sdr_i = 0.0;
  double mean_ssnr = 0.0, mean_pssnr = 0.0;
  double hssnr = 0.0;

  std::string to_json() const;
  std::string to_csv() const;
};

ItemMetrics evaluate_item(const EvalItem& item, const SegSnrConfig& cfg = {});
MetricReport evaluate(const std::vector<EvalItem>& items,
                      const SegSnrConfig& cfg = {});

// mean over items of (same_singer ? pssnr : ssnr); throws on empty input
double hssnr(const std::vector<ItemMetrics>& items);

// Swap round(ratio * n_segments) randomly chosen whole segments between
// the two ground truths and return the result as "estimates".
std::pair<AudioClip, AudioClip> swap_simulate(const AudioClip& gt1,
                                              const AudioClip& gt2,
                                              double ratio, double seg_s,
                                              std::uint64_t seed);

struct SwapRow {
  double ratio = 0.0;
  double sdri = 0.0, si_sdri = 0.0, ssnr = 0.0, pssnr = 0.0;
};

std::vector<SwapRow> swap_sweep(const AudioClip& gt1, const AudioClip& gt2,
                                const std::vector<double>& ratios, double seg_s,
                                std::uint64_t seed);

void write_swap_csv(const std::string& path, const std::vector<SwapRow>& rows);

}  // namespace unmixx
