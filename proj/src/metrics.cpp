#include "unmixx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "unmixx/kernels.hpp"
#include "unmixx/rng.hpp"

namespace unmixx {

namespace {

constexpr double kEps = 1e-12;
constexpr double kCapDb = 100.0;

double db10(double ratio) { return 10.0 * std::log10(ratio); }

void check_pair_lengths(const AudioClip& a, const AudioClip& b,
                        const char* what) {
  if (a.samples.size() != b.samples.size())
    throw std::runtime_error(std::string(what) + ": length mismatch");
}

}  // namespace

double si_sdr(const AudioClip& est, const AudioClip& ref) {
  check_pair_lengths(est, ref, "si_sdr");
  const std::size_t n = ref.samples.size();
  const double ref_energy = kernels::sum_sq(ref.samples.data(), n);
  if (ref_energy < kEps) throw std::runtime_error("si_sdr: zero reference");
  const double alpha =
      kernels::dot(est.samples.data(), ref.samples.data(), n) / ref_energy;
  const double target_energy = alpha * alpha * ref_energy;
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = est.samples[i] - alpha * ref.samples[i];
    err += e * e;
  }
  return std::min(kCapDb, db10((target_energy + kEps) / (err + kEps)));
}

double sdr(const AudioClip& est, const AudioClip& ref) {
  check_pair_lengths(est, ref, "sdr");
  const std::size_t n = ref.samples.size();
  const double ref_energy = kernels::sum_sq(ref.samples.data(), n);
  if (ref_energy < kEps) throw std::runtime_error("sdr: zero reference");
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = est.samples[i] - ref.samples[i];
    err += e * e;
  }
  return std::min(kCapDb, db10((ref_energy + kEps) / (err + kEps)));
}

double pair_score(PairMetric metric, const AudioClip& est1,
                  const AudioClip& est2, const AudioClip& gt1,
                  const AudioClip& gt2) {
  auto m = metric == PairMetric::kSdr ? sdr : si_sdr;
  const double ident = 0.5 * (m(est1, gt1) + m(est2, gt2));
  const double swapped = 0.5 * (m(est1, gt2) + m(est2, gt1));
  return std::max(ident, swapped);
}

double pair_improvement(PairMetric metric, const AudioClip& est1,
                        const AudioClip& est2, const AudioClip& gt1,
                        const AudioClip& gt2, const AudioClip& mix) {
  return pair_score(metric, est1, est2, gt1, gt2) -
         pair_score(metric, mix, mix, gt1, gt2);
}

namespace {

struct Segments {
  std::size_t seg_len = 0;
  std::size_t count = 0;
};

Segments segmentation(std::size_t n, int sample_rate, double seg_s) {
  Segments s;
  s.seg_len = static_cast<std::size_t>(std::llround(seg_s * sample_rate));
  // anything at least half a segment long scores as one padded segment
  if (s.seg_len == 0 || n * 2 < s.seg_len)
    throw std::runtime_error("segmental snr: input too short");
  s.count = n / s.seg_len;
  const std::size_t rem = n - s.count * s.seg_len;
  // trailing remainder: keep (zero-padded) only if at least half a segment
  if (rem * 2 >= s.seg_len) ++s.count;
  return s;
}

double segment_snr(const double* est, const double* gt, std::size_t n,
                   const SegSnrConfig& cfg) {
  double ref = 0.0, err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ref += gt[i] * gt[i];
    const double d = gt[i] - est[i];
    err += d * d;
  }
  const double v = db10((ref + cfg.eps) / (err + cfg.eps));
  return std::clamp(v, cfg.clamp_lo_db, cfg.clamp_hi_db);
}

// per-segment SNR for a given source-to-estimate assignment, both sources
std::vector<double> per_segment_scores(const AudioClip& e1,
                                       const AudioClip& e2,
                                       const AudioClip& g1,
                                       const AudioClip& g2,
                                       const SegSnrConfig& cfg,
                                       const Segments& seg) {
  const std::size_t n = g1.samples.size();
  std::vector<double> scores(seg.count);
  for (std::size_t s = 0; s < seg.count; ++s) {
    const std::size_t lo = s * seg.seg_len;
    const std::size_t len = std::min(seg.seg_len, n - lo);
    const double a = segment_snr(e1.samples.data() + lo, g1.samples.data() + lo,
                                 len, cfg);
    const double b = segment_snr(e2.samples.data() + lo, g2.samples.data() + lo,
                                 len, cfg);
    scores[s] = 0.5 * (a + b);
  }
  return scores;
}

}  // namespace

double ssnr(const AudioClip& est1, const AudioClip& est2, const AudioClip& gt1,
            const AudioClip& gt2, const SegSnrConfig& cfg) {
  check_pair_lengths(est1, gt1, "ssnr");
  check_pair_lengths(est2, gt2, "ssnr");
  const Segments seg = segmentation(gt1.samples.size(), gt1.sample_rate,
                                    cfg.seg_s);
  const auto ident = per_segment_scores(est1, est2, gt1, gt2, cfg, seg);
  const auto swapped = per_segment_scores(est1, est2, gt2, gt1, cfg, seg);
  const double sum_i = kernels::sum(ident.data(), ident.size());
  const double sum_s = kernels::sum(swapped.data(), swapped.size());
  // one global permutation; ties keep identity
  const auto& best = sum_s > sum_i ? swapped : ident;
  return kernels::sum(best.data(), best.size()) /
         static_cast<double>(best.size());
}

double pssnr(const AudioClip& est1, const AudioClip& est2, const AudioClip& gt1,
             const AudioClip& gt2, const SegSnrConfig& cfg) {
  check_pair_lengths(est1, gt1, "pssnr");
  check_pair_lengths(est2, gt2, "pssnr");
  const Segments seg = segmentation(gt1.samples.size(), gt1.sample_rate,
                                    cfg.seg_s);
  const auto ident = per_segment_scores(est1, est2, gt1, gt2, cfg, seg);
  const auto swapped = per_segment_scores(est1, est2, gt2, gt1, cfg, seg);
  double acc = 0.0;
  for (std::size_t s = 0; s < seg.count; ++s)
    acc += std::max(ident[s], swapped[s]);
  return acc / static_cast<double>(seg.count);
}

ItemMetrics evaluate_item(const EvalItem& item, const SegSnrConfig& cfg) {
  ItemMetrics m;
  m.id = item.id;
  m.same_singer = item.same_singer;
  m.sdr_i = pair_improvement(PairMetric::kSdr, item.est1, item.est2, item.gt1,
                             item.gt2, item.mix);
  m.si_sdr_i = pair_improvement(PairMetric::kSiSdr, item.est1, item.est2,
                                item.gt1, item.gt2, item.mix);
  m.ssnr_db = ssnr(item.est1, item.est2, item.gt1, item.gt2, cfg);
  m.pssnr_db = pssnr(item.est1, item.est2, item.gt1, item.gt2, cfg);
  m.hssnr_contribution = item.same_singer ? m.pssnr_db : m.ssnr_db;
  return m;
}

double hssnr(const std::vector<ItemMetrics>& items) {
  if (items.empty()) throw std::runtime_error("hssnr: empty item set");
  double acc = 0.0;
  for (const auto& m : items) acc += m.hssnr_contribution;
  return acc / static_cast<double>(items.size());
}

MetricReport evaluate(const std::vector<EvalItem>& items,
                      const SegSnrConfig& cfg) {
  if (items.empty()) throw std::runtime_error("evaluate: empty manifest");
  MetricReport rep;
  for (const auto& item : items) rep.items.push_back(evaluate_item(item, cfg));
  // deterministic merge order
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
  return rep;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  for (const auto& m : items) {
    nlohmann::json it;
    it["id"] = m.id;
    it["same_singer"] = m.same_singer;
    it["sdr_i"] = m.sdr_i;
    it["si_sdr_i"] = m.si_sdr_i;
    it["ssnr"] = m.ssnr_db;
    it["pssnr"] = m.pssnr_db;
    it["hssnr_contribution"] = m.hssnr_contribution;
    j["items"].push_back(it);
  }
  j["aggregates"]["mean_sdr_i"] = mean_sdr_i;
  j["aggregates"]["mean_si_sdr_i"] = mean_si_sdr_i;
  j["aggregates"]["mean_ssnr"] = mean_ssnr;
  j["aggregates"]["mean_pssnr"] = mean_pssnr;
  j["aggregates"]["hssnr"] = hssnr;
  return j.dump(2);
}

std::string MetricReport::to_csv() const {
  std::string out =
      "id,same_singer,sdri,si_sdri,ssnr,pssnr,hssnr_contribution\n";
  for (const auto& m : items)
    out += m.id + ',' + (m.same_singer ? "1" : "0") + ',' +
           std::to_string(m.sdr_i) + ',' + std::to_string(m.si_sdr_i) + ',' +
           std::to_string(m.ssnr_db) + ',' + std::to_string(m.pssnr_db) + ',' +
           std::to_string(m.hssnr_contribution) + '\n';
  return out;
}

std::pair<AudioClip, AudioClip> swap_simulate(const AudioClip& gt1,
                                              const AudioClip& gt2,
                                              double ratio, double seg_s,
                                              std::uint64_t seed) {
  check_pair_lengths(gt1, gt2, "swap_simulate");
  if (ratio < 0.0 || ratio > 1.0)
    throw std::runtime_error("swap_simulate: ratio must be in [0, 1]");
  const auto seg_len =
      static_cast<std::size_t>(std::llround(seg_s * gt1.sample_rate));
  const std::size_t n_seg = seg_len ? gt1.samples.size() / seg_len : 0;
  auto n_swap = static_cast<std::size_t>(std::llround(ratio * n_seg));

  AudioClip e1 = gt1, e2 = gt2;
  if (n_swap == 0) return {e1, e2};

  std::vector<std::size_t> order(n_seg);
  for (std::size_t i = 0; i < n_seg; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < n_swap; ++i) {
    const std::size_t j = i + rng.uniform_index(n_seg - i);
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < n_swap; ++i) {
    const std::size_t lo = order[i] * seg_len;
    for (std::size_t k = lo; k < lo + seg_len; ++k)
      std::swap(e1.samples[k], e2.samples[k]);
  }
  return {e1, e2};
}

std::vector<SwapRow> swap_sweep(const AudioClip& gt1, const AudioClip& gt2,
                                const std::vector<double>& ratios, double seg_s,
                                std::uint64_t seed) {
  AudioClip mix = gt1;
  kernels::add(mix.samples.data(), gt2.samples.data(), mix.samples.data(),
               mix.samples.size());
  SegSnrConfig cfg;
  cfg.seg_s = seg_s;
  std::vector<SwapRow> rows;
  for (double r : ratios) {
    auto [e1, e2] = swap_simulate(gt1, gt2, r, seg_s, seed);
    SwapRow row;
    row.ratio = r;
    row.sdri = pair_improvement(PairMetric::kSdr, e1, e2, gt1, gt2, mix);
    row.si_sdri = pair_improvement(PairMetric::kSiSdr, e1, e2, gt1, gt2, mix);
    row.ssnr = ssnr(e1, e2, gt1, gt2, cfg);
    row.pssnr = pssnr(e1, e2, gt1, gt2, cfg);
    rows.push_back(row);
  }
  return rows;
}

void write_swap_csv(const std::string& path, const std::vector<SwapRow>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write csv: " + path);
  f << "ratio,sdri,si_sdri,ssnr,pssnr\n";
  for (const auto& r : rows)
    f << r.ratio << ',' << r.sdri << ',' << r.si_sdri << ',' << r.ssnr << ','
      << r.pssnr << '\n';
}

}  // namespace unmixx
