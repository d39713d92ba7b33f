#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unmixx/audio.hpp"
#include "unmixx/stft.hpp"

namespace unmixx {

// Binary mask over bins where the non-target ground truth is strong and
// the target ground truth is weak.
struct InterferenceMask {
  std::vector<std::uint8_t> grid;  // T x F, row-major
  std::size_t frames = 0;
  std::size_t bins = 0;
  double tau_max = 1.0;
  double tau_min = 0.5;
  int source_index = 1;

  std::size_t count() const;
  std::uint8_t at(std::size_t t, std::size_t f) const {
    return grid[t * bins + f];
  }
};

struct LossWeights {
  double lambda_mag = 0.1;
  double lambda_penalty = 0.02;
  double eps = 1e-8;
};

enum class TauDomain { kCompressed, kRaw };

// I(t,f) = 1 iff M_j > tau_max and M_i < tau_min (strict).
InterferenceMask build_interference_mask(const MagSpec& target,
                                         const MagSpec& non_target,
                                         double tau_max, double tau_min);

struct SpecLossResult {
  double value = 0.0;
  std::vector<double> grad;  // T x F, wrt the estimated magnitude
};

// ||Mhat (.) I||^2 / (||I||_1 + eps)
SpecLossResult penalty_loss(const MagSpec& est, const InterferenceMask& mask,
                            double eps);

// mean squared magnitude distance, (1/(T*F)) sum (Mhat - M)^2
SpecLossResult mag_loss(const MagSpec& est, const MagSpec& ref);

struct WaveLossResult {
  double value = 0.0;
  std::vector<double> grad;  // per sample, wrt the estimate
};

// -10 log10((||s||^2 + eps) / (||s - shat||^2 + eps))
WaveLossResult snr_loss(const AudioClip& est, const AudioClip& ref, double eps);

struct TotalLossConfig {
  LossWeights weights;
  StftConfig stft;
  double compression = 0.5;
  double tau_max = 1.0;
  double tau_min = 0.5;
  TauDomain tau_domain = TauDomain::kCompressed;
  bool penalty_active = true;
};

struct TotalLossResult {
  double value = 0.0;
  double snr_term = 0.0;
  double mag_term = 0.0;
  double penalty_term = 0.0;
  bool swapped = false;  // chosen source-to-estimate assignment
  std::vector<double> grad1, grad2;  // wrt the two estimate waveforms
};

// L_Total = L_SNR + lambda_mag * L_Mag + lambda_penalty * L_Penalty,
// summed over both sources, under the better of the two assignments
// (utterance-level PIT, ties keep identity). Gradients are analytic,
// chained through compression and the STFT.
TotalLossResult total_loss(const AudioClip& est1, const AudioClip& est2,
                           const AudioClip& ref1, const AudioClip& ref2,
                           const TotalLossConfig& cfg);

// Loss and gradient of the direct mask-optimization objective: two logit
// grids -> sigmoid masks -> masked mixture spectrogram -> istft, scored
// with the total loss above. The waveform term scores only the fully
// overlapped interior (one window length trimmed at each end) because the
// overlap-add normalization is ill-conditioned at the signal edges.
// Exposed separately so the finite-difference checks can probe the whole
// chain.
struct MaskObjective {
  MaskObjective(const AudioClip& mix, const AudioClip& ref1,
                const AudioClip& ref2, const TotalLossConfig& cfg);

  std::size_t frames() const { return mix_spec_.frames; }
  std::size_t bins() const { return mix_spec_.bins; }

  struct Eval {
    double value = 0.0;
    double snr_term = 0.0, mag_term = 0.0, penalty_term = 0.0;
    double masked_energy = 0.0;  // sum over I=1 bins of Mhat^2, both sources
    std::vector<double> grad1, grad2;  // wrt the logit grids
  };
  Eval evaluate(const std::vector<double>& logits1,
                const std::vector<double>& logits2, bool want_grad,
                bool penalty_active = true) const;

  std::pair<AudioClip, AudioClip> estimates(
      const std::vector<double>& logits1,
      const std::vector<double>& logits2) const;

  const InterferenceMask& mask1() const { return i1_; }
  const InterferenceMask& mask2() const { return i2_; }

 private:
  TotalLossConfig cfg_;
  AudioClip mix_, ref1_, ref2_;
  ComplexSpec mix_spec_;
  MagSpec mix_mag_;           // raw |S_mix|
  MagSpec ref_mag1_, ref_mag2_;  // compressed ground-truth magnitudes
  InterferenceMask i1_, i2_;
};

struct DemoStep {
  std::size_t step = 0;
  double loss = 0.0;
  double snr_term = 0.0, mag_term = 0.0, penalty_term = 0.0;
  double masked_energy = 0.0;
  double ssnr_db = 0.0;
};

struct DemoConfig {
  TotalLossConfig loss;
  std::size_t steps = 500;
  double lr = 0.05;
  std::size_t penalty_from_step = 0;
  double seg_s = 1.0;  // for the SSNR column
};

// Gradient descent directly on the mask logits. Throws on divergence,
// naming the step. Returns steps+1 rows (row 0 is the initial state).
std::vector<DemoStep> optimize_masks_demo(const AudioClip& mix,
                                          const AudioClip& ref1,
                                          const AudioClip& ref2,
                                          const DemoConfig& cfg);

void write_demo_csv(const std::string& path,
                    const std::vector<DemoStep>& trajectory);

}  // namespace unmixx
