#include "unmixx/losses.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "unmixx/kernels.hpp"
#include "unmixx/metrics.hpp"

namespace unmixx {

namespace {

constexpr double kLog10Factor = 10.0 / M_LN10;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_shapes(const MagSpec& a, const MagSpec& b, const char* what) {
  if (a.frames != b.frames || a.bins != b.bins)
    throw std::runtime_error(std::string(what) + ": shape mismatch");
}

}  // namespace

std::size_t InterferenceMask::count() const {
  std::size_t c = 0;
  for (auto v : grid) c += v;
  return c;
}

InterferenceMask build_interference_mask(const MagSpec& target,
                                         const MagSpec& non_target,
                                         double tau_max, double tau_min) {
  check_shapes(target, non_target, "build_interference_mask");
  if (target.compression_exponent != non_target.compression_exponent)
    throw std::runtime_error(
        "build_interference_mask: compression exponents differ");
  InterferenceMask m;
  m.frames = target.frames;
  m.bins = target.bins;
  m.tau_max = tau_max;
  m.tau_min = tau_min;
  m.grid.resize(target.grid.size());
  for (std::size_t i = 0; i < target.grid.size(); ++i)
    m.grid[i] =
        (non_target.grid[i] > tau_max && target.grid[i] < tau_min) ? 1 : 0;
  return m;
}

SpecLossResult penalty_loss(const MagSpec& est, const InterferenceMask& mask,
                            double eps) {
  if (est.frames != mask.frames || est.bins != mask.bins)
    throw std::runtime_error("penalty_loss: shape mismatch");
  const double denom = static_cast<double>(mask.count()) + eps;
  SpecLossResult r;
  r.grad.assign(est.grid.size(), 0.0);
  double num = 0.0;
  for (std::size_t i = 0; i < est.grid.size(); ++i)
    if (mask.grid[i]) {
      num += est.grid[i] * est.grid[i];
      r.grad[i] = 2.0 * est.grid[i] / denom;
    }
  r.value = num / denom;
  return r;
}

SpecLossResult mag_loss(const MagSpec& est, const MagSpec& ref) {
  check_shapes(est, ref, "mag_loss");
  if (est.compression_exponent != ref.compression_exponent)
    throw std::runtime_error("mag_loss: compression exponents differ");
  const double inv_n = 1.0 / static_cast<double>(est.grid.size());
  SpecLossResult r;
  r.grad.resize(est.grid.size());
  for (std::size_t i = 0; i < est.grid.size(); ++i) {
    const double d = est.grid[i] - ref.grid[i];
    r.value += d * d;
    r.grad[i] = 2.0 * d * inv_n;
  }
  r.value *= inv_n;
  return r;
}

WaveLossResult snr_loss(const AudioClip& est, const AudioClip& ref,
                        double eps) {
  if (est.samples.size() != ref.samples.size())
    throw std::runtime_error("snr_loss: length mismatch");
  const std::size_t n = ref.samples.size();
  const double ref_energy = kernels::sum_sq(ref.samples.data(), n);
  if (ref_energy == 0.0) throw std::runtime_error("snr_loss: degenerate reference");

  std::vector<double> diff(n);
  kernels::sub(ref.samples.data(), est.samples.data(), diff.data(), n);
  const double err_energy = kernels::sum_sq(diff.data(), n) + eps;

  WaveLossResult r;
  r.value = -kLog10Factor * std::log((ref_energy + eps) / err_energy);
  r.grad.resize(n);
  const double c = 2.0 * kLog10Factor / err_energy;
  for (std::size_t i = 0; i < n; ++i)
    r.grad[i] = c * (est.samples[i] - ref.samples[i]);
  return r;
}

namespace {

struct SourceTerms {
  double snr = 0.0, mag = 0.0, pen = 0.0;
  std::vector<double> grad;  // wrt the estimate waveform
};

// one estimate against one assigned reference, gradients chained through
// compression and the analysis transform
SourceTerms source_terms(const AudioClip& est, const AudioClip& ref,
                         const MagSpec& ref_mag_comp,
                         const InterferenceMask& imask,
                         const TotalLossConfig& cfg, bool want_grad) {
  SourceTerms out;
  WaveLossResult snr = snr_loss(est, ref, cfg.weights.eps);
  out.snr = snr.value;

  ComplexSpec est_spec = stft(est, cfg.stft);
  MagSpec raw = magnitude(est_spec);
  MagSpec comp = power_compress(raw, cfg.compression);

  SpecLossResult mg = mag_loss(comp, ref_mag_comp);
  SpecLossResult pn = penalty_loss(comp, imask, cfg.weights.eps);
  out.mag = mg.value;
  out.pen = pn.value;

  if (!want_grad) return out;

  out.grad = std::move(snr.grad);
  const double lm = cfg.weights.lambda_mag;
  const double lp = cfg.penalty_active ? cfg.weights.lambda_penalty : 0.0;
  const double p = cfg.compression;

  ComplexSpec g = est_spec;
  for (std::size_t i = 0; i < g.grid.size(); ++i) {
    const double mag_grad = lm * mg.grad[i] + lp * pn.grad[i];
    const double a = raw.grid[i];
    if (a < 1e-12 || mag_grad == 0.0) {
      g.grid[i] = {0.0, 0.0};
      continue;
    }
    // dL/d|S| = dL/dMhat * p * |S|^(p-1); dL/dS = dL/d|S| * S/|S|
    const double dmag = mag_grad * p * std::pow(a, p - 1.0) / a;
    g.grid[i] = {dmag * est_spec.grid[i].real(), dmag * est_spec.grid[i].imag()};
  }
  std::vector<double> spec_grad = stft_adjoint(g, est.samples.size());
  kernels::add(out.grad.data(), spec_grad.data(), out.grad.data(),
               out.grad.size());
  return out;
}

}  // namespace

TotalLossResult total_loss(const AudioClip& est1, const AudioClip& est2,
                           const AudioClip& ref1, const AudioClip& ref2,
                           const TotalLossConfig& cfg) {
  MagSpec m1 = power_compress(magnitude(stft(ref1, cfg.stft)), cfg.compression);
  MagSpec m2 = power_compress(magnitude(stft(ref2, cfg.stft)), cfg.compression);

  const MagSpec* tau1 = &m1;
  const MagSpec* tau2 = &m2;
  MagSpec raw1, raw2;
  if (cfg.tau_domain == TauDomain::kRaw) {
    raw1 = magnitude(stft(ref1, cfg.stft));
    raw2 = magnitude(stft(ref2, cfg.stft));
    tau1 = &raw1;
    tau2 = &raw2;
  }
  InterferenceMask i1 =
      build_interference_mask(*tau1, *tau2, cfg.tau_max, cfg.tau_min);
  InterferenceMask i2 =
      build_interference_mask(*tau2, *tau1, cfg.tau_max, cfg.tau_min);

  const double lm = cfg.weights.lambda_mag;
  const double lp = cfg.penalty_active ? cfg.weights.lambda_penalty : 0.0;

  auto assemble = [&](const AudioClip& r1, const AudioClip& r2,
                      const MagSpec& mm1, const MagSpec& mm2,
                      const InterferenceMask& ii1, const InterferenceMask& ii2,
                      bool want_grad) {
    SourceTerms a = source_terms(est1, r1, mm1, ii1, cfg, want_grad);
    SourceTerms b = source_terms(est2, r2, mm2, ii2, cfg, want_grad);
    TotalLossResult res;
    res.snr_term = a.snr + b.snr;
    res.mag_term = a.mag + b.mag;
    res.penalty_term = a.pen + b.pen;
    res.value = res.snr_term + lm * res.mag_term + lp * res.penalty_term;
    if (want_grad) {
      res.grad1 = std::move(a.grad);
      res.grad2 = std::move(b.grad);
    }
    return res;
  };

  TotalLossResult ident = assemble(ref1, ref2, m1, m2, i1, i2, false);
  TotalLossResult swapped = assemble(ref2, ref1, m2, m1, i2, i1, false);
  const bool use_swap = swapped.value < ident.value;

  TotalLossResult res = use_swap
                            ? assemble(ref2, ref1, m2, m1, i2, i1, true)
                            : assemble(ref1, ref2, m1, m2, i1, i2, true);
  res.swapped = use_swap;
  return res;
}

MaskObjective::MaskObjective(const AudioClip& mix, const AudioClip& ref1,
                             const AudioClip& ref2, const TotalLossConfig& cfg)
    : cfg_(cfg), mix_(mix), ref1_(ref1), ref2_(ref2) {
  if (mix.samples.size() != ref1.samples.size() ||
      mix.samples.size() != ref2.samples.size())
    throw std::runtime_error("MaskObjective: length mismatch");
  mix_spec_ = stft(mix, cfg.stft);
  mix_mag_ = magnitude(mix_spec_);
  ref_mag1_ =
      power_compress(magnitude(stft(ref1, cfg.stft)), cfg.compression);
  ref_mag2_ =
      power_compress(magnitude(stft(ref2, cfg.stft)), cfg.compression);
  if (cfg.tau_domain == TauDomain::kCompressed) {
    i1_ = build_interference_mask(ref_mag1_, ref_mag2_, cfg.tau_max,
                                  cfg.tau_min);
    i2_ = build_interference_mask(ref_mag2_, ref_mag1_, cfg.tau_max,
                                  cfg.tau_min);
  } else {
    MagSpec r1 = magnitude(stft(ref1, cfg.stft));
    MagSpec r2 = magnitude(stft(ref2, cfg.stft));
    i1_ = build_interference_mask(r1, r2, cfg.tau_max, cfg.tau_min);
    i2_ = build_interference_mask(r2, r1, cfg.tau_max, cfg.tau_min);
  }
}

std::pair<AudioClip, AudioClip> MaskObjective::estimates(
    const std::vector<double>& logits1,
    const std::vector<double>& logits2) const {
  auto make = [&](const std::vector<double>& logits) {
    ComplexSpec s = mix_spec_;
    for (std::size_t i = 0; i < s.grid.size(); ++i)
      s.grid[i] *= sigmoid(logits[i]);
    AudioClip clip = istft(s);
    clip.samples.resize(mix_.samples.size(), 0.0);
    return clip;
  };
  return {make(logits1), make(logits2)};
}

MaskObjective::Eval MaskObjective::evaluate(const std::vector<double>& logits1,
                                            const std::vector<double>& logits2,
                                            bool want_grad,
                                            bool penalty_active) const {
  const std::size_t n = mix_spec_.grid.size();
  if (logits1.size() != n || logits2.size() != n)
    throw std::runtime_error("MaskObjective: logit grid size mismatch");

  const double p = cfg_.compression;
  const double lm = cfg_.weights.lambda_mag;
  const double lp = penalty_active ? cfg_.weights.lambda_penalty : 0.0;

  // The overlap-add normalization decays to ~window[n]^2 at the signal
  // edges, so edge samples of the resynthesized estimate amplify masked
  // spectrum perturbations by many orders of magnitude. The waveform term
  // therefore scores only the fully-overlapped interior (one window length
  // trimmed at each end) whenever the signal is long enough to afford it.
  const std::size_t len = mix_.samples.size();
  const auto wlen = static_cast<std::size_t>(cfg_.stft.window_len);
  const std::size_t edge = len > 3 * wlen ? wlen : 0;
  auto trim = [&](const AudioClip& c) {
    AudioClip t;
    t.sample_rate = c.sample_rate;
    t.samples.assign(c.samples.begin() + edge, c.samples.end() - edge);
    return t;
  };
  const AudioClip tref1 = trim(ref1_);
  const AudioClip tref2 = trim(ref2_);

  struct Side {
    std::vector<double> mask;     // sigmoid(logits)
    MagSpec mhat;                 // compressed estimated magnitude
    AudioClip est;
    ComplexSpec spec;
  };
  auto build = [&](const std::vector<double>& logits) {
    Side s;
    s.mask.resize(n);
    s.spec = mix_spec_;
    s.mhat.frames = mix_spec_.frames;
    s.mhat.bins = mix_spec_.bins;
    s.mhat.compression_exponent = p;
    s.mhat.grid.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      s.mask[i] = sigmoid(logits[i]);
      s.spec.grid[i] *= s.mask[i];
      s.mhat.grid[i] = std::pow(s.mask[i] * mix_mag_.grid[i], p);
    }
    s.est = istft(s.spec);
    s.est.samples.resize(mix_.samples.size(), 0.0);
    return s;
  };
  Side s1 = build(logits1);
  Side s2 = build(logits2);

  const AudioClip est1t = trim(s1.est);
  const AudioClip est2t = trim(s2.est);

  // utterance-level PIT on the total objective; tie keeps identity
  auto score = [&](const AudioClip& e, const AudioClip& r, const MagSpec& mh,
                   const MagSpec& rm, const InterferenceMask& im) {
    return snr_loss(e, r, cfg_.weights.eps).value +
           lm * mag_loss(mh, rm).value +
           lp * penalty_loss(mh, im, cfg_.weights.eps).value;
  };
  const double v_ident = score(est1t, tref1, s1.mhat, ref_mag1_, i1_) +
                         score(est2t, tref2, s2.mhat, ref_mag2_, i2_);
  const double v_swap = score(est1t, tref2, s1.mhat, ref_mag2_, i2_) +
                        score(est2t, tref1, s2.mhat, ref_mag1_, i1_);
  const bool swap = v_swap < v_ident;

  const AudioClip& r1 = swap ? tref2 : tref1;
  const AudioClip& r2 = swap ? tref1 : tref2;
  const MagSpec& rm1 = swap ? ref_mag2_ : ref_mag1_;
  const MagSpec& rm2 = swap ? ref_mag1_ : ref_mag2_;
  const InterferenceMask& im1 = swap ? i2_ : i1_;
  const InterferenceMask& im2 = swap ? i1_ : i2_;

  Eval ev;
  auto accumulate = [&](Side& s, const AudioClip& est_t, const AudioClip& r,
                        const MagSpec& rm, const InterferenceMask& im,
                        std::vector<double>& grad) {
    WaveLossResult snr = snr_loss(est_t, r, cfg_.weights.eps);
    SpecLossResult mg = mag_loss(s.mhat, rm);
    SpecLossResult pn = penalty_loss(s.mhat, im, cfg_.weights.eps);
    ev.snr_term += snr.value;
    ev.mag_term += mg.value;
    ev.penalty_term += pn.value;
    for (std::size_t i = 0; i < n; ++i)
      if (im.grid[i]) ev.masked_energy += s.mhat.grid[i] * s.mhat.grid[i];
    if (!want_grad) return;

    // SNR path: waveform grad (scattered back to full length) ->
    // spectrogram grad -> mask grad
    std::vector<double> wave_grad(len, 0.0);
    std::copy(snr.grad.begin(), snr.grad.end(), wave_grad.begin() + edge);
    ComplexSpec gs = istft_adjoint(wave_grad, s.spec);
    grad.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double gm = gs.grid[i].real() * mix_spec_.grid[i].real() +
                  gs.grid[i].imag() * mix_spec_.grid[i].imag();
      // magnitude paths: Mhat = (m * |S_mix|)^p
      const double mag_grad = lm * mg.grad[i] + lp * pn.grad[i];
      if (mag_grad != 0.0 && mix_mag_.grid[i] > 1e-300) {
        const double base = s.mask[i] * mix_mag_.grid[i];
        gm += mag_grad * p * std::pow(base, p - 1.0) * mix_mag_.grid[i];
      }
      grad[i] = gm * s.mask[i] * (1.0 - s.mask[i]);
    }
  };
  accumulate(s1, est1t, r1, rm1, im1, ev.grad1);
  accumulate(s2, est2t, r2, rm2, im2, ev.grad2);
  ev.value = ev.snr_term + lm * ev.mag_term + lp * ev.penalty_term;
  return ev;
}

std::vector<DemoStep> optimize_masks_demo(const AudioClip& mix,
                                          const AudioClip& ref1,
                                          const AudioClip& ref2,
                                          const DemoConfig& cfg) {
  MaskObjective obj(mix, ref1, ref2, cfg.loss);
  const std::size_t n = obj.frames() * obj.bins();
  std::vector<double> l1(n, 0.0), l2(n, 0.0);

  SegSnrConfig seg;
  seg.seg_s = cfg.seg_s;

  std::vector<DemoStep> traj;
  traj.reserve(cfg.steps + 1);
  for (std::size_t step = 0;; ++step) {
    const bool pen_on =
        cfg.loss.penalty_active && step >= cfg.penalty_from_step;
    const bool last = step == cfg.steps;
    MaskObjective::Eval ev = obj.evaluate(l1, l2, !last, pen_on);
    if (!std::isfinite(ev.value))
      throw std::runtime_error("optimize_masks_demo: diverged at step " +
                               std::to_string(step));
    DemoStep row;
    row.step = step;
    row.loss = ev.value;
    row.snr_term = ev.snr_term;
    row.mag_term = ev.mag_term;
    row.penalty_term = ev.penalty_term;
    row.masked_energy = ev.masked_energy;
    auto [e1, e2] = obj.estimates(l1, l2);
    // score the same fully-overlapped interior as the waveform loss term
    const auto wlen = static_cast<std::size_t>(cfg.loss.stft.window_len);
    const std::size_t edge = mix.samples.size() > 3 * wlen ? wlen : 0;
    auto trim = [&](const AudioClip& c) {
      AudioClip t;
      t.sample_rate = c.sample_rate;
      t.samples.assign(c.samples.begin() + edge, c.samples.end() - edge);
      return t;
    };
    row.ssnr_db = ssnr(trim(e1), trim(e2), trim(ref1), trim(ref2), seg);
    traj.push_back(row);
    if (last) break;
    kernels::axpy(-cfg.lr, ev.grad1.data(), l1.data(), n);
    kernels::axpy(-cfg.lr, ev.grad2.data(), l2.data(), n);
  }
  return traj;
}

void write_demo_csv(const std::string& path,
                    const std::vector<DemoStep>& trajectory) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write csv: " + path);
  f << "step,loss,snr_term,mag_term,penalty_term,masked_energy,ssnr_db\n";
  for (const auto& r : trajectory)
    f << r.step << ',' << r.loss << ',' << r.snr_term << ',' << r.mag_term
      << ',' << r.penalty_term << ',' << r.masked_energy << ',' << r.ssnr_db
      << '\n';
}

}  // namespace unmixx
