#include "unmixx/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace unmixx {

namespace {

// FFTW plan creation/destruction mutates global planner state and is not
// thread-safe; execution on private buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Fft {
 public:
  explicit Fft(int n) : n_(n) {
    real_ = fftw_alloc_real(n);
    cplx_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_r2c_1d(n, real_, cplx_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n, cplx_, real_, FFTW_ESTIMATE);
    if (!fwd_ || !inv_) throw std::runtime_error("fftw plan creation failed");
  }
  ~Fft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(real_);
    fftw_free(cplx_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }
  double* real_buf() { return real_; }
  fftw_complex* cplx_buf() { return cplx_; }

  void forward() { fftw_execute(fwd_); }
  // unnormalized; overwrites the complex buffer
  void inverse() { fftw_execute(inv_); }

 private:
  int n_;
  double* real_;
  fftw_complex* cplx_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

}  // namespace

void StftConfig::check() const {
  if (window_len <= 0 || hop <= 0 || fft_size <= 0)
    throw std::runtime_error("StftConfig: sizes must be positive");
  if (hop > window_len || window_len > fft_size)
    throw std::runtime_error("StftConfig: need hop <= window_len <= fft_size");
}

std::vector<double> make_window(WindowKind kind, int length) {
  std::vector<double> w(length, 1.0);
  if (kind == WindowKind::kHann)
    for (int n = 0; n < length; ++n)
      w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / length);
  return w;
}

AudioClip pad_for_centered(const AudioClip& clip, const StftConfig& cfg) {
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  const std::size_t half = cfg.window_len / 2;
  out.samples.assign(half, 0.0);
  out.samples.insert(out.samples.end(), clip.samples.begin(),
                     clip.samples.end());
  out.samples.insert(out.samples.end(), half, 0.0);
  return out;
}

ComplexSpec stft(const AudioClip& clip, const StftConfig& cfg) {
  cfg.check();
  validate(clip);
  const AudioClip& x = cfg.centered ? pad_for_centered(clip, cfg) : clip;
  if (x.samples.size() < static_cast<std::size_t>(cfg.window_len))
    throw std::runtime_error("stft: input too short");

  const std::size_t frames =
      1 + (x.samples.size() - cfg.window_len) / cfg.hop;
  const auto window = make_window(cfg.window, cfg.window_len);

  ComplexSpec spec;
  spec.frames = frames;
  spec.bins = static_cast<std::size_t>(cfg.bins());
  spec.config = cfg;
  spec.sample_rate = clip.sample_rate;
  spec.grid.resize(frames * spec.bins);

  Fft fft(cfg.fft_size);
  for (std::size_t t = 0; t < frames; ++t) {
    double* buf = fft.real_buf();
    const std::size_t off = t * cfg.hop;
    for (int n = 0; n < cfg.window_len; ++n)
      buf[n] = window[n] * x.samples[off + n];
    for (int n = cfg.window_len; n < cfg.fft_size; ++n) buf[n] = 0.0;
    fft.forward();
    const fftw_complex* out = fft.cplx_buf();
    for (std::size_t f = 0; f < spec.bins; ++f)
      spec.at(t, f) = {out[f][0], out[f][1]};
  }
  return spec;
}

namespace {

// squared-window overlap-add normalization shared by istft and its adjoint
std::vector<double> ola_norm(const StftConfig& cfg, std::size_t frames,
                             const std::vector<double>& window) {
  const std::size_t len = cfg.window_len + (frames - 1) * cfg.hop;
  std::vector<double> norm(len, 0.0);
  for (std::size_t t = 0; t < frames; ++t)
    for (int n = 0; n < cfg.window_len; ++n)
      norm[t * cfg.hop + n] += window[n] * window[n];
  return norm;
}

}  // namespace

AudioClip istft(const ComplexSpec& spec) {
  const StftConfig& cfg = spec.config;
  cfg.check();
  AudioClip out;
  out.sample_rate = spec.sample_rate;
  if (spec.frames == 0) return out;
  if (spec.bins != static_cast<std::size_t>(cfg.bins()))
    throw std::runtime_error("istft: bin count does not match fft_size");

  const auto window = make_window(cfg.window, cfg.window_len);
  const auto norm = ola_norm(cfg, spec.frames, window);
  out.samples.assign(norm.size(), 0.0);

  Fft fft(cfg.fft_size);
  const double inv_n = 1.0 / cfg.fft_size;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    fftw_complex* buf = fft.cplx_buf();
    for (std::size_t f = 0; f < spec.bins; ++f) {
      buf[f][0] = spec.at(t, f).real();
      buf[f][1] = spec.at(t, f).imag();
    }
    fft.inverse();
    const double* frame = fft.real_buf();
    const std::size_t off = t * cfg.hop;
    for (int n = 0; n < cfg.window_len; ++n)
      out.samples[off + n] += window[n] * frame[n] * inv_n;
  }
  for (std::size_t m = 0; m < out.samples.size(); ++m)
    out.samples[m] = norm[m] > 1e-12 ? out.samples[m] / norm[m] : 0.0;
  return out;
}

MagSpec magnitude(const ComplexSpec& spec) {
  MagSpec mag;
  mag.frames = spec.frames;
  mag.bins = spec.bins;
  mag.compression_exponent = 1.0;
  mag.grid.resize(spec.grid.size());
  for (std::size_t i = 0; i < spec.grid.size(); ++i)
    mag.grid[i] = std::abs(spec.grid[i]);
  return mag;
}

MagSpec power_compress(const MagSpec& mag, double p) {
  if (p <= 0.0 || p > 1.0)
    throw std::runtime_error("power_compress: exponent must be in (0, 1]");
  if (mag.compression_exponent != 1.0)
    throw std::runtime_error("power_compress: input already compressed");
  MagSpec out = mag;
  out.compression_exponent = p;
  for (double& v : out.grid) v = std::pow(v, p);
  return out;
}

std::vector<double> stft_adjoint(const ComplexSpec& grad_spec,
                                 std::size_t signal_len) {
  const StftConfig& cfg = grad_spec.config;
  cfg.check();
  const auto window = make_window(cfg.window, cfg.window_len);
  std::vector<double> grad(signal_len, 0.0);
  const std::size_t offset = cfg.centered ? cfg.window_len / 2 : 0;

  Fft fft(cfg.fft_size);
  const std::size_t nyquist = grad_spec.bins - 1;
  for (std::size_t t = 0; t < grad_spec.frames; ++t) {
    fftw_complex* buf = fft.cplx_buf();
    for (std::size_t f = 0; f < grad_spec.bins; ++f) {
      // halve the doubled interior bins so c2r reproduces the one-sided sum
      const double c = (f == 0 || f == nyquist) ? 1.0 : 0.5;
      buf[f][0] = c * grad_spec.at(t, f).real();
      buf[f][1] = c * grad_spec.at(t, f).imag();
    }
    buf[0][1] = 0.0;
    buf[nyquist][1] = 0.0;
    fft.inverse();
    const double* y = fft.real_buf();
    const std::size_t off = t * cfg.hop;
    for (int n = 0; n < cfg.window_len; ++n) {
      const std::ptrdiff_t m =
          static_cast<std::ptrdiff_t>(off + n) -
          static_cast<std::ptrdiff_t>(offset);
      if (m >= 0 && m < static_cast<std::ptrdiff_t>(signal_len))
        grad[m] += window[n] * y[n];
    }
  }
  return grad;
}

ComplexSpec istft_adjoint(const std::vector<double>& grad_wave,
                          const ComplexSpec& like) {
  const StftConfig& cfg = like.config;
  cfg.check();
  const auto window = make_window(cfg.window, cfg.window_len);
  const auto norm = ola_norm(cfg, like.frames, window);

  ComplexSpec grad;
  grad.frames = like.frames;
  grad.bins = like.bins;
  grad.config = cfg;
  grad.sample_rate = like.sample_rate;
  grad.grid.assign(like.grid.size(), {0.0, 0.0});

  Fft fft(cfg.fft_size);
  const double inv_n = 1.0 / cfg.fft_size;
  const std::size_t nyquist = like.bins - 1;
  for (std::size_t t = 0; t < like.frames; ++t) {
    double* buf = fft.real_buf();
    const std::size_t off = t * cfg.hop;
    for (int n = 0; n < cfg.window_len; ++n) {
      const std::size_t m = off + n;
      const double g = (m < grad_wave.size() && norm[m] > 1e-12)
                           ? grad_wave[m] / norm[m]
                           : 0.0;
      buf[n] = g * window[n] * inv_n;
    }
    for (int n = cfg.window_len; n < cfg.fft_size; ++n) buf[n] = 0.0;
    fft.forward();
    const fftw_complex* out = fft.cplx_buf();
    for (std::size_t f = 0; f < like.bins; ++f) {
      const double c = (f == 0 || f == nyquist) ? 1.0 : 2.0;
      grad.at(t, f) = {c * out[f][0], c * out[f][1]};
    }
  }
  return grad;
}

}  // namespace unmixx
