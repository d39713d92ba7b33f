#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "unmixx/audio.hpp"

namespace unmixx {

enum class WindowKind { kHann, kRect };

struct StftConfig {
  int window_len = 960;
  int hop = 240;
  int fft_size = 960;
  WindowKind window = WindowKind::kHann;
  bool centered = false;

  int bins() const { return fft_size / 2 + 1; }
  void check() const;  // throws on violated invariants
};

// Complex STFT grid, frames (T) x bins (F). Row-major, frame-major.
struct ComplexSpec {
  std::vector<std::complex<double>> grid;
  std::size_t frames = 0;
  std::size_t bins = 0;
  StftConfig config;
  int sample_rate = 0;

  std::complex<double>& at(std::size_t t, std::size_t f) {
    return grid[t * bins + f];
  }
  const std::complex<double>& at(std::size_t t, std::size_t f) const {
    return grid[t * bins + f];
  }
};

// Non-negative magnitude grid; compression_exponent 1.0 means raw.
struct MagSpec {
  std::vector<double> grid;
  std::size_t frames = 0;
  std::size_t bins = 0;
  double compression_exponent = 1.0;

  double& at(std::size_t t, std::size_t f) { return grid[t * bins + f]; }
  double at(std::size_t t, std::size_t f) const { return grid[t * bins + f]; }
};

std::vector<double> make_window(WindowKind kind, int length);

AudioClip pad_for_centered(const AudioClip& clip, const StftConfig& cfg);

ComplexSpec stft(const AudioClip& clip, const StftConfig& cfg);
AudioClip istft(const ComplexSpec& spec);

MagSpec magnitude(const ComplexSpec& spec);
MagSpec power_compress(const MagSpec& mag, double p);

// Adjoint of the (linear) analysis transform: given dL/dS on the one-sided
// grid, accumulate dL/dx. Used by the loss gradient chains; verified by
// finite differences in the tests.
std::vector<double> stft_adjoint(const ComplexSpec& grad_spec,
                                 std::size_t signal_len);

// Adjoint of the synthesis transform: given dL/dx of the istft output,
// return dL/dS.
ComplexSpec istft_adjoint(const std::vector<double>& grad_wave,
                          const ComplexSpec& like);

}  // namespace unmixx
