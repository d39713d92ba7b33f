#pragma once

#include <string>
#include <vector>

namespace unmixx {

// Mono waveform. Samples are dimensionless amplitudes, nominally in
// [-1, 1], stored as double precision regardless of the file format.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

// Throws std::runtime_error on malformed input or non-finite samples.
void validate(const AudioClip& clip);

double rms(const AudioClip& clip);

enum class WavFormat { kPcm16, kFloat32 };

// PCM16 and float32 WAV only. Stereo inputs are down-mixed by averaging
// (a warning goes to stderr).
AudioClip read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioClip& clip,
               WavFormat format = WavFormat::kFloat32);

// Band-limited (windowed-sinc) resampling. Returns the input unchanged
// when the rates already match.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace unmixx
