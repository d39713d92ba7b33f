#include "unmixx/audio.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "unmixx/kernels.hpp"

namespace unmixx {

void validate(const AudioClip& clip) {
  if (clip.sample_rate <= 0)
    throw std::runtime_error("AudioClip: sample_rate must be positive");
  for (double s : clip.samples)
    if (!std::isfinite(s))
      throw std::runtime_error("AudioClip: non-finite sample");
}

double rms(const AudioClip& clip) {
  if (clip.samples.empty()) return 0.0;
  return std::sqrt(kernels::sum_sq(clip.samples.data(), clip.samples.size()) /
                   static_cast<double>(clip.samples.size()));
}

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t rd_u16(const unsigned char* p) { return p[0] | (p[1] << 8); }

void wr_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
void wr_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open wav file: " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 44 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const unsigned char* hdr = data.data() + pos;
    std::uint32_t chunk_len = rd_u32(hdr + 4);
    const unsigned char* body = hdr + 8;
    if (pos + 8 + chunk_len > data.size())
      chunk_len = static_cast<std::uint32_t>(data.size() - pos - 8);
    if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_len >= 16) {
      format = rd_u16(body);
      channels = rd_u16(body + 2);
      rate = rd_u32(body + 4);
      bits = rd_u16(body + 14);
      if (format == 0xFFFE && chunk_len >= 40)  // WAVE_FORMAT_EXTENSIBLE
        format = rd_u16(body + 24);
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      pcm = body;
      pcm_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }
  if (!pcm || channels == 0 || rate == 0)
    throw std::runtime_error("missing fmt/data chunk: " + path);

  std::vector<double> interleaved;
  if (format == 1 && bits == 16) {
    std::size_t n = pcm_len / 2;
    interleaved.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::int16_t v =
          static_cast<std::int16_t>(pcm[2 * i] | (pcm[2 * i + 1] << 8));
      interleaved[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    std::size_t n = pcm_len / 4;
    interleaved.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u = rd_u32(pcm + 4 * i);
      float v;
      std::memcpy(&v, &u, 4);
      interleaved[i] = v;
    }
  } else {
    throw std::runtime_error("unsupported wav format (want PCM16 or float32): " +
                             path);
  }

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  if (channels == 1) {
    clip.samples = std::move(interleaved);
  } else {
    std::cerr << "warning: down-mixing " << channels << " channels to mono: "
              << path << "\n";
    std::size_t frames = interleaved.size() / channels;
    clip.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
      double acc = 0.0;
      for (std::uint16_t c = 0; c < channels; ++c)
        acc += interleaved[i * channels + c];
      clip.samples[i] = acc / channels;
    }
  }
  validate(clip);
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip,
               WavFormat format) {
  validate(clip);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write wav file: " + path);

  const bool f32 = format == WavFormat::kFloat32;
  const std::uint16_t bits = f32 ? 32 : 16;
  const std::uint32_t byte_rate = clip.sample_rate * bits / 8;
  const std::uint32_t data_len =
      static_cast<std::uint32_t>(clip.samples.size() * bits / 8);

  f.write("RIFF", 4);
  wr_u32(f, 36 + data_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  wr_u32(f, 16);
  wr_u16(f, f32 ? 3 : 1);
  wr_u16(f, 1);
  wr_u32(f, static_cast<std::uint32_t>(clip.sample_rate));
  wr_u32(f, byte_rate);
  wr_u16(f, bits / 8);
  wr_u16(f, bits);
  f.write("data", 4);
  wr_u32(f, data_len);

  if (f32) {
    for (double s : clip.samples) {
      float v = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      wr_u32(f, u);
    }
  } else {
    for (double s : clip.samples) {
      double c = s < -1.0 ? -1.0 : (s > 1.0 ? 1.0 : s);
      auto v = static_cast<std::int16_t>(std::lrint(c * 32767.0));
      wr_u16(f, static_cast<std::uint16_t>(v));
    }
  }
  if (!f) throw std::runtime_error("short write: " + path);
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  validate(clip);
  if (target_rate <= 0)
    throw std::runtime_error("resample: target rate must be positive");
  if (target_rate == clip.sample_rate) return clip;

  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  const std::size_t out_len =
      static_cast<std::size_t>(std::llround(clip.samples.size() * ratio));

  // Windowed-sinc interpolation; cutoff at the lower Nyquist.
  const double cutoff = 0.5 * std::min(1.0, ratio);
  const int half_taps = 32;
  const double support = half_taps / std::min(1.0, ratio);

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  const auto& x = clip.samples;
  const auto n = static_cast<std::ptrdiff_t>(x.size());

  for (std::size_t m = 0; m < out_len; ++m) {
    const double center = static_cast<double>(m) / ratio;
    const auto lo =
        static_cast<std::ptrdiff_t>(std::ceil(center - support));
    const auto hi =
        static_cast<std::ptrdiff_t>(std::floor(center + support));
    double acc = 0.0;
    for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(lo, 0);
         k <= std::min(hi, n - 1); ++k) {
      const double u = static_cast<double>(k) - center;
      double sinc = (std::abs(u) < 1e-12)
                        ? 2.0 * cutoff
                        : std::sin(2.0 * M_PI * cutoff * u) / (M_PI * u);
      // Hann window over the tap support
      const double t = u * std::min(1.0, ratio);
      const double w = 0.5 + 0.5 * std::cos(M_PI * t / half_taps);
      acc += x[k] * sinc * w;
    }
    out.samples[m] = acc;
  }
  return out;
}

}  // namespace unmixx
