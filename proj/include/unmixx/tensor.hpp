#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace unmixx {

// Dense real tensor, channels (N) x sub-bands (K) x frames (T).
// Channel-major layout: data[(n*K + k)*T + t].
struct FeatureTensor {
  std::vector<double> data;
  std::size_t channels = 0;  // N
  std::size_t bands = 0;     // K
  std::size_t frames = 0;    // T

  FeatureTensor() = default;
  FeatureTensor(std::size_t n, std::size_t k, std::size_t t)
      : data(n * k * t, 0.0), channels(n), bands(k), frames(t) {}

  double& at(std::size_t n, std::size_t k, std::size_t t) {
    return data[(n * bands + k) * frames + t];
  }
  double at(std::size_t n, std::size_t k, std::size_t t) const {
    return data[(n * bands + k) * frames + t];
  }

  bool same_shape(const FeatureTensor& o) const {
    return channels == o.channels && bands == o.bands && frames == o.frames;
  }
};

inline void require_shape(bool ok, const char* what) {
  if (!ok) throw std::runtime_error(what);
}

}  // namespace unmixx
