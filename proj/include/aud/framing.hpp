#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "aud/types.hpp"

namespace aud {

enum class Window { rectangular, hamming };

struct FrameConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double pre_emphasis = 0.97;
  Window window = Window::hamming;

  void validate() const {
    require(frame_ms > 0 && hop_ms > 0 && hop_ms <= frame_ms, ErrorCode::config_error,
            "frame config requires 0 < hop <= frame length");
    require(pre_emphasis >= 0.0 && pre_emphasis < 1.0, ErrorCode::config_error,
            "pre-emphasis coefficient must be in [0, 1)");
  }

  std::size_t frame_samples(int sample_rate) const {
    return static_cast<std::size_t>(std::lround(frame_ms * sample_rate / 1000.0));
  }
  std::size_t hop_samples(int sample_rate) const {
    return static_cast<std::size_t>(std::lround(hop_ms * sample_rate / 1000.0));
  }
};

inline std::size_t num_frames(std::size_t n_samples, std::size_t frame, std::size_t hop) {
  return n_samples < frame ? 0 : (n_samples - frame) / hop + 1;
}

inline std::vector<double> window_weights(Window w, std::size_t n) {
  std::vector<double> out(n, 1.0);
  if (w == Window::hamming && n > 1) {
    const double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < n; ++i)
      out[i] = 0.54 - 0.46 * std::cos(2.0 * pi * i / (n - 1));
  }
  return out;
}

// y[n] = x[n] - a*x[n-1]; the first sample uses x[-1] = x[0].
inline std::vector<double> pre_emphasize(const std::vector<double>& x, double a) {
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  y[0] = x[0] - a * x[0];
  for (std::size_t n = 1; n < x.size(); ++n) y[n] = x[n] - a * x[n - 1];
  return y;
}

// Center time (seconds) of frame m.
inline double frame_center_time(std::size_t m, std::size_t frame, std::size_t hop,
                                int sample_rate) {
  return (static_cast<double>(m * hop) + frame / 2.0) / sample_rate;
}

}  // namespace aud
