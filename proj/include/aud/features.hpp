#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "aud/fft.hpp"
#include "aud/framing.hpp"
#include "aud/types.hpp"

namespace aud {

constexpr double kLogFloor = 1e-10;  // filterbank log floor, keeps silence finite

// Per-frame sum of squared windowed samples.
inline FeatureSequence short_time_energy(const AudioBuffer& audio,
                                         const FrameConfig& cfg) {
  cfg.validate();
  require(audio.sample_rate > 0, ErrorCode::config_error, "sample rate not set");
  const std::size_t frame = cfg.frame_samples(audio.sample_rate);
  const std::size_t hop = cfg.hop_samples(audio.sample_rate);
  const std::size_t T = num_frames(audio.samples.size(), frame, hop);
  require(T >= 1, ErrorCode::empty_input,
          "audio shorter than one frame: " + audio.utterance_id);

  const std::vector<double> x = cfg.pre_emphasis > 0.0
                                    ? pre_emphasize(audio.samples, cfg.pre_emphasis)
                                    : audio.samples;
  const std::vector<double> w = window_weights(cfg.window, frame);

  FeatureSequence out;
  out.kind = FeatureKind::energy;
  out.frames = Matrix(T, 1);
  out.frame_times.resize(T);
  for (std::size_t m = 0; m < T; ++m) {
    double e = 0.0;
    const std::size_t off = m * hop;
    for (std::size_t n = 0; n < frame; ++n) {
      const double v = w[n] * x[off + n];
      e += v * v;
    }
    out.frames(m, 0) = e;
    out.frame_times[m] = frame_center_time(m, frame, hop, audio.sample_rate);
  }
  return out;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank evaluated at FFT bin frequencies.
struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_fft = 0;
  int sample_rate = 0;
  std::vector<double> center_hz;  // n_mels filter centers
  Matrix weights;                 // n_mels x (n_fft/2 + 1)

  MelFilterbank() = default;
  MelFilterbank(std::size_t n_mels_, std::size_t n_fft_, int sample_rate_)
      : n_mels(n_mels_), n_fft(n_fft_), sample_rate(sample_rate_) {
    require(n_mels >= 1, ErrorCode::config_error, "filterbank needs n_mels >= 1");
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
      edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
    center_hz.assign(edges.begin() + 1, edges.end() - 1);

    const std::size_t bins = n_fft / 2 + 1;
    weights = Matrix(n_mels, bins);
    for (std::size_t b = 0; b < n_mels; ++b) {
      const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
      for (std::size_t k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * sample_rate / n_fft;
        double w = 0.0;
        if (f > lo && f < hi)
          w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
        weights(b, k) = w;
      }
    }
  }

  std::vector<double> apply(const std::vector<double>& magnitude) const {
    std::vector<double> out(n_mels, 0.0);
    for (std::size_t b = 0; b < n_mels; ++b) {
      double acc = 0.0;
      for (std::size_t k = 0; k < magnitude.size(); ++k)
        acc += weights(b, k) * magnitude[k];
      out[b] = acc;
    }
    return out;
  }
};

// Orthonormal DCT-II over the filterbank axis, keeping n_ceps coefficients.
inline std::vector<double> dct2(const std::vector<double>& v, std::size_t n_ceps) {
  const std::size_t M = v.size();
  const double pi = 3.14159265358979323846;
  std::vector<double> out(n_ceps, 0.0);
  for (std::size_t k = 0; k < n_ceps; ++k) {
    double acc = 0.0;
    for (std::size_t m = 0; m < M; ++m)
      acc += v[m] * std::cos(pi * k * (m + 0.5) / M);
    out[k] = acc * (k == 0 ? std::sqrt(1.0 / M) : std::sqrt(2.0 / M));
  }
  return out;
}

// Pre-emphasis -> window -> magnitude DFT -> mel filterbank -> log -> DCT-II.
inline FeatureSequence mfcc(const AudioBuffer& audio, const FrameConfig& cfg,
                            std::size_t n_mels, std::size_t n_ceps) {
  cfg.validate();
  require(n_mels >= 1, ErrorCode::config_error, "mfcc requires n_mels >= 1");
  require(n_ceps >= 1 && n_ceps <= n_mels, ErrorCode::config_error,
          "mfcc requires 1 <= n_ceps <= n_mels");
  const std::size_t frame = cfg.frame_samples(audio.sample_rate);
  const std::size_t hop = cfg.hop_samples(audio.sample_rate);
  const std::size_t T = num_frames(audio.samples.size(), frame, hop);
  require(T >= 1, ErrorCode::empty_input,
          "audio shorter than one frame: " + audio.utterance_id);

  const std::vector<double> x = cfg.pre_emphasis > 0.0
                                    ? pre_emphasize(audio.samples, cfg.pre_emphasis)
                                    : audio.samples;
  const std::vector<double> w = window_weights(cfg.window, frame);
  const std::size_t n_fft = next_pow2(frame);
  const MelFilterbank fbank(n_mels, n_fft, audio.sample_rate);

  FeatureSequence out;
  out.kind = FeatureKind::mfcc;
  out.frames = Matrix(T, n_ceps);
  out.frame_times.resize(T);
  std::vector<double> buf(frame);
  for (std::size_t m = 0; m < T; ++m) {
    const std::size_t off = m * hop;
    for (std::size_t n = 0; n < frame; ++n) buf[n] = w[n] * x[off + n];
    std::vector<double> mag = magnitude_spectrum(buf, n_fft);
    std::vector<double> mel = fbank.apply(mag);
    for (double& e : mel) e = std::log(std::max(e, kLogFloor));
    std::vector<double> ceps = dct2(mel, n_ceps);
    for (std::size_t c = 0; c < n_ceps; ++c) out.frames(m, c) = ceps[c];
    out.frame_times[m] = frame_center_time(m, frame, hop, audio.sample_rate);
  }
  return out;
}

// Regression-formula deltas over +/-2 frames with edge replication. Appends
// one derivative order per call: D -> 2D.
inline Matrix append_deltas(const Matrix& feats) {
  const std::size_t T = feats.rows(), D = feats.cols();
  Matrix out(T, 2 * D);
  const int win = 2;
  double denom = 0.0;
  for (int n = 1; n <= win; ++n) denom += 2.0 * n * n;
  auto clamp_t = [&](long t) {
    return static_cast<std::size_t>(std::clamp<long>(t, 0, static_cast<long>(T) - 1));
  };
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t d = 0; d < D; ++d) {
      out(t, d) = feats(t, d);
      double acc = 0.0;
      for (int n = 1; n <= win; ++n)
        acc += n * (feats(clamp_t(static_cast<long>(t) + n), d) -
                    feats(clamp_t(static_cast<long>(t) - n), d));
      out(t, D + d) = acc / denom;
    }
  }
  return out;
}

// Static + delta + delta-delta.
inline FeatureSequence with_deltas(const FeatureSequence& fs) {
  const std::size_t D = fs.dim();
  Matrix d1 = append_deltas(fs.frames);                       // D -> 2D
  Matrix delta_only(fs.size(), D);
  for (std::size_t t = 0; t < fs.size(); ++t)
    for (std::size_t d = 0; d < D; ++d) delta_only(t, d) = d1(t, D + d);
  Matrix d2 = append_deltas(delta_only);                      // delta -> delta+ddelta
  FeatureSequence out;
  out.kind = fs.kind;
  out.frame_times = fs.frame_times;
  out.frames = Matrix(fs.size(), 3 * D);
  for (std::size_t t = 0; t < fs.size(); ++t)
    for (std::size_t d = 0; d < D; ++d) {
      out.frames(t, d) = fs.frames(t, d);
      out.frames(t, D + d) = d1(t, D + d);
      out.frames(t, 2 * D + d) = d2(t, D + d);
    }
  return out;
}

// Per-utterance cepstral mean subtraction.
inline void cepstral_mean_subtract(FeatureSequence& fs) {
  const std::size_t T = fs.size(), D = fs.dim();
  if (T == 0) return;
  std::vector<double> mean(D, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) mean[d] += fs.frames(t, d);
  for (double& m : mean) m /= static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) fs.frames(t, d) -= mean[d];
}

}  // namespace aud
