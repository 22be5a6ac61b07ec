#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "aud/features.hpp"
#include "aud/framing.hpp"
#include "aud/types.hpp"

namespace aud {

struct GroupDelayConfig {
  int wsf = 16;                        // window scale factor: causal window = M/wsf
  double inverse_energy_floor = 0.01;  // epsilon in R = 1/(E + eps*max(E))
  double min_segment_ms = 50.0;
  double silence_percentile = 5.0;     // frame-energy percentile for silence label
  double silence_energy_floor = 1e-10; // absolute floor; digital silence falls here
  double gd_delta = 1e-12;             // group-delay denominator guard
  double tau_floor = 0.1;              // minimum peak height (frames); near-flat
                                       // contours produce only numerical ripple

  void validate() const {
    require(wsf >= 1, ErrorCode::config_error, "wsf must be >= 1");
    require(inverse_energy_floor > 0.0, ErrorCode::config_error,
            "inverse energy floor must be > 0");
    require(min_segment_ms > 0.0, ErrorCode::config_error,
            "minimum segment duration must be > 0");
    require(silence_percentile >= 0.0 && silence_percentile <= 100.0,
            ErrorCode::config_error, "silence percentile must be in [0, 100]");
  }
};

// Inverted, max-normalized contour: R[m] = 1 / (E[m]/(eps*max E) + 1). This is
// the spectral-magnitude surrogate; energy valleys become peaks, and the value
// depends only on E/max(E) so audio gain cancels exactly.
inline std::vector<double> inverse_energy_contour(const std::vector<double>& energy,
                                                  double eps) {
  const double emax = *std::max_element(energy.begin(), energy.end());
  require(emax > 0.0, ErrorCode::degenerate_input, "all-zero energy contour");
  std::vector<double> r(energy.size());
  for (std::size_t m = 0; m < energy.size(); ++m)
    r[m] = 1.0 / (energy[m] / (eps * emax) + 1.0);
  return r;
}

// Treats `magnitude` (length M) as the half spectrum of a real even sequence:
// extends symmetrically to length 2M, inverse-DFTs, and keeps the causal
// window n in [0, max(2, M/wsf)), zeroing the rest. The kept span is shaped by
// a half-Hann lifter; a rectangular cut rings (Dirichlet sidelobes) and the
// ripples show up as spurious group-delay peaks. Returns the length-2M signal.
inline std::vector<double> min_phase_signal(const std::vector<double>& magnitude,
                                            int wsf) {
  const std::size_t M = magnitude.size();
  require(M >= 4, ErrorCode::empty_input, "contour must have at least 4 frames");
  const std::size_t keep =
      std::max<std::size_t>(2, M / static_cast<std::size_t>(std::max(wsf, 1)));
  const double pi = 3.14159265358979323846;

  // Even extension: R'[0..M-1] = R, R'[M] = R[M-1], R'[2M-k] = R[k].
  // c[n] = (1/2M) * [R'[0] + 2*sum_{k=1..M-1} R[k] cos(pi k n / M) + R'[M] cos(pi n)]
  std::vector<double> x(2 * M, 0.0);
  for (std::size_t n = 0; n < keep; ++n) {
    double acc = magnitude[0];
    for (std::size_t k = 1; k < M; ++k)
      acc += 2.0 * magnitude[k] * std::cos(pi * static_cast<double>(k * n) / M);
    acc += magnitude[M - 1] * std::cos(pi * static_cast<double>(n));
    x[n] = acc / static_cast<double>(2 * M) *
           (0.5 * (1.0 + std::cos(pi * static_cast<double>(n) / keep)));
  }
  return x;
}

// tau[k] = (Xr*Yr + Xi*Yi) / (Xr^2 + Xi^2 + delta) with X = DFT(x) and
// Y = DFT(n*x[n]), evaluated over the first n_bins bins of the full-length
// DFT. x is sparse (causal window), so direct summation is used.
inline std::vector<double> group_delay_of(const std::vector<double>& x,
                                          std::size_t n_bins, double delta) {
  const std::size_t N = x.size();
  std::size_t nz = 0;  // one past the last nonzero sample
  for (std::size_t n = 0; n < N; ++n)
    if (x[n] != 0.0) nz = n + 1;
  const double pi = 3.14159265358979323846;
  std::vector<double> tau(n_bins, 0.0);
  for (std::size_t k = 0; k < n_bins; ++k) {
    double xr = 0.0, xi = 0.0, yr = 0.0, yi = 0.0;
    for (std::size_t n = 0; n < nz; ++n) {
      const double ang = -2.0 * pi * static_cast<double>(k) * n / N;
      const double c = std::cos(ang), s = std::sin(ang);
      xr += x[n] * c;
      xi += x[n] * s;
      yr += n * x[n] * c;
      yi += n * x[n] * s;
    }
    tau[k] = (xr * yr + xi * yi) / (xr * xr + xi * xi + delta);
  }
  return tau;
}

// Full chain on an energy contour: invert, build the minimum-phase signal,
// return its group delay over the first M bins. Peaks of tau mark energy
// valleys.
inline std::vector<double> min_phase_group_delay(const FeatureSequence& contour,
                                                 const GroupDelayConfig& cfg) {
  cfg.validate();
  require(contour.kind == FeatureKind::energy && contour.dim() == 1,
          ErrorCode::config_error, "group delay expects an energy contour");
  const std::size_t M = contour.size();
  require(M >= 4, ErrorCode::empty_input, "contour must have at least 4 frames");
  std::vector<double> energy(M);
  for (std::size_t m = 0; m < M; ++m) {
    energy[m] = contour.frames(m, 0);
    require(energy[m] >= 0.0, ErrorCode::config_error, "energy must be non-negative");
  }
  const std::vector<double> r = inverse_energy_contour(energy, cfg.inverse_energy_floor);
  const std::vector<double> x = min_phase_signal(r, cfg.wsf);
  return group_delay_of(x, M, cfg.gd_delta);
}

// A tau maximum qualifies as a boundary if it exceeds max(mean + 0.1*std,
// floor) and is the largest value in a +/-half_window neighborhood (leftmost
// wins on flat plateaus). Endpoints are excluded.
inline std::vector<std::size_t> pick_peaks(const std::vector<double>& tau,
                                           std::size_t half_window,
                                           double floor = 0.0) {
  const std::size_t M = tau.size();
  if (M < 3) return {};
  const double mean = std::accumulate(tau.begin(), tau.end(), 0.0) / M;
  double var = 0.0;
  for (double t : tau) var += (t - mean) * (t - mean);
  var /= M;
  const double threshold = std::max(mean + 0.1 * std::sqrt(var), floor);

  std::vector<std::size_t> peaks;
  const std::size_t w = std::max<std::size_t>(1, half_window);
  for (std::size_t k = 1; k + 1 < M; ++k) {
    if (tau[k] <= threshold) continue;
    const std::size_t lo = k > w ? k - w : 0;
    const std::size_t hi = std::min(M - 1, k + w);
    bool is_max = true;
    for (std::size_t j = lo; j <= hi && is_max; ++j) {
      if (j < k && tau[j] >= tau[k]) is_max = false;   // strictly above the left side
      if (j > k && tau[j] > tau[k]) is_max = false;    // at least as high as the right
    }
    if (is_max) peaks.push_back(k);
  }
  return peaks;
}

namespace detail {

// Linear-interpolation percentile of an unsorted sample.
inline double percentile(std::vector<double> v, double pct) {
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  const double pos = pct / 100.0 * static_cast<double>(v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(i);
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

}  // namespace detail

// Unsupervised syllable-like segmentation. Boundaries are group-delay peaks of
// the inverted short-time energy; candidate segments below the per-utterance
// energy percentile are labeled silence; syllable segments shorter than the
// minimum duration are merged into the neighbor across their lower boundary.
// The output partitions [0, duration] exactly.
inline std::vector<Segment> segment_syllables(const AudioBuffer& audio,
                                              const FrameConfig& fcfg,
                                              const GroupDelayConfig& gcfg) {
  gcfg.validate();
  const FeatureSequence ste = short_time_energy(audio, fcfg);
  const std::size_t M = ste.size();
  const double duration = audio.duration();
  std::vector<double> energy(M);
  for (std::size_t m = 0; m < M; ++m) energy[m] = ste.frames(m, 0);

  const double emax = *std::max_element(energy.begin(), energy.end());
  if (emax <= gcfg.silence_energy_floor || M < 4) {
    Segment whole{audio.utterance_id, 0.0, duration,
                  emax <= gcfg.silence_energy_floor ? SegmentKind::silence
                                                    : SegmentKind::syllable};
    return {whole};
  }

  const std::vector<double> tau = min_phase_group_delay(ste, gcfg);
  const double frames_per_ms = 1.0 / fcfg.hop_ms;
  const std::size_t min_seg_frames = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(gcfg.min_segment_ms * frames_per_ms)));
  const std::vector<std::size_t> peaks =
      pick_peaks(tau, min_seg_frames / 2, gcfg.tau_floor);

  // Boundary times at frame centers, strictly inside (0, duration).
  std::vector<double> cuts;
  for (std::size_t k : peaks) {
    const double t = ste.frame_times[k];
    if (t > 0.0 && t < duration && (cuts.empty() || t > cuts.back())) cuts.push_back(t);
  }

  std::vector<Segment> segs;
  double prev = 0.0;
  for (double c : cuts) {
    segs.push_back({audio.utterance_id, prev, c, SegmentKind::syllable});
    prev = c;
  }
  segs.push_back({audio.utterance_id, prev, duration, SegmentKind::syllable});

  // Silence labeling against the frame-energy percentile.
  const double threshold = detail::percentile(energy, gcfg.silence_percentile);
  for (Segment& s : segs) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t m = 0; m < M; ++m)
      if (ste.frame_times[m] >= s.start && ste.frame_times[m] < s.end) {
        acc += energy[m];
        ++count;
      }
    if (count == 0) {  // segment narrower than a hop: use the nearest frame
      std::size_t nearest = 0;
      double best = 1e300;
      const double mid = 0.5 * (s.start + s.end);
      for (std::size_t m = 0; m < M; ++m) {
        const double d = std::abs(ste.frame_times[m] - mid);
        if (d < best) { best = d; nearest = m; }
      }
      acc = energy[nearest];
      count = 1;
    }
    const double mean = acc / static_cast<double>(count);
    if (mean < threshold || mean <= gcfg.silence_energy_floor)
      s.kind = SegmentKind::silence;
  }

  // Merge short syllable segments into the neighbor across the lower boundary.
  const double min_dur = gcfg.min_segment_ms / 1000.0;
  bool merged = true;
  while (merged && segs.size() > 1) {
    merged = false;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (segs[i].kind != SegmentKind::syllable) continue;
      if (segs[i].duration() >= min_dur) continue;
      if (i > 0) {
        segs[i - 1].end = segs[i].end;
        segs.erase(segs.begin() + static_cast<long>(i));
      } else {
        segs[1].start = segs[0].start;
        segs.erase(segs.begin());
      }
      merged = true;
      break;
    }
  }

  // Coalesce adjacent silence segments.
  std::vector<Segment> out;
  for (const Segment& s : segs) {
    if (!out.empty() && out.back().kind == SegmentKind::silence &&
        s.kind == SegmentKind::silence) {
      out.back().end = s.end;
    } else {
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace aud
