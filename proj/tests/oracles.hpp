// Independent reference implementations used to freeze expected values.
// Everything here recomputes results by brute force or dense numerics and must
// stay free of the library's DP/FFT code paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "aud/dtw.hpp"
#include "aud/hmm.hpp"
#include "aud/types.hpp"

namespace oracle {

// Exhaustive DTW: enumerate every monotonic path with steps (1,0), (0,1),
// (1,1) inside the band, accumulating costs in path order.
inline double dtw_bruteforce(const aud::Matrix& a, const aud::Matrix& b,
                             const aud::DtwConfig& cfg) {
  const std::size_t n = a.rows(), m = b.rows();
  const long band = static_cast<long>(
      std::ceil(cfg.band_ratio * static_cast<double>(std::max(n, m))));
  const double diag_w = cfg.step_pattern == aud::StepPattern::symmetric2 ? 2.0 : 1.0;
  double best = std::numeric_limits<double>::infinity();
  double best_len = 1.0;

  auto local = [&](std::size_t i, std::size_t j) {
    return aud::detail::local_cost(a.row(i), b.row(j), cfg.local_distance);
  };

  std::function<void(std::size_t, std::size_t, double, double)> walk =
      [&](std::size_t i, std::size_t j, double cost, double len) {
        if (std::labs(static_cast<long>(i) - static_cast<long>(j)) > band) return;
        if (i == n - 1 && j == m - 1) {
          if (cost < best) {
            best = cost;
            best_len = len;
          }
          return;
        }
        if (i + 1 < n) walk(i + 1, j, cost + local(i + 1, j), len + 1.0);
        if (j + 1 < m) walk(i, j + 1, cost + local(i, j + 1), len + 1.0);
        if (i + 1 < n && j + 1 < m)
          walk(i + 1, j + 1, cost + diag_w * local(i + 1, j + 1), len + 1.0);
      };
  walk(0, 0, local(0, 0), 1.0);
  return cfg.length_normalize ? best / best_len : best;
}

// Exhaustive forced-chain Viterbi: every monotone state staircase from the
// first to the last flat state. Ties pick the lexicographically greatest
// path (transitions as early as possible).
struct ViterbiOracleResult {
  std::vector<std::size_t> path;
  double log_likelihood = -std::numeric_limits<double>::infinity();
};

inline ViterbiOracleResult viterbi_bruteforce(const aud::AUInventory& inv,
                                              const std::vector<int>& chain,
                                              const aud::Matrix& features) {
  std::vector<double> log_self, log_adv;
  std::vector<const aud::GmmState*> states;
  for (int u : chain) {
    const auto& hmm = inv.units[static_cast<std::size_t>(u)];
    for (std::size_t s = 0; s < hmm.n_states(); ++s) {
      const double self = std::clamp(hmm.self_loop[s], 1e-300, 1.0 - 1e-12);
      log_self.push_back(std::log(self));
      log_adv.push_back(std::log(1.0 - self));
      states.push_back(&hmm.states[s]);
    }
  }
  const std::size_t S = states.size(), T = features.rows();
  ViterbiOracleResult best;
  std::vector<std::size_t> path(T);

  std::function<void(std::size_t, std::size_t, double)> walk =
      [&](std::size_t t, std::size_t s, double score) {
        path[t] = s;
        if (t == T - 1) {
          if (s != S - 1) return;
          if (score > best.log_likelihood ||
              (score == best.log_likelihood &&
               std::lexicographical_compare(best.path.begin(), best.path.end(),
                                            path.begin(), path.end()))) {
            best.log_likelihood = score;
            best.path = path;
          }
          return;
        }
        {  // stay
          double sc = score + log_self[s];
          sc += states[s]->log_density(features.row(t + 1));
          walk(t + 1, s, sc);
        }
        if (s + 1 < S) {  // advance
          double sc = score + log_adv[s];
          sc += states[s + 1]->log_density(features.row(t + 1));
          walk(t + 1, s + 1, sc);
        }
      };
  if (T >= 1 && S >= 1) walk(0, 0, states[0]->log_density(features.row(0)));
  return best;
}

// Exhaustive free-loop decode over the full automaton (tiny instances only).
inline double free_loop_bruteforce(const aud::AUInventory& inv,
                                   const aud::Matrix& features) {
  std::vector<double> log_self, log_adv;
  std::vector<const aud::GmmState*> states;
  std::vector<bool> is_first, is_last;
  for (const auto& hmm : inv.units) {
    for (std::size_t s = 0; s < hmm.n_states(); ++s) {
      const double self = std::clamp(hmm.self_loop[s], 1e-300, 1.0 - 1e-12);
      log_self.push_back(std::log(self));
      log_adv.push_back(std::log(1.0 - self));
      states.push_back(&hmm.states[s]);
      is_first.push_back(s == 0);
      is_last.push_back(s + 1 == hmm.n_states());
    }
  }
  const std::size_t S = states.size(), T = features.rows();
  double best = -std::numeric_limits<double>::infinity();

  std::function<void(std::size_t, std::size_t, double)> walk =
      [&](std::size_t t, std::size_t s, double score) {
        if (t == T - 1) {
          if (is_last[s] && score > best) best = score;
          return;
        }
        {
          double sc = score + log_self[s];
          sc += states[s]->log_density(features.row(t + 1));
          walk(t + 1, s, sc);
        }
        if (s + 1 < S && !is_first[s + 1]) {
          double sc = score + log_adv[s];
          sc += states[s + 1]->log_density(features.row(t + 1));
          walk(t + 1, s + 1, sc);
        }
        if (is_last[s]) {  // cross to any unit entry, uniform unnormalized prior
          for (std::size_t v = 0; v < S; ++v) {
            if (!is_first[v]) continue;
            double sc = score + log_adv[s];
            sc += states[v]->log_density(features.row(t + 1));
            walk(t + 1, v, sc);
          }
        }
      };
  for (std::size_t s = 0; s < S; ++s)
    if (is_first[s]) walk(0, s, states[s]->log_density(features.row(0)));
  return best;
}

// Direct O(N*K) DFT magnitudes at FFT bin frequencies.
inline std::vector<double> dense_dft_magnitude(const std::vector<double>& frame,
                                               std::size_t n_fft) {
  const double pi = 3.14159265358979323846;
  std::vector<double> mag(n_fft / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < frame.size(); ++n) {
      const double ang = -2.0 * pi * static_cast<double>(k) * n / n_fft;
      re += frame[n] * std::cos(ang);
      im += frame[n] * std::sin(ang);
    }
    mag[k] = std::hypot(re, im);
  }
  return mag;
}

// Group delay by dense numerical phase differentiation of the signal's DFT:
// tau(w) = -d(arg X)/dw via central differences with local unwrapping.
inline std::vector<double> numeric_group_delay(const std::vector<double>& x,
                                               std::size_t n_bins) {
  const double pi = 3.14159265358979323846;
  const std::size_t N = x.size();
  auto spectrum_at = [&](double w) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      re += x[n] * std::cos(-w * static_cast<double>(n));
      im += x[n] * std::sin(-w * static_cast<double>(n));
    }
    return std::complex<double>(re, im);
  };
  const double h = 1e-5;
  std::vector<double> tau(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    const double w = 2.0 * pi * static_cast<double>(k) / static_cast<double>(N);
    double dphi = std::arg(spectrum_at(w + h)) - std::arg(spectrum_at(w - h));
    while (dphi > pi) dphi -= 2.0 * pi;
    while (dphi < -pi) dphi += 2.0 * pi;
    tau[k] = -dphi / (2.0 * h);
  }
  return tau;
}

}  // namespace oracle
