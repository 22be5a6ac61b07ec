#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "aud/types.hpp"

namespace aud {

constexpr double kLog2Pi = 1.8378770664093454836;

// Diagonal-covariance Gaussian mixture.
struct GaussianMixture {
  std::size_t n_components = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // sums to 1
  Matrix means;                 // C x D
  Matrix variances;             // C x D, >= floor

  double component_log_density(std::size_t c, std::span<const double> x) const {
    double acc = -0.5 * kLog2Pi * static_cast<double>(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      const double v = variances(c, d);
      const double diff = x[d] - means(c, d);
      acc -= 0.5 * (std::log(v) + diff * diff / v);
    }
    return acc;
  }

  // log p(x) via logsumexp over components.
  double log_density(std::span<const double> x) const {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> lp(n_components);
    for (std::size_t c = 0; c < n_components; ++c) {
      lp[c] = (weights[c] > 0.0 ? std::log(weights[c])
                                : -std::numeric_limits<double>::infinity()) +
              component_log_density(c, x);
      best = std::max(best, lp[c]);
    }
    if (!std::isfinite(best)) return best;
    double acc = 0.0;
    for (double v : lp) acc += std::exp(v - best);
    return best + std::log(acc);
  }

  double average_log_likelihood(const Matrix& frames) const {
    double acc = 0.0;
    for (std::size_t t = 0; t < frames.rows(); ++t) acc += log_density(frames.row(t));
    return acc / static_cast<double>(frames.rows());
  }
};

struct EmConfig {
  std::size_t n_components = 64;
  std::size_t iterations = 20;
  unsigned seed = 42;
  double variance_floor_scale = 1e-3;  // floor = scale * global variance per dim
};

struct EmReport {
  std::vector<double> log_likelihood;  // per-iteration average ll, non-decreasing
  int reseeded_components = 0;
};

namespace detail {

inline void global_moments(const Matrix& frames, std::vector<double>& mean,
                           std::vector<double>& var) {
  const std::size_t T = frames.rows(), D = frames.cols();
  mean.assign(D, 0.0);
  var.assign(D, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) mean[d] += frames(t, d);
  for (double& m : mean) m /= static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) {
      const double diff = frames(t, d) - mean[d];
      var[d] += diff * diff;
    }
  for (double& v : var) v /= static_cast<double>(T);
}

// k-means++ seeding with an explicitly coded D^2 sampling walk.
inline std::vector<std::size_t> kmeanspp_centers(const Matrix& frames,
                                                 std::size_t k, std::mt19937& rng) {
  const std::size_t T = frames.rows(), D = frames.cols();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> centers;
  centers.push_back(static_cast<std::size_t>(unit(rng) * static_cast<double>(T)) % T);
  std::vector<double> d2(T, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    const std::size_t last = centers.back();
    double total = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      double acc = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        const double diff = frames(t, d) - frames(last, d);
        acc += diff * diff;
      }
      d2[t] = std::min(d2[t], acc);
      total += d2[t];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double u = unit(rng) * total;
      double cum = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        cum += d2[t];
        if (cum >= u) {
          pick = t;
          break;
        }
      }
    } else {
      pick = centers.size() % T;  // all points coincide
    }
    centers.push_back(pick);
  }
  return centers;
}

}  // namespace detail

// EM for a diagonal GMM with deterministic k-means++ initialization. The
// per-iteration average log-likelihood trace is non-decreasing.
inline GaussianMixture em_fit(const Matrix& frames, const EmConfig& cfg,
                              EmReport* report = nullptr) {
  const std::size_t T = frames.rows(), D = frames.cols();
  require(cfg.n_components >= 1, ErrorCode::config_error, "need >= 1 component");
  require(T >= 10 * cfg.n_components, ErrorCode::empty_input,
          "em_fit needs at least 10 frames per component");

  std::vector<double> gmean, gvar;
  detail::global_moments(frames, gmean, gvar);
  std::vector<double> floor(D);
  for (std::size_t d = 0; d < D; ++d)
    floor[d] = std::max(cfg.variance_floor_scale * gvar[d], 1e-12);

  GaussianMixture g;
  g.n_components = cfg.n_components;
  g.dim = D;
  g.weights.assign(cfg.n_components, 1.0 / static_cast<double>(cfg.n_components));
  g.means = Matrix(cfg.n_components, D);
  g.variances = Matrix(cfg.n_components, D);
  std::mt19937 rng(cfg.seed);
  const auto centers = detail::kmeanspp_centers(frames, cfg.n_components, rng);
  for (std::size_t c = 0; c < cfg.n_components; ++c)
    for (std::size_t d = 0; d < D; ++d) {
      g.means(c, d) = frames(centers[c], d);
      g.variances(c, d) = std::max(gvar[d], floor[d]);
    }

  Matrix resp(T, cfg.n_components);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    // E-step
    double total_ll = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < g.n_components; ++c) {
        const double lp = std::log(std::max(g.weights[c], 1e-300)) +
                          g.component_log_density(c, frames.row(t));
        resp(t, c) = lp;
        best = std::max(best, lp);
      }
      double z = 0.0;
      for (std::size_t c = 0; c < g.n_components; ++c)
        z += std::exp(resp(t, c) - best);
      const double log_z = best + std::log(z);
      total_ll += log_z;
      for (std::size_t c = 0; c < g.n_components; ++c)
        resp(t, c) = std::exp(resp(t, c) - log_z);
    }
    if (report) report->log_likelihood.push_back(total_ll / static_cast<double>(T));

    // M-step
    for (std::size_t c = 0; c < g.n_components; ++c) {
      double nc = 0.0;
      for (std::size_t t = 0; t < T; ++t) nc += resp(t, c);
      if (nc < 1e-10) {
        // Dead component: reseed near the fattest surviving one.
        std::size_t fat = 0;
        double fat_var = -1.0;
        for (std::size_t c2 = 0; c2 < g.n_components; ++c2) {
          double tv = 0.0;
          for (std::size_t d = 0; d < D; ++d) tv += g.variances(c2, d);
          if (c2 != c && tv > fat_var) {
            fat_var = tv;
            fat = c2;
          }
        }
        for (std::size_t d = 0; d < D; ++d) {
          g.means(c, d) = g.means(fat, d) + 0.1 * std::sqrt(g.variances(fat, d));
          g.variances(c, d) = g.variances(fat, d);
        }
        g.weights[c] = 1.0 / static_cast<double>(T);
        if (report) ++report->reseeded_components;
        continue;
      }
      g.weights[c] = nc / static_cast<double>(T);
      for (std::size_t d = 0; d < D; ++d) {
        double m = 0.0;
        for (std::size_t t = 0; t < T; ++t) m += resp(t, c) * frames(t, d);
        m /= nc;
        double v = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
          const double diff = frames(t, d) - m;
          v += resp(t, c) * diff * diff;
        }
        v /= nc;
        g.means(c, d) = m;
        g.variances(c, d) = std::max(v, floor[d]);
      }
    }
    double wsum = 0.0;
    for (double w : g.weights) wsum += w;
    for (double& w : g.weights) w /= wsum;
  }
  return g;
}

// Mean-only MAP adaptation: mu'_c = (n_c*xbar_c + r*mu_c) / (n_c + r).
// Weights and variances are copied from the prior model.
inline GaussianMixture map_adapt(const GaussianMixture& ubm, const Matrix& frames,
                                 double relevance) {
  require(relevance > 0.0, ErrorCode::config_error, "relevance factor must be > 0");
  require(frames.cols() == ubm.dim, ErrorCode::dimension_mismatch,
          "feature dimension does not match UBM");
  const std::size_t T = frames.rows(), C = ubm.n_components, D = ubm.dim;

  std::vector<double> nc(C, 0.0);
  Matrix sx(C, D, 0.0);
  std::vector<double> lp(C);
  for (std::size_t t = 0; t < T; ++t) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < C; ++c) {
      lp[c] = std::log(std::max(ubm.weights[c], 1e-300)) +
              ubm.component_log_density(c, frames.row(t));
      best = std::max(best, lp[c]);
    }
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += std::exp(lp[c] - best);
    const double log_z = best + std::log(z);
    for (std::size_t c = 0; c < C; ++c) {
      const double gamma = std::exp(lp[c] - log_z);
      nc[c] += gamma;
      for (std::size_t d = 0; d < D; ++d) sx(c, d) += gamma * frames(t, d);
    }
  }

  GaussianMixture adapted = ubm;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t d = 0; d < D; ++d) {
      const double xbar = nc[c] > 0.0 ? sx(c, d) / nc[c] : ubm.means(c, d);
      adapted.means(c, d) = (nc[c] * xbar + relevance * ubm.means(c, d)) /
                            (nc[c] + relevance);
    }
  }
  return adapted;
}

}  // namespace aud
