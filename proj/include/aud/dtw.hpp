#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "aud/types.hpp"
#include "aud/util.hpp"

namespace aud {

enum class LocalDistance { euclidean, cosine };
enum class StepPattern { symmetric1, symmetric2 };

struct DtwConfig {
  LocalDistance local_distance = LocalDistance::euclidean;
  StepPattern step_pattern = StepPattern::symmetric1;
  double band_ratio = 1.0;       // Sakoe-Chiba band as a fraction of the longer length
  bool length_normalize = true;  // divide by the number of aligned pairs

  void validate() const {
    require(band_ratio > 0.0 && band_ratio <= 1.0, ErrorCode::config_error,
            "band ratio must be in (0, 1]");
  }
};

namespace detail {

inline double local_cost(std::span<const double> a, std::span<const double> b,
                         LocalDistance kind) {
  if (kind == LocalDistance::euclidean) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
      const double diff = a[d] - b[d];
      acc += diff * diff;
    }
    return std::sqrt(acc);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    dot += a[d] * b[d];
    na += a[d] * a[d];
    nb += b[d] * b[d];
  }
  if (na == 0.0 && nb == 0.0) return 0.0;
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace detail

// Minimal accumulated local distance over monotonic alignment paths. Steps are
// (1,0), (0,1), (1,1); symmetric2 weights the diagonal step by 2. Cells with
// |i - j| beyond ceil(band_ratio * max(T_a, T_b)) are excluded.
inline double dtw_distance(const Matrix& a, const Matrix& b, const DtwConfig& cfg) {
  cfg.validate();
  require(a.rows() >= 1 && b.rows() >= 1, ErrorCode::empty_input,
          "dtw requires non-empty sequences");
  require(a.cols() == b.cols(), ErrorCode::dimension_mismatch,
          "dtw sequences must share feature dimension");
  const std::size_t n = a.rows(), m = b.rows();
  const long band = static_cast<long>(
      std::ceil(cfg.band_ratio * static_cast<double>(std::max(n, m))));
  const double inf = std::numeric_limits<double>::infinity();
  const double diag_w = cfg.step_pattern == StepPattern::symmetric2 ? 2.0 : 1.0;

  std::vector<double> prev(m, inf), cur(m, inf);
  // parallel DP tracks the node count of the chosen path for normalization
  std::vector<double> prev_len(m, 0.0), cur_len(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(cur.begin(), cur.end(), inf);
    for (std::size_t j = 0; j < m; ++j) {
      if (std::labs(static_cast<long>(i) - static_cast<long>(j)) > band) continue;
      const double d = detail::local_cost(a.row(i), b.row(j), cfg.local_distance);
      if (i == 0 && j == 0) {
        cur[j] = d;
        cur_len[j] = 1.0;
        continue;
      }
      double best = inf, best_len = 0.0;
      if (i > 0 && prev[j] + d < best) { best = prev[j] + d; best_len = prev_len[j] + 1.0; }
      if (j > 0 && cur[j - 1] + d < best) { best = cur[j - 1] + d; best_len = cur_len[j - 1] + 1.0; }
      if (i > 0 && j > 0 && prev[j - 1] + diag_w * d < best) {
        best = prev[j - 1] + diag_w * d;
        best_len = prev_len[j - 1] + 1.0;
      }
      cur[j] = best;
      cur_len[j] = best_len;
    }
    std::swap(prev, cur);
    std::swap(prev_len, cur_len);
  }
  const double total = prev[m - 1];
  require(std::isfinite(total), ErrorCode::infeasible_band,
          "band admits no alignment path");
  return cfg.length_normalize ? total / prev_len[m - 1] : total;
}

struct SimilarityMatrix {
  std::size_t n = 0;
  Matrix values;  // symmetric n x n, diagonal 1
  std::vector<std::string> segment_ids;
};

// values[i][j] = exp(-dtw(i,j)/sigma) with sigma the median pairwise distance.
// Each unordered pair is evaluated once; pairs are computed in parallel.
inline SimilarityMatrix build_similarity_matrix(const std::vector<Matrix>& features,
                                                const std::vector<std::string>& ids,
                                                const DtwConfig& cfg) {
  require(features.size() >= 2, ErrorCode::empty_input,
          "similarity matrix needs at least 2 segments");
  require(ids.size() == features.size(), ErrorCode::dimension_mismatch,
          "segment id count mismatch");
  const std::size_t n = features.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  std::vector<double> dist(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t p) {
    dist[p] = dtw_distance(features[pairs[p].first], features[pairs[p].second], cfg);
  });

  std::vector<double> sorted = dist;
  std::sort(sorted.begin(), sorted.end());
  double sigma;
  if (sorted.size() % 2 == 1) {
    sigma = sorted[sorted.size() / 2];
  } else {
    sigma = 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
  }
  if (!(sigma > 0.0)) sigma = 1.0;  // all-identical segments

  SimilarityMatrix sim;
  sim.n = n;
  sim.segment_ids = ids;
  sim.values = Matrix(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) sim.values(i, i) = 1.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const double v = std::exp(-dist[p] / sigma);
    sim.values(pairs[p].first, pairs[p].second) = v;
    sim.values(pairs[p].second, pairs[p].first) = v;
  }
  return sim;
}

}  // namespace aud
