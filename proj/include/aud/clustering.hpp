#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "aud/dtw.hpp"
#include "aud/types.hpp"

namespace aud {

constexpr int kUnassigned = -1;

struct ClusterAssignment {
  std::vector<int> labels;  // per-segment cluster id, or kUnassigned
  int k_neighbors = 0;
  int n_clusters = 0;
};

namespace detail {

// rank[i][j] = position of j in i's neighbor list ordered by similarity
// (descending, ties broken by segment index). Self gets rank n-1.
inline std::vector<std::vector<std::size_t>> neighbor_ranks(const SimilarityMatrix& sim) {
  const std::size_t n = sim.n;
  std::vector<std::vector<std::size_t>> rank(n, std::vector<std::size_t>(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (a == i) return false;  // self sorts last
      if (b == i) return true;
      if (sim.values(i, a) != sim.values(i, b))
        return sim.values(i, a) > sim.values(i, b);
      return a < b;
    });
    for (std::size_t pos = 0; pos < n; ++pos) rank[i][order[pos]] = pos;
  }
  return rank;
}

inline ClusterAssignment components_for_k(
    const std::vector<std::vector<std::size_t>>& rank, std::size_t n, int k,
    int min_cluster_size) {
  // Union mutual-KNN edges: i-j iff each is within the other's first k ranks.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rank[i][j] < static_cast<std::size_t>(k) &&
          rank[j][i] < static_cast<std::size_t>(k)) {
        const int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }

  std::vector<int> root(n);
  std::vector<int> size_of(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    root[i] = find(static_cast<int>(i));
    ++size_of[root[i]];
  }

  // Cluster ids in order of each qualifying component's smallest member index.
  ClusterAssignment out;
  out.labels.assign(n, kUnassigned);
  out.k_neighbors = k;
  std::vector<int> id_of_root(n, kUnassigned);
  int next_id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int r = root[i];
    if (size_of[r] < min_cluster_size) continue;
    if (id_of_root[r] == kUnassigned) id_of_root[r] = next_id++;
    out.labels[i] = id_of_root[r];
  }
  out.n_clusters = next_id;
  return out;
}

}  // namespace detail

// Mutual-KNN graph clustering: connected components of size >= min_cluster_size
// become clusters; smaller components are left unassigned. Deterministic under
// ties (neighbor lists tie-break by segment index).
inline ClusterAssignment knn_graph_cluster(const SimilarityMatrix& sim, int k,
                                           int min_cluster_size) {
  require(sim.n >= 2, ErrorCode::empty_input, "clustering needs at least 2 segments");
  require(k >= 1 && static_cast<std::size_t>(k) < sim.n, ErrorCode::config_error,
          "k must satisfy 1 <= k < n");
  require(min_cluster_size >= 1, ErrorCode::config_error,
          "min cluster size must be >= 1");
  const auto rank = detail::neighbor_ranks(sim);
  return detail::components_for_k(rank, sim.n, k, min_cluster_size);
}

// Picks k so the qualifying-cluster count lands in [target_lo, target_hi]
// (binary search on the non-increasing component count, then a linear sweep as
// fallback). Returns the k whose count is closest to the target range, with
// smaller k preferred on ties.
inline int auto_select_k(const SimilarityMatrix& sim, int min_cluster_size,
                         int target_lo, int target_hi) {
  require(target_lo >= 1 && target_hi >= target_lo, ErrorCode::config_error,
          "invalid target cluster range");
  require(sim.n >= 2, ErrorCode::empty_input, "clustering needs at least 2 segments");
  const auto rank = detail::neighbor_ranks(sim);
  const int k_max = static_cast<int>(sim.n) - 1;

  auto count_for = [&](int k) {
    return detail::components_for_k(rank, sim.n, k, min_cluster_size).n_clusters;
  };

  int lo = 1, hi = k_max;
  while (lo <= hi) {
    const int mid = lo + (hi - lo) / 2;
    const int c = count_for(mid);
    if (c > target_hi) {
      lo = mid + 1;  // too many clusters: add edges
    } else if (c < target_lo) {
      hi = mid - 1;  // too few: remove edges
    } else {
      return mid;
    }
  }
  // The filtered count is only approximately monotone in k; sweep as fallback.
  int best_k = 1;
  long best_gap = std::numeric_limits<long>::max();
  for (int k = 1; k <= k_max; ++k) {
    const int c = count_for(k);
    long gap = 0;
    if (c < target_lo) gap = target_lo - c;
    if (c > target_hi) gap = c - target_hi;
    if (gap < best_gap) {
      best_gap = gap;
      best_k = k;
      if (gap == 0) break;
    }
  }
  return best_k;
}

}  // namespace aud
