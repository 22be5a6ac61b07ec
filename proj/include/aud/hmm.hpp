#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "aud/clustering.hpp"
#include "aud/gmm.hpp"
#include "aud/types.hpp"
#include "aud/util.hpp"

namespace aud {

// Diagonal-covariance GMM emission for a single HMM state.
struct GmmState {
  std::vector<double> weights;
  Matrix means;      // C x D
  Matrix variances;  // C x D

  std::size_t n_components() const { return weights.size(); }
  std::size_t dim() const { return means.cols(); }

  double component_log_density(std::size_t c, std::span<const double> x) const {
    double acc = -0.5 * kLog2Pi * static_cast<double>(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double v = variances(c, d);
      const double diff = x[d] - means(c, d);
      acc -= 0.5 * (std::log(v) + diff * diff / v);
    }
    return acc;
  }

  double log_density(std::span<const double> x) const {
    double best = -std::numeric_limits<double>::infinity();
    double lp[64];
    const std::size_t C = n_components();
    require(C >= 1 && C <= 64, ErrorCode::config_error,
            "state mixture count must be in [1, 64]");
    for (std::size_t c = 0; c < C; ++c) {
      lp[c] = std::log(std::max(weights[c], 1e-300)) + component_log_density(c, x);
      best = std::max(best, lp[c]);
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < C; ++c) acc += std::exp(lp[c] - best);
    return best + std::log(acc);
  }

  // Hard component assignment; ties go to the lower index.
  std::size_t best_component(std::span<const double> x) const {
    std::size_t best_c = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_components(); ++c) {
      const double lp = std::log(std::max(weights[c], 1e-300)) +
                        component_log_density(c, x);
      if (lp > best) {
        best = lp;
        best_c = c;
      }
    }
    return best_c;
  }
};

// Left-to-right HMM with self-loops and no skips. The advance probability of
// state i is 1 - self_loop[i]; the last state's advance probability is its
// exit probability.
struct AcousticUnitHMM {
  std::string symbol;
  std::vector<GmmState> states;
  std::vector<double> self_loop;

  std::size_t n_states() const { return states.size(); }
};

struct AUInventory {
  std::vector<AcousticUnitHMM> units;
  std::map<int, std::array<int, 3>> cluster_map;  // cluster -> (rise, steady, fall)
  int silence_unit = -1;
  std::size_t feature_dim = 0;
  std::vector<double> variance_floor;  // per dimension

  int unit_index(const std::string& symbol) const {
    for (std::size_t u = 0; u < units.size(); ++u)
      if (units[u].symbol == symbol) return static_cast<int>(u);
    return -1;
  }
};

struct Transcription {
  std::string utterance_id;
  std::vector<std::string> symbols;
  std::vector<std::pair<std::size_t, std::size_t>> alignments;  // [start, end) frames
  double log_likelihood = 0.0;
  bool warning = false;  // best-effort decode of an infeasible utterance
};

enum class Grammar { cluster_triplet, free_loop };

struct ViterbiResult {
  std::vector<std::size_t> path;  // flat state per frame
  double log_likelihood = 0.0;
};

namespace detail {

struct FlatStates {
  std::vector<std::size_t> unit_of;     // flat state -> unit (index into chain/inventory)
  std::vector<std::size_t> state_of;    // flat state -> state within unit
  std::vector<std::size_t> unit_first;  // unit -> first flat state
  std::vector<std::size_t> unit_last;   // unit -> last flat state
  std::vector<double> log_self, log_adv;

  std::size_t size() const { return unit_of.size(); }
};

inline FlatStates flatten(const AUInventory& inv, const std::vector<int>& units) {
  FlatStates f;
  for (std::size_t c = 0; c < units.size(); ++c) {
    const AcousticUnitHMM& hmm = inv.units[static_cast<std::size_t>(units[c])];
    f.unit_first.push_back(f.size());
    for (std::size_t s = 0; s < hmm.n_states(); ++s) {
      f.unit_of.push_back(c);
      f.state_of.push_back(s);
      const double self = std::clamp(hmm.self_loop[s], 1e-300, 1.0 - 1e-12);
      f.log_self.push_back(std::log(self));
      f.log_adv.push_back(std::log(1.0 - self));
    }
    f.unit_last.push_back(f.size() - 1);
  }
  return f;
}

}  // namespace detail

// Forced alignment of `features` against the concatenated chain of units.
// Ties break toward the earlier transition into each state. The score counts
// the first emission plus one transition and one emission per later frame; no
// terminal exit factor is applied.
inline ViterbiResult viterbi_align(const AUInventory& inv, const std::vector<int>& chain,
                                   const Matrix& features) {
  require(!chain.empty(), ErrorCode::config_error, "empty HMM chain");
  require(features.cols() == inv.feature_dim, ErrorCode::dimension_mismatch,
          "feature dimension does not match inventory");
  for (int u : chain)
    require(u >= 0 && static_cast<std::size_t>(u) < inv.units.size(),
            ErrorCode::missing_data, "chain references unknown unit");
  const detail::FlatStates flat = detail::flatten(inv, chain);
  const std::size_t S = flat.size();
  const std::size_t T = features.rows();
  require(T >= S, ErrorCode::infeasible_alignment,
          "sequence shorter than minimum chain length");

  const double ninf = -std::numeric_limits<double>::infinity();
  auto emis = [&](std::size_t t, std::size_t s) {
    return inv.units[static_cast<std::size_t>(chain[flat.unit_of[s]])]
        .states[flat.state_of[s]]
        .log_density(features.row(t));
  };

  std::vector<double> prev(S, ninf), cur(S, ninf);
  std::vector<uint8_t> from_advance(T * S, 0);
  prev[0] = emis(0, 0);
  for (std::size_t t = 1; t < T; ++t) {
    // A path must still be able to reach the last state: s >= S - (T - t).
    const std::size_t smin = S >= T - t ? S - (T - t) : 0;
    const std::size_t smax = std::min(S - 1, t);
    std::fill(cur.begin(), cur.end(), ninf);
    for (std::size_t s = smin; s <= smax; ++s) {
      double best = prev[s] + flat.log_self[s];  // stay preferred on ties
      uint8_t bp = 0;
      if (s > 0) {
        const double adv = prev[s - 1] + flat.log_adv[s - 1];
        if (adv > best) {
          best = adv;
          bp = 1;
        }
      }
      if (best == ninf) continue;
      cur[s] = best + emis(t, s);
      from_advance[t * S + s] = bp;
    }
    std::swap(prev, cur);
  }
  require(std::isfinite(prev[S - 1]), ErrorCode::infeasible_alignment,
          "no admissible alignment path");

  ViterbiResult res;
  res.log_likelihood = prev[S - 1];
  res.path.resize(T);
  std::size_t s = S - 1;
  for (std::size_t t = T; t-- > 0;) {
    res.path[t] = s;
    if (t > 0 && from_advance[t * S + s]) --s;
  }
  return res;
}

struct LoopVisit {
  std::size_t unit = 0;  // inventory unit index
  std::size_t start = 0, end = 0;  // [start, end) frames
};

struct LoopResult {
  std::vector<LoopVisit> visits;
  double log_likelihood = 0.0;
};

// Viterbi over the free-loop automaton: any unit may follow any unit (silence
// included) under a uniform successor prior, kept unnormalized so loop scores
// are comparable with forced-chain scores. Paths start at any unit's first
// state and must end in a unit's last state.
inline LoopResult viterbi_free_loop(const AUInventory& inv, const Matrix& features) {
  require(!inv.units.empty(), ErrorCode::config_error, "empty inventory");
  require(features.cols() == inv.feature_dim, ErrorCode::dimension_mismatch,
          "feature dimension does not match inventory");
  std::vector<int> all(inv.units.size());
  for (std::size_t u = 0; u < all.size(); ++u) all[u] = static_cast<int>(u);
  const detail::FlatStates flat = detail::flatten(inv, all);
  const std::size_t S = flat.size();
  const std::size_t T = features.rows();
  require(T >= 1, ErrorCode::empty_input, "no frames to decode");

  const double ninf = -std::numeric_limits<double>::infinity();
  auto emis = [&](std::size_t t, std::size_t s) {
    return inv.units[flat.unit_of[s]].states[flat.state_of[s]].log_density(
        features.row(t));
  };
  std::vector<bool> is_first(S, false), is_last(S, false);
  for (std::size_t u = 0; u < inv.units.size(); ++u) {
    is_first[flat.unit_first[u]] = true;
    is_last[flat.unit_last[u]] = true;
  }

  // Backpointer encoding: 0 = stay, 1 = advance within unit, 2 = cross entry.
  std::vector<uint8_t> kind(T * S, 0);
  std::vector<uint32_t> cross_src(T * S, 0);
  std::vector<double> prev(S, ninf), cur(S, ninf);
  for (std::size_t s = 0; s < S; ++s)
    if (is_first[s]) prev[s] = emis(0, s);

  for (std::size_t t = 1; t < T; ++t) {
    double best_exit = ninf;
    std::size_t best_exit_src = 0;
    for (std::size_t s = 0; s < S; ++s)
      if (is_last[s] && prev[s] + flat.log_adv[s] > best_exit) {
        best_exit = prev[s] + flat.log_adv[s];
        best_exit_src = s;
      }
    for (std::size_t s = 0; s < S; ++s) {
      double best = prev[s] + flat.log_self[s];
      uint8_t bp = 0;
      if (!is_first[s]) {
        const double adv = prev[s - 1] + flat.log_adv[s - 1];
        if (adv > best) {
          best = adv;
          bp = 1;
        }
      } else if (best_exit > best) {
        best = best_exit;
        bp = 2;
      }
      if (best == ninf) {
        cur[s] = ninf;
        continue;
      }
      cur[s] = best + emis(t, s);
      kind[t * S + s] = bp;
      cross_src[t * S + s] = static_cast<uint32_t>(best_exit_src);
    }
    std::swap(prev, cur);
  }

  double best_final = ninf;
  std::size_t final_state = 0;
  for (std::size_t s = 0; s < S; ++s)
    if (is_last[s] && prev[s] > best_final) {
      best_final = prev[s];
      final_state = s;
    }
  require(std::isfinite(best_final), ErrorCode::infeasible_alignment,
          "no admissible loop path");

  // Backtrack, splitting unit visits at cross entries.
  std::vector<std::size_t> path(T);
  std::vector<bool> entered(T, false);
  std::size_t s = final_state;
  for (std::size_t t = T; t-- > 0;) {
    path[t] = s;
    if (t == 0) {
      entered[0] = true;
      break;
    }
    const uint8_t k = kind[t * S + s];
    if (k == 1) {
      --s;
    } else if (k == 2) {
      entered[t] = true;
      s = cross_src[t * S + s];
    }
  }

  LoopResult res;
  res.log_likelihood = best_final;
  for (std::size_t t = 0; t < T; ++t) {
    if (entered[t]) {
      if (!res.visits.empty()) res.visits.back().end = t;
      res.visits.push_back({flat.unit_of[path[t]], t, T});
    }
  }
  return res;
}

struct InventoryConfig {
  std::size_t n_states = 3;  // per rise/steady/fall unit
  std::size_t sil_states = 1;
  double self_loop_init = 0.5;
  double sil_self_loop_init = 0.9;
  double variance_floor_scale = 1e-3;
  double mean_offset_scale = 0.05;  // deterministic per-state spread at flat start
};

// Flat-start initialization: each cluster member is split into uniform thirds
// (rise / steady / fall pools); state means are the pooled mean plus a small
// deterministic per-state offset, variances the pooled variance (floored).
// SIL is initialized from pooled silence frames when available.
inline AUInventory init_inventory(const ClusterAssignment& clusters,
                                  const std::vector<Matrix>& segment_features,
                                  const Matrix& silence_frames,
                                  const InventoryConfig& cfg) {
  require(clusters.n_clusters >= 1, ErrorCode::empty_input, "no clusters to model");
  require(clusters.labels.size() == segment_features.size(),
          ErrorCode::dimension_mismatch, "cluster labels / features size mismatch");
  std::size_t D = 0;
  for (const Matrix& m : segment_features)
    if (m.rows() > 0) {
      D = m.cols();
      break;
    }
  require(D > 0, ErrorCode::empty_input, "no feature frames");

  // Global variance for the floor.
  std::vector<double> gsum(D, 0.0), gsq(D, 0.0);
  std::size_t gcount = 0;
  for (const Matrix& m : segment_features)
    for (std::size_t t = 0; t < m.rows(); ++t) {
      for (std::size_t d = 0; d < D; ++d) {
        gsum[d] += m(t, d);
        gsq[d] += m(t, d) * m(t, d);
      }
      ++gcount;
    }
  std::vector<double> floor(D);
  for (std::size_t d = 0; d < D; ++d) {
    const double mean = gsum[d] / static_cast<double>(gcount);
    const double var = std::max(gsq[d] / static_cast<double>(gcount) - mean * mean, 0.0);
    floor[d] = std::max(cfg.variance_floor_scale * var, 1e-10);
  }

  AUInventory inv;
  inv.feature_dim = D;
  inv.variance_floor = floor;

  auto make_unit = [&](const std::string& symbol, const Matrix& pool,
                       std::size_t n_states, double self_init) {
    require(pool.rows() > 0, ErrorCode::empty_input,
            "empty initialization pool for " + symbol);
    std::vector<double> mean(D, 0.0), var(D, 0.0);
    for (std::size_t t = 0; t < pool.rows(); ++t)
      for (std::size_t d = 0; d < D; ++d) mean[d] += pool(t, d);
    for (double& m : mean) m /= static_cast<double>(pool.rows());
    for (std::size_t t = 0; t < pool.rows(); ++t)
      for (std::size_t d = 0; d < D; ++d) {
        const double diff = pool(t, d) - mean[d];
        var[d] += diff * diff;
      }
    for (double& v : var) v /= static_cast<double>(pool.rows());

    AcousticUnitHMM unit;
    unit.symbol = symbol;
    unit.self_loop.assign(n_states, self_init);
    for (std::size_t s = 0; s < n_states; ++s) {
      GmmState st;
      st.weights = {1.0};
      st.means = Matrix(1, D);
      st.variances = Matrix(1, D);
      const double spread =
          n_states > 1 ? (static_cast<double>(s) - (n_states - 1) / 2.0) : 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        st.means(0, d) = mean[d] + cfg.mean_offset_scale * spread * std::sqrt(var[d]);
        st.variances(0, d) = std::max(var[d], floor[d]);
      }
      unit.states.push_back(std::move(st));
    }
    return unit;
  };

  char buf[32];
  for (int c = 0; c < clusters.n_clusters; ++c) {
    Matrix pools[3];
    for (std::size_t i = 0; i < clusters.labels.size(); ++i) {
      if (clusters.labels[i] != c) continue;
      const Matrix& m = segment_features[i];
      const std::size_t T = m.rows();
      const std::size_t i1 = T / 3, i2 = 2 * T / 3;
      for (std::size_t t = 0; t < T; ++t) {
        const int third = t < i1 ? 0 : (t < i2 ? 1 : 2);
        pools[third].append_row(m.row(t));
      }
    }
    for (Matrix& p : pools)
      if (p.rows() == 0) {  // degenerate tiny segments: fall back to all frames
        for (std::size_t i = 0; i < clusters.labels.size(); ++i)
          if (clusters.labels[i] == c)
            for (std::size_t t = 0; t < segment_features[i].rows(); ++t)
              p.append_row(segment_features[i].row(t));
      }
    const char* suffix[3] = {"R", "S", "F"};
    std::array<int, 3> ids{};
    for (int part = 0; part < 3; ++part) {
      std::snprintf(buf, sizeof buf, "C%02d_%s", c, suffix[part]);
      ids[part] = static_cast<int>(inv.units.size());
      inv.units.push_back(make_unit(buf, pools[part], cfg.n_states, cfg.self_loop_init));
    }
    inv.cluster_map[c] = ids;
  }

  inv.silence_unit = static_cast<int>(inv.units.size());
  if (silence_frames.rows() > 0) {
    inv.units.push_back(
        make_unit("SIL", silence_frames, cfg.sil_states, cfg.sil_self_loop_init));
  } else {
    // No silence observed: start SIL from the global statistics.
    Matrix pool;
    for (const Matrix& m : segment_features)
      for (std::size_t t = 0; t < m.rows(); ++t) pool.append_row(m.row(t));
    inv.units.push_back(make_unit("SIL", pool, cfg.sil_states, cfg.sil_self_loop_init));
  }
  return inv;
}

// Splits the heaviest components (ties to the lower index) until the state has
// `target` components: each split halves the weight and perturbs the mean by
// +/-0.2 sigma.
inline void split_mixtures(GmmState& state, std::size_t target) {
  while (state.n_components() < target) {
    std::size_t pick = 0;
    for (std::size_t c = 1; c < state.n_components(); ++c)
      if (state.weights[c] > state.weights[pick]) pick = c;
    const std::size_t D = state.dim();
    Matrix means(state.n_components() + 1, D), vars(state.n_components() + 1, D);
    std::vector<double> weights(state.n_components() + 1);
    for (std::size_t c = 0; c < state.n_components(); ++c) {
      for (std::size_t d = 0; d < D; ++d) {
        means(c, d) = state.means(c, d);
        vars(c, d) = state.variances(c, d);
      }
      weights[c] = state.weights[c];
    }
    const std::size_t fresh = state.n_components();
    for (std::size_t d = 0; d < D; ++d) {
      const double sigma = std::sqrt(state.variances(pick, d));
      means(fresh, d) = state.means(pick, d) - 0.2 * sigma;
      means(pick, d) = means(pick, d) + 0.2 * sigma;
      vars(fresh, d) = state.variances(pick, d);
    }
    weights[fresh] = weights[pick] * 0.5;
    weights[pick] *= 0.5;
    state.weights = std::move(weights);
    state.means = std::move(means);
    state.variances = std::move(vars);
  }
}

struct TrainStats {
  double total_log_likelihood = 0.0;
  int zero_frame_states = 0;
  std::vector<std::string> warnings;
};

// One Viterbi-training pass: align every utterance against its transcription
// chain, re-estimate Gaussians, mixture weights, and self-loops from the hard
// assignments, floor variances, then split mixtures toward `target_mixtures`.
// States that received no frames keep their previous parameters.
inline AUInventory train_iteration(const AUInventory& inv,
                                   const std::vector<Matrix>& features,
                                   const std::vector<std::vector<std::string>>& symbols,
                                   std::size_t target_mixtures = 0,
                                   TrainStats* stats = nullptr) {
  require(features.size() == symbols.size(), ErrorCode::dimension_mismatch,
          "features / transcription count mismatch");
  const std::size_t D = inv.feature_dim;

  std::vector<std::vector<int>> chains(features.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    for (const std::string& sym : symbols[i]) {
      const int u = inv.unit_index(sym);
      require(u >= 0, ErrorCode::missing_data, "unknown symbol: " + sym);
      chains[i].push_back(u);
    }
  }

  std::vector<ViterbiResult> paths(features.size());
  parallel_for(features.size(), [&](std::size_t i) {
    paths[i] = viterbi_align(inv, chains[i], features[i]);
  });

  struct CompAcc {
    double count = 0.0;
    std::vector<double> sum, sumsq;
  };
  struct StateAcc {
    std::vector<CompAcc> comps;
    double self_count = 0.0, adv_count = 0.0;
  };
  std::vector<std::vector<StateAcc>> acc(inv.units.size());
  for (std::size_t u = 0; u < inv.units.size(); ++u) {
    acc[u].resize(inv.units[u].n_states());
    for (std::size_t s = 0; s < inv.units[u].n_states(); ++s) {
      acc[u][s].comps.resize(inv.units[u].states[s].n_components());
      for (auto& ca : acc[u][s].comps) {
        ca.sum.assign(D, 0.0);
        ca.sumsq.assign(D, 0.0);
      }
    }
  }

  double total_ll = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    total_ll += paths[i].log_likelihood;
    const detail::FlatStates flat = detail::flatten(inv, chains[i]);
    const Matrix& m = features[i];
    for (std::size_t t = 0; t < paths[i].path.size(); ++t) {
      const std::size_t fs = paths[i].path[t];
      const std::size_t u = static_cast<std::size_t>(chains[i][flat.unit_of[fs]]);
      const std::size_t s = flat.state_of[fs];
      const GmmState& st = inv.units[u].states[s];
      const std::size_t c = st.best_component(m.row(t));
      CompAcc& ca = acc[u][s].comps[c];
      ca.count += 1.0;
      for (std::size_t d = 0; d < D; ++d) {
        ca.sum[d] += m(t, d);
        ca.sumsq[d] += m(t, d) * m(t, d);
      }
      if (t + 1 < paths[i].path.size()) {
        if (paths[i].path[t + 1] == fs)
          acc[u][s].self_count += 1.0;
        else
          acc[u][s].adv_count += 1.0;
      }
    }
  }

  AUInventory out = inv;
  for (std::size_t u = 0; u < out.units.size(); ++u) {
    for (std::size_t s = 0; s < out.units[u].n_states(); ++s) {
      StateAcc& sa = acc[u][s];
      double tot = 0.0;
      for (const CompAcc& ca : sa.comps) tot += ca.count;
      GmmState& st = out.units[u].states[s];
      if (tot == 0.0) {
        if (stats) {
          ++stats->zero_frame_states;
          stats->warnings.push_back("state " + out.units[u].symbol + "/" +
                                    std::to_string(s) +
                                    " received no frames; parameters kept");
        }
      } else {
        for (std::size_t c = 0; c < st.n_components(); ++c) {
          const CompAcc& ca = sa.comps[c];
          st.weights[c] = ca.count / tot;
          if (ca.count == 0.0) continue;  // dead component keeps old parameters
          for (std::size_t d = 0; d < D; ++d) {
            const double mean = ca.sum[d] / ca.count;
            const double var = ca.sumsq[d] / ca.count - mean * mean;
            st.means(c, d) = mean;
            st.variances(c, d) = std::max(var, out.variance_floor[d]);
          }
        }
        const double denom = sa.self_count + sa.adv_count;
        if (denom > 0.0)
          out.units[u].self_loop[s] =
              std::clamp(sa.self_count / denom, 1e-3, 1.0 - 1e-3);
      }
      if (target_mixtures > st.n_components()) split_mixtures(st, target_mixtures);
    }
  }
  if (stats) stats->total_log_likelihood = total_ll;
  return out;
}

// Decodes one utterance. cluster_triplet scores each cluster's forced
// rise->steady->fall chain and keeps the best; free_loop runs the loop
// automaton. Utterances too short for any admissible chain get a best-effort
// single-unit transcription with the warning flag set.
inline Transcription transcribe(const AUInventory& inv, const Matrix& features,
                                Grammar grammar, const std::string& utterance_id) {
  require(features.rows() >= 1, ErrorCode::empty_input,
          "no frames to transcribe: " + utterance_id);
  Transcription tr;
  tr.utterance_id = utterance_id;
  const std::size_t T = features.rows();

  auto best_effort = [&]() {
    int best_unit = -1;
    double best_ll = -std::numeric_limits<double>::infinity();
    ViterbiResult best_res;
    for (std::size_t u = 0; u < inv.units.size(); ++u) {
      if (inv.units[u].n_states() > T) continue;
      const ViterbiResult r = viterbi_align(inv, {static_cast<int>(u)}, features);
      if (r.log_likelihood > best_ll) {
        best_ll = r.log_likelihood;
        best_unit = static_cast<int>(u);
        best_res = r;
      }
    }
    require(best_unit >= 0, ErrorCode::infeasible_alignment,
            "no unit fits the utterance: " + utterance_id);
    tr.symbols = {inv.units[static_cast<std::size_t>(best_unit)].symbol};
    tr.alignments = {{0, T}};
    tr.log_likelihood = best_ll;
    tr.warning = true;
  };

  if (grammar == Grammar::cluster_triplet) {
    int best_cluster = -1;
    ViterbiResult best_res;
    double best_ll = -std::numeric_limits<double>::infinity();
    std::vector<int> best_chain;
    for (const auto& [cluster, ids] : inv.cluster_map) {
      const std::vector<int> chain{ids[0], ids[1], ids[2]};
      std::size_t chain_states = 0;
      for (int u : chain) chain_states += inv.units[static_cast<std::size_t>(u)].n_states();
      if (T < chain_states) continue;
      const ViterbiResult r = viterbi_align(inv, chain, features);
      if (r.log_likelihood > best_ll) {
        best_ll = r.log_likelihood;
        best_cluster = cluster;
        best_res = r;
        best_chain = chain;
      }
    }
    if (best_cluster < 0) {
      best_effort();
      return tr;
    }
    const detail::FlatStates flat = detail::flatten(inv, best_chain);
    tr.log_likelihood = best_ll;
    std::size_t visit_start = 0;
    for (std::size_t t = 1; t <= best_res.path.size(); ++t) {
      if (t == best_res.path.size() ||
          flat.unit_of[best_res.path[t]] != flat.unit_of[best_res.path[t - 1]]) {
        const std::size_t u =
            static_cast<std::size_t>(best_chain[flat.unit_of[best_res.path[t - 1]]]);
        tr.symbols.push_back(inv.units[u].symbol);
        tr.alignments.emplace_back(visit_start, t);
        visit_start = t;
      }
    }
    return tr;
  }

  // free_loop
  const std::size_t min_states =
      std::min_element(inv.units.begin(), inv.units.end(),
                       [](const auto& a, const auto& b) {
                         return a.n_states() < b.n_states();
                       })
          ->n_states();
  if (T < min_states) {
    best_effort();
    return tr;
  }
  const LoopResult loop = viterbi_free_loop(inv, features);
  tr.log_likelihood = loop.log_likelihood;
  for (const LoopVisit& v : loop.visits) {
    tr.symbols.push_back(inv.units[v.unit].symbol);
    tr.alignments.emplace_back(v.start, v.end);
  }
  return tr;
}

struct SelfTrainConfig {
  std::size_t max_iters = 10;
  double label_change_tol = 0.01;
  std::vector<std::size_t> mixture_schedule = {1, 1, 2, 2, 4, 4, 8};

  void validate() const {
    require(max_iters >= 1, ErrorCode::config_error, "max_iters must be >= 1");
    require(label_change_tol >= 0.0 && label_change_tol < 1.0, ErrorCode::config_error,
            "label change tolerance must be in [0, 1)");
  }
};

struct IterationStat {
  double total_log_likelihood = 0.0;
  double label_change = 1.0;  // vs. previous iteration; 1.0 on the first pass
};

struct ConvergenceReport {
  std::vector<IterationStat> iterations;
  bool converged = false;
  bool oscillated = false;
};

struct SelfTrainResult {
  AUInventory inventory;
  std::vector<Transcription> transcriptions;
  ConvergenceReport report;
};

enum class SelfTrainStage { stage1_syllables, stage2_continuous };

namespace detail {

inline std::vector<int> frame_labels(const AUInventory& inv, const Transcription& tr,
                                     std::size_t T) {
  std::vector<int> labels(T, -1);
  for (std::size_t i = 0; i < tr.symbols.size(); ++i) {
    const int u = inv.unit_index(tr.symbols[i]);
    for (std::size_t t = tr.alignments[i].first;
         t < std::min(tr.alignments[i].second, T); ++t)
      labels[t] = u;
  }
  return labels;
}

}  // namespace detail

// Alternates transcription and Viterbi retraining until the frame-label change
// fraction drops below tolerance, the change fraction fails to decrease for
// three consecutive measurements (flagged as oscillation), or max_iters is
// reached. Stage 1 decodes syllable segments against cluster triplets; stage 2
// decodes continuous utterances with the free loop.
inline SelfTrainResult self_train(const AUInventory& initial,
                                  const std::vector<Matrix>& corpus,
                                  const std::vector<std::string>& utterance_ids,
                                  SelfTrainStage stage, const SelfTrainConfig& cfg) {
  cfg.validate();
  require(corpus.size() == utterance_ids.size(), ErrorCode::dimension_mismatch,
          "corpus / id count mismatch");
  require(!corpus.empty(), ErrorCode::empty_input, "empty self-training corpus");
  const Grammar grammar = stage == SelfTrainStage::stage1_syllables
                              ? Grammar::cluster_triplet
                              : Grammar::free_loop;

  SelfTrainResult res;
  res.inventory = initial;
  std::vector<std::vector<int>> prev_labels;
  std::size_t total_frames = 0;
  for (const Matrix& m : corpus) total_frames += m.rows();

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    std::vector<Transcription> trs(corpus.size());
    const AUInventory& inv = res.inventory;
    parallel_for(corpus.size(), [&](std::size_t i) {
      trs[i] = transcribe(inv, corpus[i], grammar, utterance_ids[i]);
    });

    std::vector<std::vector<int>> labels(corpus.size());
    double ll = 0.0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      labels[i] = detail::frame_labels(inv, trs[i], corpus[i].rows());
      ll += trs[i].log_likelihood;
    }

    IterationStat stat;
    stat.total_log_likelihood = ll;
    if (!prev_labels.empty()) {
      std::size_t changed = 0;
      for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t t = 0; t < labels[i].size(); ++t)
          if (labels[i][t] != prev_labels[i][t]) ++changed;
      stat.label_change = static_cast<double>(changed) / static_cast<double>(total_frames);
    }
    res.report.iterations.push_back(stat);
    res.transcriptions = std::move(trs);

    if (!prev_labels.empty() && stat.label_change < cfg.label_change_tol) {
      res.report.converged = true;
      break;
    }
    const auto& hist = res.report.iterations;
    if (hist.size() >= 4) {  // three measured changes that never decreased
      const double c1 = hist[hist.size() - 3].label_change;
      const double c2 = hist[hist.size() - 2].label_change;
      const double c3 = hist[hist.size() - 1].label_change;
      if (c3 >= c2 && c2 >= c1) {
        res.report.oscillated = true;
        break;
      }
    }
    prev_labels = std::move(labels);

    std::vector<std::vector<std::string>> symbol_seqs(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
      symbol_seqs[i] = res.transcriptions[i].symbols;
    const std::size_t target =
        cfg.mixture_schedule.empty()
            ? 0
            : cfg.mixture_schedule[std::min(it, cfg.mixture_schedule.size() - 1)];
    res.inventory = train_iteration(res.inventory, corpus, symbol_seqs, target);
  }
  return res;
}

}  // namespace aud
