#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "aud/clustering.hpp"
#include "aud/hmm.hpp"
#include "aud/types.hpp"

namespace aud {

struct BitrateReport {
  std::size_t n_symbols = 0;
  double total_duration = 0.0;  // seconds
  double entropy_bits = 0.0;    // unigram entropy, bits/symbol
  double bitrate = 0.0;         // (n_symbols / duration) * entropy
  std::map<std::string, double> unigram;
};

// Unigram-entropy bitrate of a discrete transcription set:
// B = (N / D) * H with H = -sum p log2 p.
inline BitrateReport bitrate(const std::vector<Transcription>& transcriptions,
                             double total_duration, bool exclude_silence = false,
                             const std::string& silence_symbol = "SIL") {
  require(total_duration > 0.0, ErrorCode::config_error,
          "total duration must be positive");
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const Transcription& tr : transcriptions)
    for (const std::string& sym : tr.symbols) {
      if (exclude_silence && sym == silence_symbol) continue;
      ++counts[sym];
      ++total;
    }
  require(total >= 1, ErrorCode::empty_input, "no symbols to measure");

  BitrateReport rep;
  rep.n_symbols = total;
  rep.total_duration = total_duration;
  for (const auto& [sym, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    rep.unigram[sym] = p;
    rep.entropy_bits -= p * std::log2(p);
  }
  rep.bitrate = static_cast<double>(total) / total_duration * rep.entropy_bits;
  return rep;
}

struct BoundaryMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n_hypothesis = 0;
  std::size_t n_reference = 0;
  std::size_t n_matched = 0;
};

// Interior boundaries of a segmentation (segment starts, excluding 0).
inline std::vector<double> interior_boundaries(const std::vector<Segment>& segments) {
  std::vector<double> b;
  for (std::size_t i = 1; i < segments.size(); ++i) b.push_back(segments[i].start);
  return b;
}

// Greedy one-to-one boundary matching within +/-tolerance. The two-pointer
// sweep is symmetric: swapping hypothesis and reference exchanges P and R.
inline BoundaryMetrics boundary_metrics(const std::vector<Segment>& hypothesis,
                                        const std::vector<Segment>& reference,
                                        double tolerance_ms) {
  std::vector<double> h = interior_boundaries(hypothesis);
  std::vector<double> r = interior_boundaries(reference);
  const double tol = tolerance_ms / 1000.0;
  std::size_t i = 0, j = 0, matched = 0;
  while (i < h.size() && j < r.size()) {
    if (std::abs(h[i] - r[j]) <= tol) {
      ++matched;
      ++i;
      ++j;
    } else if (h[i] < r[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  BoundaryMetrics m;
  m.n_hypothesis = h.size();
  m.n_reference = r.size();
  m.n_matched = matched;
  m.precision = h.empty() ? 0.0 : static_cast<double>(matched) / h.size();
  m.recall = r.empty() ? 0.0 : static_cast<double>(matched) / r.size();
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

// Fraction of assigned segments whose cluster's majority class they share.
inline double cluster_purity(const ClusterAssignment& assignment,
                             const std::vector<int>& truth_labels) {
  require(assignment.labels.size() == truth_labels.size(),
          ErrorCode::dimension_mismatch, "label count mismatch");
  std::map<int, std::map<int, std::size_t>> by_cluster;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
    if (assignment.labels[i] == kUnassigned) continue;
    ++by_cluster[assignment.labels[i]][truth_labels[i]];
    ++assigned;
  }
  require(assigned > 0, ErrorCode::empty_input, "no assigned segments");
  std::size_t dominant = 0;
  for (const auto& [cluster, classes] : by_cluster) {
    std::size_t best = 0;
    for (const auto& [cls, n] : classes) best = std::max(best, n);
    dominant += best;
  }
  return static_cast<double>(dominant) / static_cast<double>(assigned);
}

// Fraction of frames whose AU symbol is unchanged between two transcription
// passes over the same corpus. Requires frame alignments on both sides.
inline double label_stability(const std::vector<Transcription>& a,
                              const std::vector<Transcription>& b) {
  require(a.size() == b.size(), ErrorCode::dimension_mismatch,
          "transcription sets cover different corpora");
  std::size_t total = 0, same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(a[i].utterance_id == b[i].utterance_id, ErrorCode::dimension_mismatch,
            "utterance order mismatch: " + a[i].utterance_id);
    require(!a[i].alignments.empty() && !b[i].alignments.empty(),
            ErrorCode::missing_data, "alignments required: " + a[i].utterance_id);
    const std::size_t Ta = a[i].alignments.back().second;
    const std::size_t Tb = b[i].alignments.back().second;
    require(Ta == Tb, ErrorCode::dimension_mismatch,
            "frame count mismatch: " + a[i].utterance_id);
    std::vector<std::string> la(Ta), lb(Tb);
    for (std::size_t k = 0; k < a[i].symbols.size(); ++k)
      for (std::size_t t = a[i].alignments[k].first; t < a[i].alignments[k].second; ++t)
        la[t] = a[i].symbols[k];
    for (std::size_t k = 0; k < b[i].symbols.size(); ++k)
      for (std::size_t t = b[i].alignments[k].first; t < b[i].alignments[k].second; ++t)
        lb[t] = b[i].symbols[k];
    for (std::size_t t = 0; t < Ta; ++t) {
      ++total;
      if (la[t] == lb[t]) ++same;
    }
  }
  require(total > 0, ErrorCode::empty_input, "no frames to compare");
  return static_cast<double>(same) / static_cast<double>(total);
}

}  // namespace aud
