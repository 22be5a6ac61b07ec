#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "aud/dtw.hpp"
#include "aud/framing.hpp"
#include "aud/gmm.hpp"
#include "aud/group_delay.hpp"
#include "aud/hmm.hpp"
#include "aud/types.hpp"

namespace aud {

struct FeatureConfig {
  FrameConfig frame;          // 25 ms / 10 ms, Hamming, pre-emphasis 0.97
  std::size_t n_mels = 26;
  std::size_t n_ceps = 13;
  bool deltas = true;         // 13 -> 39 dims
  bool cms = false;
};

struct ClusterConfig {
  int min_cluster_size = 10;
  int target_clusters_lo = 30;  // 3 AUs per cluster + SIL lands near 100 units
  int target_clusters_hi = 36;
};

struct GenderConfig {
  FrameConfig frame{100.0, 40.0, 0.97, Window::hamming};  // long analysis window
  std::size_t n_mels = 26;
  std::size_t n_ceps = 13;
  std::size_t ubm_components = 64;
  std::size_t em_iterations = 20;
  double relevance = 16.0;
};

struct PipelineConfig {
  FeatureConfig features;
  GroupDelayConfig segmenter;
  DtwConfig dtw;
  ClusterConfig cluster;
  InventoryConfig hmm;
  SelfTrainConfig selftrain;
  GenderConfig gender;
  unsigned seed = 42;
  bool downmix_stereo = false;
  bool bitrate_exclude_silence = false;
  double resynth_crossfade_ms = 5.0;
};

namespace detail {

inline std::vector<std::size_t> parse_size_list(const std::string& v) {
  std::vector<std::size_t> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<std::size_t>(std::stoul(item)));
  return out;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorCode::config_error, "bad boolean for " + key + ": " + v);
}

}  // namespace detail

// Applies one dotted key. Unknown keys are config errors so typos surface.
inline void apply_config_key(PipelineConfig& cfg, const std::string& key,
                             const std::string& value) {
  auto d = [&] { return std::stod(value); };
  auto i = [&] { return std::stoi(value); };
  auto u = [&] { return static_cast<std::size_t>(std::stoul(value)); };
  auto b = [&] { return detail::parse_bool(value, key); };

  if (key == "features.frame_ms") cfg.features.frame.frame_ms = d();
  else if (key == "features.hop_ms") cfg.features.frame.hop_ms = d();
  else if (key == "features.pre_emphasis") cfg.features.frame.pre_emphasis = d();
  else if (key == "features.window") {
    if (value == "hamming") cfg.features.frame.window = Window::hamming;
    else if (value == "rectangular") cfg.features.frame.window = Window::rectangular;
    else fail(ErrorCode::config_error, "unknown window: " + value);
  }
  else if (key == "features.n_mels") cfg.features.n_mels = u();
  else if (key == "features.n_ceps") cfg.features.n_ceps = u();
  else if (key == "features.deltas") cfg.features.deltas = b();
  else if (key == "features.cms") cfg.features.cms = b();
  else if (key == "segmenter.wsf") cfg.segmenter.wsf = i();
  else if (key == "segmenter.inverse_energy_floor") cfg.segmenter.inverse_energy_floor = d();
  else if (key == "segmenter.min_segment_ms") cfg.segmenter.min_segment_ms = d();
  else if (key == "segmenter.silence_percentile") cfg.segmenter.silence_percentile = d();
  else if (key == "segmenter.silence_energy_floor") cfg.segmenter.silence_energy_floor = d();
  else if (key == "dtw.local_distance") {
    if (value == "euclidean") cfg.dtw.local_distance = LocalDistance::euclidean;
    else if (value == "cosine") cfg.dtw.local_distance = LocalDistance::cosine;
    else fail(ErrorCode::config_error, "unknown local distance: " + value);
  }
  else if (key == "dtw.step_pattern") {
    if (value == "symmetric1") cfg.dtw.step_pattern = StepPattern::symmetric1;
    else if (value == "symmetric2") cfg.dtw.step_pattern = StepPattern::symmetric2;
    else fail(ErrorCode::config_error, "unknown step pattern: " + value);
  }
  else if (key == "dtw.band_ratio") cfg.dtw.band_ratio = d();
  else if (key == "dtw.length_normalize") cfg.dtw.length_normalize = b();
  else if (key == "cluster.min_cluster_size") cfg.cluster.min_cluster_size = i();
  else if (key == "cluster.target_clusters_lo") cfg.cluster.target_clusters_lo = i();
  else if (key == "cluster.target_clusters_hi") cfg.cluster.target_clusters_hi = i();
  else if (key == "hmm.n_states") cfg.hmm.n_states = u();
  else if (key == "hmm.sil_states") cfg.hmm.sil_states = u();
  else if (key == "hmm.self_loop_init") cfg.hmm.self_loop_init = d();
  else if (key == "hmm.sil_self_loop_init") cfg.hmm.sil_self_loop_init = d();
  else if (key == "hmm.variance_floor_scale") cfg.hmm.variance_floor_scale = d();
  else if (key == "hmm.mean_offset_scale") cfg.hmm.mean_offset_scale = d();
  else if (key == "selftrain.max_iters") cfg.selftrain.max_iters = u();
  else if (key == "selftrain.label_change_tol") cfg.selftrain.label_change_tol = d();
  else if (key == "selftrain.mixture_schedule")
    cfg.selftrain.mixture_schedule = detail::parse_size_list(value);
  else if (key == "gender.frame_ms") cfg.gender.frame.frame_ms = d();
  else if (key == "gender.hop_ms") cfg.gender.frame.hop_ms = d();
  else if (key == "gender.n_mels") cfg.gender.n_mels = u();
  else if (key == "gender.n_ceps") cfg.gender.n_ceps = u();
  else if (key == "gender.ubm_components") cfg.gender.ubm_components = u();
  else if (key == "gender.em_iterations") cfg.gender.em_iterations = u();
  else if (key == "gender.relevance") cfg.gender.relevance = d();
  else if (key == "seed") cfg.seed = static_cast<unsigned>(std::stoul(value));
  else if (key == "downmix_stereo") cfg.downmix_stereo = b();
  else if (key == "bitrate_exclude_silence") cfg.bitrate_exclude_silence = b();
  else if (key == "resynth_crossfade_ms") cfg.resynth_crossfade_ms = d();
  else fail(ErrorCode::config_error, "unknown config key: " + key);
}

// Plain-text hierarchical key-value config: `section.key = value` lines,
// '#' comments, blank lines ignored.
inline PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::config_error,
            "config line " + std::to_string(lineno) + " is not key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty() && !value.empty(), ErrorCode::config_error,
            "config line " + std::to_string(lineno) + " is not key = value");
    try {
      apply_config_key(cfg, key, value);
    } catch (const std::invalid_argument&) {
      fail(ErrorCode::config_error, "bad value for " + key + ": " + value);
    }
  }
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline std::string default_config_text() {
  const PipelineConfig c;
  std::ostringstream ss;
  ss << "# aud pipeline configuration (defaults)\n"
     << "features.frame_ms = " << c.features.frame.frame_ms << "\n"
     << "features.hop_ms = " << c.features.frame.hop_ms << "\n"
     << "features.pre_emphasis = " << c.features.frame.pre_emphasis << "\n"
     << "features.window = hamming\n"
     << "features.n_mels = " << c.features.n_mels << "\n"
     << "features.n_ceps = " << c.features.n_ceps << "\n"
     << "features.deltas = true\n"
     << "features.cms = false\n"
     << "segmenter.wsf = " << c.segmenter.wsf << "\n"
     << "segmenter.inverse_energy_floor = " << c.segmenter.inverse_energy_floor << "\n"
     << "segmenter.min_segment_ms = " << c.segmenter.min_segment_ms << "\n"
     << "segmenter.silence_percentile = " << c.segmenter.silence_percentile << "\n"
     << "dtw.local_distance = euclidean\n"
     << "dtw.step_pattern = symmetric1\n"
     << "dtw.band_ratio = " << c.dtw.band_ratio << "\n"
     << "dtw.length_normalize = true\n"
     << "cluster.min_cluster_size = " << c.cluster.min_cluster_size << "\n"
     << "cluster.target_clusters_lo = " << c.cluster.target_clusters_lo << "\n"
     << "cluster.target_clusters_hi = " << c.cluster.target_clusters_hi << "\n"
     << "hmm.n_states = " << c.hmm.n_states << "\n"
     << "hmm.sil_states = " << c.hmm.sil_states << "\n"
     << "hmm.self_loop_init = " << c.hmm.self_loop_init << "\n"
     << "hmm.sil_self_loop_init = " << c.hmm.sil_self_loop_init << "\n"
     << "hmm.variance_floor_scale = " << c.hmm.variance_floor_scale << "\n"
     << "hmm.mean_offset_scale = " << c.hmm.mean_offset_scale << "\n"
     << "selftrain.max_iters = " << c.selftrain.max_iters << "\n"
     << "selftrain.label_change_tol = " << c.selftrain.label_change_tol << "\n"
     << "selftrain.mixture_schedule = 1,1,2,2,4,4,8\n"
     << "gender.frame_ms = " << c.gender.frame.frame_ms << "\n"
     << "gender.hop_ms = " << c.gender.frame.hop_ms << "\n"
     << "gender.n_mels = " << c.gender.n_mels << "\n"
     << "gender.n_ceps = " << c.gender.n_ceps << "\n"
     << "gender.ubm_components = " << c.gender.ubm_components << "\n"
     << "gender.em_iterations = " << c.gender.em_iterations << "\n"
     << "gender.relevance = " << c.gender.relevance << "\n"
     << "seed = " << c.seed << "\n"
     << "downmix_stereo = false\n"
     << "bitrate_exclude_silence = false\n"
     << "resynth_crossfade_ms = " << c.resynth_crossfade_ms << "\n";
  return ss.str();
}

}  // namespace aud
