#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aud/clustering.hpp"
#include "aud/config.hpp"
#include "aud/dtw.hpp"
#include "aud/features.hpp"
#include "aud/gender.hpp"
#include "aud/group_delay.hpp"
#include "aud/hmm.hpp"
#include "aud/manifest.hpp"
#include "aud/metrics.hpp"
#include "aud/serialize.hpp"
#include "aud/types.hpp"
#include "aud/util.hpp"
#include "aud/wav.hpp"

namespace aud {

namespace fs = std::filesystem;

// MFCC (+deltas, +CMS) for one utterance under the pipeline feature config.
inline FeatureSequence utterance_features(const AudioBuffer& audio,
                                          const FeatureConfig& cfg) {
  FeatureSequence f = mfcc(audio, cfg.frame, cfg.n_mels, cfg.n_ceps);
  if (cfg.cms) cepstral_mean_subtract(f);
  if (cfg.deltas) f = with_deltas(f);
  return f;
}

// Frames whose center time falls inside [start, end).
inline Matrix slice_frames(const FeatureSequence& f, double start, double end) {
  std::size_t lo = 0, hi = 0;
  bool found = false;
  for (std::size_t t = 0; t < f.size(); ++t) {
    if (f.frame_times[t] >= start && f.frame_times[t] < end) {
      if (!found) lo = t;
      hi = t + 1;
      found = true;
    }
  }
  if (!found) return Matrix(0, f.dim());
  return f.frames.rows_slice(lo, hi);
}

// Splits a manifest by per-utterance gender decisions; the two outputs are
// disjoint and their union is the input.
inline std::pair<CorpusManifest, CorpusManifest> partition_by_gender(
    const CorpusManifest& manifest, const std::map<std::string, Gender>& decisions) {
  std::vector<std::string> missing;
  for (const ManifestEntry& e : manifest.entries)
    if (!decisions.count(e.utterance_id)) missing.push_back(e.utterance_id);
  if (!missing.empty()) {
    std::string msg = "no gender decision for:";
    for (const std::string& id : missing) msg += " " + id;
    fail(ErrorCode::missing_data, msg);
  }
  CorpusManifest male, female;
  male.root = female.root = manifest.root;
  for (const ManifestEntry& e : manifest.entries)
    (decisions.at(e.utterance_id) == Gender::male ? male : female).entries.push_back(e);
  return {male, female};
}

// Concatenates per-symbol exemplar audio with a linear crossfade at joints.
inline AudioBuffer resynthesize_exemplar(const std::vector<std::string>& symbols,
                                         const std::map<std::string, AudioBuffer>& store,
                                         double crossfade_ms = 5.0) {
  AudioBuffer out;
  out.utterance_id = "resynth";
  if (symbols.empty()) {
    out.sample_rate = store.empty() ? 16000 : store.begin()->second.sample_rate;
    return out;
  }
  for (const std::string& sym : symbols)
    require(store.count(sym), ErrorCode::missing_data, "no exemplar for symbol " + sym);
  out.sample_rate = store.at(symbols.front()).sample_rate;
  for (const std::string& sym : symbols)
    require(store.at(sym).sample_rate == out.sample_rate, ErrorCode::config_error,
            "exemplar sample rates differ");
  const std::size_t c = static_cast<std::size_t>(
      std::lround(crossfade_ms / 1000.0 * out.sample_rate));

  out.samples = store.at(symbols.front()).samples;
  for (std::size_t k = 1; k < symbols.size(); ++k) {
    const std::vector<double>& next = store.at(symbols[k]).samples;
    const std::size_t ce = std::min({c, out.samples.size(), next.size()});
    const std::size_t joint = out.samples.size() - ce;
    for (std::size_t i = 0; i < ce; ++i) {
      const double t = static_cast<double>(i + 1) / static_cast<double>(ce + 1);
      out.samples[joint + i] = out.samples[joint + i] * (1.0 - t) + next[i] * t;
    }
    out.samples.insert(out.samples.end(), next.begin() + static_cast<long>(ce),
                       next.end());
  }
  return out;
}

struct RunPaths {
  fs::path out;
  fs::path segments_dir, transcriptions_dir, alignments_dir, exemplars_dir;
  fs::path reports_dir, stages_dir;
  fs::path clusters_tsv, medoids_tsv;
  fs::path inventory_init, inventory_stage1, inventory_stage2;

  explicit RunPaths(const fs::path& out_dir)
      : out(out_dir),
        segments_dir(out_dir / "segments"),
        transcriptions_dir(out_dir / "transcriptions"),
        alignments_dir(out_dir / "alignments"),
        exemplars_dir(out_dir / "exemplars"),
        reports_dir(out_dir / "reports"),
        stages_dir(out_dir / "stages"),
        clusters_tsv(out_dir / "clusters.tsv"),
        medoids_tsv(out_dir / "medoids.tsv"),
        inventory_init(out_dir / "inventory_init.json"),
        inventory_stage1(out_dir / "inventory_stage1.json"),
        inventory_stage2(out_dir / "inventory_stage2.json") {}
};

struct RunResult {
  RunPaths paths;
  BitrateReport bitrate;
  std::vector<std::string> skipped_stages;
};

namespace detail {

class RunLock {
 public:
  explicit RunLock(const fs::path& dir) : path_(dir / ".aud_lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    require(fd_ >= 0, ErrorCode::io_error,
            "output directory is locked by another run: " + path_.string());
  }
  ~RunLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

inline uint64_t hash_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(in.good(), ErrorCode::io_error, "cannot hash: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

// Stage bookkeeping: a stage is complete when its .done file records hashes
// that match every current input and output artifact.
class StageTracker {
 public:
  StageTracker(fs::path stages_dir, uint64_t context_hash)
      : dir_(std::move(stages_dir)), context_(context_hash) {}

  bool is_complete(const std::string& stage, const std::vector<fs::path>& inputs,
                   const std::vector<fs::path>& outputs) const {
    const fs::path done = dir_ / (stage + ".done");
    if (!fs::exists(done)) return false;
    nlohmann::json j;
    try {
      std::ifstream in(done);
      in >> j;
    } catch (...) {
      return false;
    }
    if (j.value("context", std::string()) != std::to_string(context_)) return false;
    auto check = [&](const char* key, const std::vector<fs::path>& files) {
      if (!j.contains(key)) return false;
      const auto& rec = j[key];
      for (const fs::path& p : files) {
        if (!fs::exists(p)) return false;
        const auto it = rec.find(p.string());
        if (it == rec.end()) return false;
        if (it->get<std::string>() != std::to_string(hash_file(p))) return false;
      }
      return true;
    };
    return check("inputs", inputs) && check("outputs", outputs);
  }

  void mark_complete(const std::string& stage, const std::vector<fs::path>& inputs,
                     const std::vector<fs::path>& outputs) const {
    nlohmann::json j;
    j["stage"] = stage;
    j["context"] = std::to_string(context_);
    for (const fs::path& p : inputs) j["inputs"][p.string()] = std::to_string(hash_file(p));
    for (const fs::path& p : outputs)
      j["outputs"][p.string()] = std::to_string(hash_file(p));
    std::ofstream os(dir_ / (stage + ".done"));
    os << j.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  uint64_t context_;
};

struct SegmentRecord {
  std::string segment_id;  // utt#ordinal
  std::string utterance_id;
  std::size_t ordinal = 0;  // index in the utterance's segment file
  Segment segment;
};

inline std::string segment_id(const std::string& utt, std::size_t ordinal) {
  return utt + "#" + std::to_string(ordinal);
}

}  // namespace detail

// Runs segment -> cluster -> init -> selftrain1 -> selftrain2 -> transcribe ->
// eval, writing every stage artifact under out_dir. Completed stages (matching
// artifact checksums) are skipped on rerun. Any stage error is rethrown with a
// stage tag; partial artifacts are retained.
inline RunResult run_pipeline(const CorpusManifest& manifest,
                              const PipelineConfig& config, const fs::path& out_dir) {
  require(manifest.entries.size() >= 2, ErrorCode::empty_input,
          "pipeline needs at least 2 utterances");
  RunPaths paths(out_dir);
  fs::create_directories(paths.out);
  for (const fs::path& d :
       {paths.segments_dir, paths.transcriptions_dir, paths.alignments_dir,
        paths.exemplars_dir, paths.reports_dir, paths.stages_dir})
    fs::create_directories(d);
  detail::RunLock lock(paths.out);

  // Context hash covers the configuration and the corpus (manifest + audio).
  uint64_t ctx = fnv1a(default_config_text());  // schema guard
  {
    std::ostringstream cfg_ss;
    cfg_ss << config.seed << '|' << config.features.frame.frame_ms << '|'
           << config.features.frame.hop_ms << '|' << config.features.frame.pre_emphasis
           << '|' << static_cast<int>(config.features.frame.window) << '|'
           << config.features.n_mels << '|' << config.features.n_ceps << '|'
           << config.features.deltas << '|' << config.features.cms << '|'
           << config.segmenter.wsf << '|' << config.segmenter.inverse_energy_floor
           << '|' << config.segmenter.min_segment_ms << '|'
           << config.segmenter.silence_percentile << '|'
           << static_cast<int>(config.dtw.local_distance) << '|'
           << static_cast<int>(config.dtw.step_pattern) << '|'
           << config.dtw.band_ratio << '|' << config.dtw.length_normalize << '|'
           << config.cluster.min_cluster_size << '|'
           << config.cluster.target_clusters_lo << '|'
           << config.cluster.target_clusters_hi << '|' << config.hmm.n_states << '|'
           << config.hmm.sil_states << '|' << config.hmm.variance_floor_scale << '|'
           << config.selftrain.max_iters << '|' << config.selftrain.label_change_tol;
    for (std::size_t m : config.selftrain.mixture_schedule) cfg_ss << ',' << m;
    ctx = fnv1a(cfg_ss.str(), ctx);
  }
  for (const ManifestEntry& e : manifest.entries) {
    ctx = fnv1a(e.utterance_id, ctx);
    ctx = fnv1a(std::to_string(detail::hash_file(e.path)), ctx);
  }
  detail::StageTracker tracker(paths.stages_dir, ctx);

  RunResult result{paths, {}, {}};
  auto stage_guard = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      fail(e.code(), "[stage " + name + "] " + e.what());
    }
  };

  std::vector<fs::path> segment_files;
  for (const ManifestEntry& e : manifest.entries)
    segment_files.push_back(paths.segments_dir / (e.utterance_id + ".tsv"));

  auto load_audio = [&](const ManifestEntry& e) {
    AudioBuffer a = load_wav(e.path, config.downmix_stereo);
    a.utterance_id = e.utterance_id;
    return a;
  };

  // --- segment ---------------------------------------------------------
  {
    std::vector<fs::path> outputs = segment_files;
    outputs.push_back(paths.reports_dir / "segmentation.txt");
    if (tracker.is_complete("segment", {}, outputs)) {
      result.skipped_stages.push_back("segment");
    } else {
      stage_guard("segment", [&] {
        std::vector<std::vector<Segment>> all(manifest.entries.size());
        parallel_for(manifest.entries.size(), [&](std::size_t i) {
          const AudioBuffer audio = load_audio(manifest.entries[i]);
          all[i] = segment_syllables(audio, config.features.frame, config.segmenter);
        });
        std::size_t n_syll = 0, n_sil = 0;
        double total_dur = 0.0;
        std::map<int, std::size_t> hist;  // 50 ms duration bins
        for (std::size_t i = 0; i < all.size(); ++i) {
          save_segments(segment_files[i].string(), all[i]);
          for (const Segment& s : all[i]) {
            (s.kind == SegmentKind::syllable ? n_syll : n_sil) += 1;
            if (s.kind == SegmentKind::syllable) {
              total_dur += s.duration();
              ++hist[static_cast<int>(s.duration() / 0.050)];
            }
          }
        }
        std::ostringstream rep;
        rep << "segmentation summary\n"
            << "utterances: " << manifest.entries.size() << "\n"
            << "syllable segments: " << n_syll << "\n"
            << "silence segments: " << n_sil << "\n"
            << "total syllable duration (s): " << total_dur << "\n"
            << "duration histogram (50 ms bins):\n";
        for (const auto& [bin, count] : hist)
          rep << "  [" << bin * 50 << "," << (bin + 1) * 50 << ") ms: " << count << "\n";
        detail::write_text_file((paths.reports_dir / "segmentation.txt").string(),
                                rep.str());
      });
      tracker.mark_complete("segment", {}, outputs);
    }
  }

  // Shared loaders over segment artifacts.
  auto load_all_segments = [&] {
    std::vector<detail::SegmentRecord> recs;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      const auto segs = load_segments(segment_files[i].string(),
                                      manifest.entries[i].utterance_id);
      for (std::size_t k = 0; k < segs.size(); ++k)
        recs.push_back({detail::segment_id(manifest.entries[i].utterance_id, k),
                        manifest.entries[i].utterance_id, k, segs[k]});
    }
    return recs;
  };

  // Per-utterance features for segment slicing, computed on demand.
  auto corpus_features = [&] {
    std::vector<FeatureSequence> feats(manifest.entries.size());
    parallel_for(manifest.entries.size(), [&](std::size_t i) {
      feats[i] = utterance_features(load_audio(manifest.entries[i]), config.features);
    });
    return feats;
  };

  // --- cluster ---------------------------------------------------------
  {
    const std::vector<fs::path> inputs = segment_files;
    const std::vector<fs::path> outputs = {paths.clusters_tsv, paths.medoids_tsv};
    if (tracker.is_complete("cluster", inputs, outputs)) {
      result.skipped_stages.push_back("cluster");
    } else {
      stage_guard("cluster", [&] {
        const auto recs = load_all_segments();
        const auto feats = corpus_features();
        std::map<std::string, std::size_t> utt_index;
        for (std::size_t i = 0; i < manifest.entries.size(); ++i)
          utt_index[manifest.entries[i].utterance_id] = i;

        std::vector<Matrix> seg_feats;
        std::vector<std::string> seg_ids;
        for (const auto& r : recs) {
          if (r.segment.kind != SegmentKind::syllable) continue;  // silence excluded
          Matrix m = slice_frames(feats[utt_index[r.utterance_id]], r.segment.start,
                                  r.segment.end);
          if (m.rows() == 0) continue;
          seg_feats.push_back(std::move(m));
          seg_ids.push_back(r.segment_id);
        }
        require(seg_feats.size() >= 2, ErrorCode::empty_input,
                "fewer than 2 syllable segments in corpus");

        const SimilarityMatrix sim =
            build_similarity_matrix(seg_feats, seg_ids, config.dtw);
        const int k = auto_select_k(sim, config.cluster.min_cluster_size,
                                    config.cluster.target_clusters_lo,
                                    config.cluster.target_clusters_hi);
        const ClusterAssignment assign =
            knn_graph_cluster(sim, k, config.cluster.min_cluster_size);

        std::ostringstream tsv;
        for (std::size_t i = 0; i < seg_ids.size(); ++i)
          tsv << seg_ids[i] << '\t' << assign.labels[i] << '\n';
        detail::write_text_file(paths.clusters_tsv.string(), tsv.str());

        // Medoid per cluster: member with the greatest within-cluster
        // similarity mass (ties to the lower segment index).
        std::ostringstream med;
        for (int c = 0; c < assign.n_clusters; ++c) {
          std::size_t best = 0;
          double best_mass = -1.0;
          for (std::size_t i = 0; i < seg_ids.size(); ++i) {
            if (assign.labels[i] != c) continue;
            double mass = 0.0;
            for (std::size_t j = 0; j < seg_ids.size(); ++j)
              if (assign.labels[j] == c && j != i) mass += sim.values(i, j);
            if (mass > best_mass) {
              best_mass = mass;
              best = i;
            }
          }
          med << c << '\t' << seg_ids[best] << '\n';
        }
        detail::write_text_file(paths.medoids_tsv.string(), med.str());
      });
      tracker.mark_complete("cluster", inputs, outputs);
    }
  }

  // --- init ------------------------------------------------------------
  {
    std::vector<fs::path> inputs = segment_files;
    inputs.push_back(paths.clusters_tsv);
    inputs.push_back(paths.medoids_tsv);
    std::vector<fs::path> outputs = {paths.inventory_init};
    if (tracker.is_complete("init", inputs, outputs) &&
        fs::exists(paths.exemplars_dir / "SIL.wav")) {
      result.skipped_stages.push_back("init");
    } else {
      stage_guard("init", [&] {
        const auto recs = load_all_segments();
        const auto feats = corpus_features();
        std::map<std::string, std::size_t> utt_index;
        for (std::size_t i = 0; i < manifest.entries.size(); ++i)
          utt_index[manifest.entries[i].utterance_id] = i;
        std::map<std::string, const detail::SegmentRecord*> rec_by_id;
        for (const auto& r : recs) rec_by_id[r.segment_id] = &r;

        // clusters.tsv drives which segments participate.
        std::vector<Matrix> seg_feats;
        std::vector<int> labels;
        int n_clusters = 0;
        {
          std::istringstream ss(detail::read_text_file(paths.clusters_tsv.string()));
          std::string line;
          while (std::getline(ss, line)) {
            if (line.empty()) continue;
            const auto tab = line.find('\t');
            require(tab != std::string::npos, ErrorCode::format_error,
                    "bad clusters.tsv line: " + line);
            const std::string id = line.substr(0, tab);
            const int label = std::stoi(line.substr(tab + 1));
            const auto* r = rec_by_id.at(id);
            seg_feats.push_back(slice_frames(feats[utt_index[r->utterance_id]],
                                             r->segment.start, r->segment.end));
            labels.push_back(label);
            n_clusters = std::max(n_clusters, label + 1);
          }
        }
        ClusterAssignment assign;
        assign.labels = labels;
        assign.n_clusters = n_clusters;

        Matrix silence_pool;
        for (const auto& r : recs)
          if (r.segment.kind == SegmentKind::silence) {
            const Matrix m = slice_frames(feats[utt_index[r.utterance_id]],
                                          r.segment.start, r.segment.end);
            for (std::size_t t = 0; t < m.rows(); ++t) silence_pool.append_row(m.row(t));
          }

        const AUInventory inv =
            init_inventory(assign, seg_feats, silence_pool, config.hmm);
        save_inventory(paths.inventory_init.string(), inv);

        // Exemplars: medoid audio split into thirds -> rise/steady/fall.
        std::istringstream med(detail::read_text_file(paths.medoids_tsv.string()));
        std::string line;
        while (std::getline(med, line)) {
          if (line.empty()) continue;
          const auto tab = line.find('\t');
          const int c = std::stoi(line.substr(0, tab));
          const std::string id = line.substr(tab + 1);
          const auto* r = rec_by_id.at(id);
          const AudioBuffer audio =
              load_audio(manifest.entries[utt_index[r->utterance_id]]);
          const auto s0 = static_cast<std::size_t>(r->segment.start * audio.sample_rate);
          const auto s1 = std::min(
              audio.samples.size(),
              static_cast<std::size_t>(r->segment.end * audio.sample_rate));
          const std::size_t len = s1 - s0;
          const char* suffix[3] = {"R", "S", "F"};
          for (int part = 0; part < 3; ++part) {
            AudioBuffer ex;
            ex.sample_rate = audio.sample_rate;
            const std::size_t a = s0 + len * static_cast<std::size_t>(part) / 3;
            const std::size_t b = s0 + len * static_cast<std::size_t>(part + 1) / 3;
            ex.samples.assign(audio.samples.begin() + static_cast<long>(a),
                              audio.samples.begin() + static_cast<long>(b));
            char name[32];
            std::snprintf(name, sizeof name, "C%02d_%s.wav", c, suffix[part]);
            write_wav((paths.exemplars_dir / name).string(), ex);
          }
        }
        // SIL exemplar: the longest silence stretch, capped at 200 ms.
        const detail::SegmentRecord* longest = nullptr;
        for (const auto& r : recs)
          if (r.segment.kind == SegmentKind::silence &&
              (!longest || r.segment.duration() > longest->segment.duration()))
            longest = &r;
        AudioBuffer sil;
        if (longest) {
          const AudioBuffer audio =
              load_audio(manifest.entries[utt_index[longest->utterance_id]]);
          sil.sample_rate = audio.sample_rate;
          const auto s0 =
              static_cast<std::size_t>(longest->segment.start * audio.sample_rate);
          const auto cap = static_cast<std::size_t>(0.2 * audio.sample_rate);
          const auto s1 = std::min(
              {audio.samples.size(),
               static_cast<std::size_t>(longest->segment.end * audio.sample_rate),
               s0 + cap});
          sil.samples.assign(audio.samples.begin() + static_cast<long>(s0),
                             audio.samples.begin() + static_cast<long>(s1));
        } else {
          const AudioBuffer probe = load_audio(manifest.entries.front());
          sil.sample_rate = probe.sample_rate;
          sil.samples.assign(static_cast<std::size_t>(0.05 * probe.sample_rate), 0.0);
        }
        write_wav((paths.exemplars_dir / "SIL.wav").string(), sil);
      });
      tracker.mark_complete("init", inputs, outputs);
    }
  }

  // --- selftrain1 ------------------------------------------------------
  auto selftrain_report_json = [](const ConvergenceReport& rep) {
    nlohmann::ordered_json j;
    j["converged"] = rep.converged;
    j["oscillated"] = rep.oscillated;
    j["iterations"] = nlohmann::ordered_json::array();
    for (const IterationStat& s : rep.iterations)
      j["iterations"].push_back({{"total_log_likelihood", s.total_log_likelihood},
                                 {"label_change", s.label_change}});
    return j.dump(2) + "\n";
  };

  {
    std::vector<fs::path> inputs = segment_files;
    inputs.push_back(paths.inventory_init);
    const std::vector<fs::path> outputs = {paths.inventory_stage1,
                                           paths.reports_dir / "selftrain1.json"};
    if (tracker.is_complete("selftrain1", inputs, outputs)) {
      result.skipped_stages.push_back("selftrain1");
    } else {
      stage_guard("selftrain1", [&] {
        const auto recs = load_all_segments();
        const auto feats = corpus_features();
        std::map<std::string, std::size_t> utt_index;
        for (std::size_t i = 0; i < manifest.entries.size(); ++i)
          utt_index[manifest.entries[i].utterance_id] = i;

        std::vector<Matrix> corpus;
        std::vector<std::string> ids;
        for (const auto& r : recs) {
          if (r.segment.kind != SegmentKind::syllable) continue;
          Matrix m = slice_frames(feats[utt_index[r.utterance_id]], r.segment.start,
                                  r.segment.end);
          if (m.rows() == 0) continue;
          corpus.push_back(std::move(m));
          ids.push_back(r.segment_id);
        }
        const AUInventory init = load_inventory(paths.inventory_init.string());
        const SelfTrainResult st = self_train(init, corpus, ids,
                                              SelfTrainStage::stage1_syllables,
                                              config.selftrain);
        save_inventory(paths.inventory_stage1.string(), st.inventory);
        detail::write_text_file((paths.reports_dir / "selftrain1.json").string(),
                                selftrain_report_json(st.report));
      });
      tracker.mark_complete("selftrain1", inputs, outputs);
    }
  }

  // --- selftrain2 ------------------------------------------------------
  {
    const std::vector<fs::path> inputs = {paths.inventory_stage1};
    const std::vector<fs::path> outputs = {paths.inventory_stage2,
                                           paths.reports_dir / "selftrain2.json"};
    if (tracker.is_complete("selftrain2", inputs, outputs)) {
      result.skipped_stages.push_back("selftrain2");
    } else {
      stage_guard("selftrain2", [&] {
        const auto feats = corpus_features();
        std::vector<Matrix> corpus;
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
          corpus.push_back(feats[i].frames);
          ids.push_back(manifest.entries[i].utterance_id);
        }
        const AUInventory stage1 = load_inventory(paths.inventory_stage1.string());
        const SelfTrainResult st = self_train(stage1, corpus, ids,
                                              SelfTrainStage::stage2_continuous,
                                              config.selftrain);
        save_inventory(paths.inventory_stage2.string(), st.inventory);
        detail::write_text_file((paths.reports_dir / "selftrain2.json").string(),
                                selftrain_report_json(st.report));
      });
      tracker.mark_complete("selftrain2", inputs, outputs);
    }
  }

  // --- transcribe ------------------------------------------------------
  std::vector<fs::path> transcription_files, alignment_files;
  for (const ManifestEntry& e : manifest.entries) {
    transcription_files.push_back(paths.transcriptions_dir / (e.utterance_id + ".txt"));
    alignment_files.push_back(paths.alignments_dir / (e.utterance_id + ".tsv"));
  }
  {
    const std::vector<fs::path> inputs = {paths.inventory_stage2};
    std::vector<fs::path> outputs = transcription_files;
    outputs.insert(outputs.end(), alignment_files.begin(), alignment_files.end());
    if (tracker.is_complete("transcribe", inputs, outputs)) {
      result.skipped_stages.push_back("transcribe");
    } else {
      stage_guard("transcribe", [&] {
        const AUInventory inv = load_inventory(paths.inventory_stage2.string());
        const auto feats = corpus_features();
        std::vector<Transcription> trs(manifest.entries.size());
        parallel_for(manifest.entries.size(), [&](std::size_t i) {
          trs[i] = transcribe(inv, feats[i].frames, Grammar::free_loop,
                              manifest.entries[i].utterance_id);
        });
        for (std::size_t i = 0; i < trs.size(); ++i) {
          save_transcription(transcription_files[i].string(), trs[i]);
          save_alignments(alignment_files[i].string(), trs[i]);
        }
      });
      tracker.mark_complete("transcribe", inputs, outputs);
    }
  }

  // --- eval ------------------------------------------------------------
  {
    const std::vector<fs::path> inputs = transcription_files;
    const std::vector<fs::path> outputs = {paths.reports_dir / "bitrate.txt",
                                           paths.reports_dir / "bitrate.json"};
    bool skipped = tracker.is_complete("eval", inputs, outputs);
    if (skipped) result.skipped_stages.push_back("eval");
    stage_guard("eval", [&] {
      std::vector<Transcription> trs;
      double total_dur = 0.0;
      for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        Transcription tr;
        tr.utterance_id = manifest.entries[i].utterance_id;
        tr.symbols = load_transcription_symbols(transcription_files[i].string());
        trs.push_back(std::move(tr));
        total_dur += load_audio(manifest.entries[i]).duration();
      }
      result.bitrate =
          bitrate(trs, total_dur, config.bitrate_exclude_silence);
      if (!skipped) {
        std::ostringstream rep;
        rep << "bitrate report\n"
            << "symbols: " << result.bitrate.n_symbols << "\n"
            << "duration (s): " << result.bitrate.total_duration << "\n"
            << "entropy (bits/symbol): " << result.bitrate.entropy_bits << "\n"
            << "bitrate (bits/s): " << result.bitrate.bitrate << "\n";
        detail::write_text_file((paths.reports_dir / "bitrate.txt").string(), rep.str());
        nlohmann::ordered_json j;
        j["n_symbols"] = result.bitrate.n_symbols;
        j["total_duration"] = result.bitrate.total_duration;
        j["entropy_bits"] = result.bitrate.entropy_bits;
        j["bitrate"] = result.bitrate.bitrate;
        for (const auto& [sym, p] : result.bitrate.unigram) j["unigram"][sym] = p;
        detail::write_text_file((paths.reports_dir / "bitrate.json").string(),
                                j.dump(2) + "\n");
      }
    });
    if (!skipped) tracker.mark_complete("eval", inputs, outputs);
  }

  return result;
}

}  // namespace aud
