#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aud/types.hpp"

namespace aud {

struct ManifestEntry {
  std::string utterance_id;
  std::string path;     // resolved absolute/relative path
  std::string speaker;
  std::string group;    // optional: voting group or gender label
};

// UTF-8 TSV corpus manifest: utt_id<TAB>path<TAB>speaker[<TAB>group].
// Relative wav paths resolve against the manifest's directory.
struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::string root;
};

inline CorpusManifest load_manifest(const std::string& path,
                                    bool check_paths = true) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open manifest: " + path);
  CorpusManifest m;
  m.root = std::filesystem::path(path).parent_path().string();

  std::set<std::string> seen;
  std::vector<std::string> missing;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::istringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    require(cols.size() >= 3, ErrorCode::format_error,
            "manifest line " + std::to_string(lineno) + " needs utt_id, path, speaker");
    ManifestEntry e;
    e.utterance_id = cols[0];
    e.speaker = cols[2];
    if (cols.size() >= 4) e.group = cols[3];
    std::filesystem::path wav(cols[1]);
    if (wav.is_relative() && !m.root.empty()) wav = std::filesystem::path(m.root) / wav;
    e.path = wav.string();
    require(seen.insert(e.utterance_id).second, ErrorCode::format_error,
            "duplicate utterance id: " + e.utterance_id);
    if (check_paths && !std::filesystem::exists(e.path)) missing.push_back(e.path);
    m.entries.push_back(std::move(e));
  }
  if (!missing.empty()) {
    std::string msg = "manifest references missing files:";
    for (const std::string& p : missing) msg += "\n  " + p;
    fail(ErrorCode::missing_data, msg);
  }
  return m;
}

inline void save_manifest(const std::string& path, const CorpusManifest& m) {
  std::ofstream os(path);
  require(os.good(), ErrorCode::io_error, "cannot write manifest: " + path);
  for (const ManifestEntry& e : m.entries) {
    os << e.utterance_id << '\t' << e.path << '\t' << e.speaker;
    if (!e.group.empty()) os << '\t' << e.group;
    os << '\n';
  }
  require(os.good(), ErrorCode::io_error, "short write: " + path);
}

}  // namespace aud
