#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aud/gender.hpp"
#include "aud/gmm.hpp"
#include "aud/hmm.hpp"
#include "aud/types.hpp"

namespace aud {

constexpr int kSchemaVersion = 1;

using json = nlohmann::ordered_json;

namespace detail {

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j) {
  Matrix m(j.size(), j.empty() ? 0 : j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r)
    for (std::size_t c = 0; c < j[r].size(); ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

inline json gmm_to_json(const GaussianMixture& g) {
  return json{{"n_components", g.n_components},
              {"dim", g.dim},
              {"weights", g.weights},
              {"means", matrix_to_json(g.means)},
              {"variances", matrix_to_json(g.variances)}};
}

inline GaussianMixture gmm_from_json(const json& j) {
  GaussianMixture g;
  g.n_components = j.at("n_components").get<std::size_t>();
  g.dim = j.at("dim").get<std::size_t>();
  g.weights = j.at("weights").get<std::vector<double>>();
  g.means = matrix_from_json(j.at("means"));
  g.variances = matrix_from_json(j.at("variances"));
  return g;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), ErrorCode::io_error, "cannot write: " + path);
  os << content;
  require(os.good(), ErrorCode::io_error, "short write: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io_error, "cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline void save_inventory(const std::string& path, const AUInventory& inv) {
  json units = json::array();
  for (const AcousticUnitHMM& u : inv.units) {
    json states = json::array();
    for (std::size_t s = 0; s < u.n_states(); ++s) {
      states.push_back(json{{"weights", u.states[s].weights},
                            {"means", detail::matrix_to_json(u.states[s].means)},
                            {"variances", detail::matrix_to_json(u.states[s].variances)},
                            {"self_loop", u.self_loop[s]},
                            {"advance", 1.0 - u.self_loop[s]}});
    }
    units.push_back(json{{"symbol", u.symbol}, {"states", std::move(states)}});
  }
  json clusters = json::object();
  for (const auto& [c, ids] : inv.cluster_map)
    clusters[std::to_string(c)] = json::array({ids[0], ids[1], ids[2]});
  json doc{{"format", "aud-inventory"},
           {"version", kSchemaVersion},
           {"feature_dim", inv.feature_dim},
           {"silence_unit", inv.silence_unit},
           {"variance_floor", inv.variance_floor},
           {"cluster_map", std::move(clusters)},
           {"units", std::move(units)}};
  detail::write_text_file(path, doc.dump(2) + "\n");
}

inline AUInventory load_inventory(const std::string& path) {
  json doc;
  try {
    doc = json::parse(detail::read_text_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::format_error, "invalid inventory JSON: " + path + ": " + e.what());
  }
  require(doc.value("format", "") == "aud-inventory", ErrorCode::format_error,
          "not an inventory document: " + path);
  require(doc.value("version", 0) == kSchemaVersion, ErrorCode::unsupported_format,
          "unsupported inventory version: " + path);
  AUInventory inv;
  inv.feature_dim = doc.at("feature_dim").get<std::size_t>();
  inv.silence_unit = doc.at("silence_unit").get<int>();
  inv.variance_floor = doc.at("variance_floor").get<std::vector<double>>();
  for (const auto& [key, ids] : doc.at("cluster_map").items())
    inv.cluster_map[std::stoi(key)] = {ids[0].get<int>(), ids[1].get<int>(),
                                       ids[2].get<int>()};
  for (const json& ju : doc.at("units")) {
    AcousticUnitHMM u;
    u.symbol = ju.at("symbol").get<std::string>();
    for (const json& js : ju.at("states")) {
      GmmState st;
      st.weights = js.at("weights").get<std::vector<double>>();
      st.means = detail::matrix_from_json(js.at("means"));
      st.variances = detail::matrix_from_json(js.at("variances"));
      const double self = js.at("self_loop").get<double>();
      const double adv = js.at("advance").get<double>();
      require(std::abs(self + adv - 1.0) <= 1e-9, ErrorCode::format_error,
              "transition row does not sum to 1: " + u.symbol);
      u.self_loop.push_back(self);
      u.states.push_back(std::move(st));
    }
    inv.units.push_back(std::move(u));
  }
  return inv;
}

inline void save_gender_models(const std::string& path, const GenderModelSet& models) {
  json doc{{"format", "aud-gender-models"},
           {"version", kSchemaVersion},
           {"relevance", models.relevance},
           {"ubm", detail::gmm_to_json(models.ubm)},
           {"male", detail::gmm_to_json(models.male)},
           {"female", detail::gmm_to_json(models.female)}};
  detail::write_text_file(path, doc.dump(2) + "\n");
}

inline GenderModelSet load_gender_models(const std::string& path) {
  json doc;
  try {
    doc = json::parse(detail::read_text_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::format_error, "invalid model JSON: " + path + ": " + e.what());
  }
  require(doc.value("format", "") == "aud-gender-models", ErrorCode::format_error,
          "not a gender model document: " + path);
  require(doc.value("version", 0) == kSchemaVersion, ErrorCode::unsupported_format,
          "unsupported model version: " + path);
  GenderModelSet m;
  m.relevance = doc.at("relevance").get<double>();
  m.ubm = detail::gmm_from_json(doc.at("ubm"));
  m.male = detail::gmm_from_json(doc.at("male"));
  m.female = detail::gmm_from_json(doc.at("female"));
  return m;
}

// One line of space-separated symbols per utterance file.
inline void save_transcription(const std::string& path, const Transcription& tr) {
  std::string line;
  for (std::size_t i = 0; i < tr.symbols.size(); ++i) {
    if (i) line += ' ';
    line += tr.symbols[i];
  }
  line += '\n';
  detail::write_text_file(path, line);
}

inline std::vector<std::string> load_transcription_symbols(const std::string& path) {
  std::istringstream ss(detail::read_text_file(path));
  std::vector<std::string> symbols;
  std::string sym;
  while (ss >> sym) symbols.push_back(sym);
  return symbols;
}

// Alignment sidecar: symbol<TAB>start_frame<TAB>end_frame.
inline void save_alignments(const std::string& path, const Transcription& tr) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < tr.symbols.size(); ++i)
    ss << tr.symbols[i] << '\t' << tr.alignments[i].first << '\t'
       << tr.alignments[i].second << '\n';
  detail::write_text_file(path, ss.str());
}

// Per-utterance segment file: start_s<TAB>end_s<TAB>kind.
inline void save_segments(const std::string& path, const std::vector<Segment>& segs) {
  std::ostringstream ss;
  char buf[64];
  for (const Segment& s : segs) {
    std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%s\n", s.start, s.end,
                  to_string(s.kind));
    ss << buf;
  }
  detail::write_text_file(path, ss.str());
}

inline std::vector<Segment> load_segments(const std::string& path,
                                          const std::string& utterance_id) {
  std::istringstream ss(detail::read_text_file(path));
  std::vector<Segment> segs;
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Segment s;
    s.utterance_id = utterance_id;
    std::string kind;
    require(static_cast<bool>(ls >> s.start >> s.end >> kind), ErrorCode::format_error,
            "bad segment line in " + path + ": " + line);
    require(kind == "syllable" || kind == "silence", ErrorCode::format_error,
            "bad segment kind in " + path + ": " + kind);
    s.kind = kind == "syllable" ? SegmentKind::syllable : SegmentKind::silence;
    segs.push_back(s);
  }
  return segs;
}

}  // namespace aud
