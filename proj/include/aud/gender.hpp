#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "aud/gmm.hpp"
#include "aud/types.hpp"

namespace aud {

enum class Gender { male, female };

inline const char* to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

struct GenderModelSet {
  GaussianMixture ubm;
  GaussianMixture male;
  GaussianMixture female;
  double relevance = 16.0;
};

struct GenderDecision {
  std::string file_id;
  double llr = 0.0;  // average per-frame log-likelihood, male minus female
  Gender label = Gender::female;
};

// UBM on pooled frames, then mean-only MAP adaptation per gender.
inline GenderModelSet train_gender_models(const Matrix& male_frames,
                                          const Matrix& female_frames,
                                          const EmConfig& em, double relevance) {
  require(male_frames.cols() == female_frames.cols(), ErrorCode::dimension_mismatch,
          "male/female feature dimensions differ");
  Matrix pooled(male_frames.rows() + female_frames.rows(), male_frames.cols());
  for (std::size_t t = 0; t < male_frames.rows(); ++t)
    for (std::size_t d = 0; d < male_frames.cols(); ++d)
      pooled(t, d) = male_frames(t, d);
  for (std::size_t t = 0; t < female_frames.rows(); ++t)
    for (std::size_t d = 0; d < female_frames.cols(); ++d)
      pooled(male_frames.rows() + t, d) = female_frames(t, d);

  GenderModelSet models;
  models.relevance = relevance;
  models.ubm = em_fit(pooled, em);
  models.male = map_adapt(models.ubm, male_frames, relevance);
  models.female = map_adapt(models.ubm, female_frames, relevance);
  return models;
}

// Likelihood-ratio test. Ties (llr == 0) go to female.
inline GenderDecision classify_file(const GenderModelSet& models, const Matrix& features,
                                    const std::string& file_id) {
  require(features.rows() >= 1, ErrorCode::empty_input,
          "classification needs at least one frame: " + file_id);
  GenderDecision d;
  d.file_id = file_id;
  d.llr = models.male.average_log_likelihood(features) -
          models.female.average_log_likelihood(features);
  d.label = d.llr > 0.0 ? Gender::male : Gender::female;
  return d;
}

// Majority vote over a speaker's file decisions; a tied vote follows the
// decision with the largest |llr| (file id breaks exact |llr| ties).
inline Gender vote_speaker(const std::vector<GenderDecision>& decisions) {
  require(!decisions.empty(), ErrorCode::empty_input, "no decisions for speaker");
  long male_votes = 0;
  for (const auto& d : decisions)
    if (d.label == Gender::male) ++male_votes;
  const long female_votes = static_cast<long>(decisions.size()) - male_votes;
  if (male_votes != female_votes)
    return male_votes > female_votes ? Gender::male : Gender::female;
  const GenderDecision* strongest = &decisions.front();
  for (const auto& d : decisions) {
    const double a = std::abs(d.llr), b = std::abs(strongest->llr);
    if (a > b || (a == b && d.file_id < strongest->file_id)) strongest = &d;
  }
  return strongest->label;
}

}  // namespace aud
