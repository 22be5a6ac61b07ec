#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aud {

enum class ErrorCode {
  format_error,        // malformed container / file
  unsupported_format,  // recognized container, unsupported encoding
  empty_input,         // input too short / empty
  config_error,        // invalid configuration value
  degenerate_input,    // input admits no meaningful result (e.g. all-zero contour)
  dimension_mismatch,
  infeasible_band,     // DTW band admits no alignment path
  infeasible_alignment,// sequence shorter than minimum HMM chain length
  io_error,
  missing_data,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

// Dense row-major matrix of doubles. Rows are time frames for feature data.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  Matrix rows_slice(std::size_t begin, std::size_t end) const {
    Matrix out(end - begin, cols_);
    for (std::size_t r = begin; r < end; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(r - begin, c) = (*this)(r, c);
    return out;
  }

  void append_row(std::span<const double> v) {
    if (rows_ == 0 && cols_ == 0) cols_ = v.size();
    data_.insert(data_.end(), v.begin(), v.end());
    ++rows_;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Mono PCM audio, samples in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 0;
  std::string utterance_id;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

enum class FeatureKind { mfcc, energy };

// Time-ordered feature frames plus per-frame center timestamps (seconds).
struct FeatureSequence {
  Matrix frames;                    // T x D
  std::vector<double> frame_times;  // T, strictly increasing
  FeatureKind kind = FeatureKind::mfcc;

  std::size_t size() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
};

enum class SegmentKind { syllable, silence };

struct Segment {
  std::string utterance_id;
  double start = 0.0;  // seconds
  double end = 0.0;    // seconds
  SegmentKind kind = SegmentKind::syllable;

  double duration() const { return end - start; }
};

inline const char* to_string(SegmentKind k) {
  return k == SegmentKind::syllable ? "syllable" : "silence";
}

}  // namespace aud
