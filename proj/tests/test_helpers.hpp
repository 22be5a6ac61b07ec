#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "aud/types.hpp"

namespace testutil {

// Fresh scratch directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("aud_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline aud::AudioBuffer make_audio(std::vector<double> samples, int sr,
                                   const std::string& id = "utt") {
  aud::AudioBuffer a;
  a.samples = std::move(samples);
  a.sample_rate = sr;
  a.utterance_id = id;
  return a;
}

inline aud::AudioBuffer sine_audio(double freq_hz, double dur_s, int sr,
                                   double amp = 0.5, const std::string& id = "sine") {
  std::vector<double> x(static_cast<std::size_t>(dur_s * sr));
  for (std::size_t n = 0; n < x.size(); ++n)
    x[n] = amp * std::sin(2.0 * 3.14159265358979323846 * freq_hz * n / sr);
  return make_audio(std::move(x), sr, id);
}

// Noise bursts with exact silence gaps; returns burst [start,end) times.
struct BurstSignal {
  aud::AudioBuffer audio;
  std::vector<std::pair<double, double>> bursts;
};

inline BurstSignal burst_signal(std::size_t n_bursts, double burst_s, double gap_s,
                                int sr, unsigned seed, double lead_s = 0.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> noise(-0.5, 0.5);
  const std::size_t burst_n = static_cast<std::size_t>(burst_s * sr);
  const std::size_t gap_n = static_cast<std::size_t>(gap_s * sr);
  const std::size_t lead_n = static_cast<std::size_t>(lead_s * sr);
  BurstSignal sig;
  std::vector<double> x(lead_n, 0.0);
  for (std::size_t b = 0; b < n_bursts; ++b) {
    const double start = static_cast<double>(x.size()) / sr;
    for (std::size_t n = 0; n < burst_n; ++n) x.push_back(noise(rng));
    sig.bursts.emplace_back(start, static_cast<double>(x.size()) / sr);
    if (b + 1 < n_bursts)
      for (std::size_t n = 0; n < gap_n; ++n) x.push_back(0.0);
  }
  for (std::size_t n = 0; n < lead_n; ++n) x.push_back(0.0);
  sig.audio = make_audio(std::move(x), sr, "bursts");
  return sig;
}

inline aud::Matrix random_matrix(std::size_t rows, std::size_t cols,
                                 std::mt19937& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  aud::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = u(rng);
  return m;
}

}  // namespace testutil
