#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aud/features.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace aud;

namespace {

FrameConfig plain_frames() {
  FrameConfig cfg;
  cfg.pre_emphasis = 0.0;
  cfg.window = Window::rectangular;
  return cfg;
}

}  // namespace

TEST_CASE("STE of silence is exactly zero") {
  const auto audio = testutil::make_audio(std::vector<double>(1600, 0.0), 16000);
  const FeatureSequence e = short_time_energy(audio, plain_frames());
  for (std::size_t m = 0; m < e.size(); ++m) CHECK(e.frames(m, 0) == 0.0);
}

TEST_CASE("STE of a unit sinusoid approaches frame_samples/2") {
  // frame (25 ms = 400 samples) much longer than the 1 kHz period
  const auto audio = testutil::sine_audio(1000.0, 0.5, 16000, 1.0);
  const FeatureSequence e = short_time_energy(audio, plain_frames());
  REQUIRE(e.size() >= 10);
  for (std::size_t m = 0; m < e.size(); ++m)
    CHECK(e.frames(m, 0) == Catch::Approx(200.0).epsilon(0.02));
}

TEST_CASE("STE frame count arithmetic") {
  FrameConfig cfg = plain_frames();
  cfg.frame_ms = 160.0;
  cfg.hop_ms = 80.0;
  const auto audio = testutil::make_audio(std::vector<double>(400, 0.1), 1000);
  const FeatureSequence e = short_time_energy(audio, cfg);
  CHECK(e.size() == 4);  // N=400, frame=160, hop=80
}

TEST_CASE("STE rejects audio shorter than one frame") {
  const auto audio = testutil::make_audio(std::vector<double>(100, 0.1), 16000);
  CHECK_THROWS_MATCHES(short_time_energy(audio, plain_frames()), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::empty_input;
                       }));
}

TEST_CASE("STE shift covariance and quadratic scaling") {
  const int sr = 16000;
  FrameConfig cfg = plain_frames();
  const std::size_t hop = cfg.hop_samples(sr);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  std::vector<double> x(sr / 2);
  for (double& v : x) v = u(rng);

  std::vector<double> delayed(hop, 0.0);
  delayed.insert(delayed.end(), x.begin(), x.end());
  const FeatureSequence e0 = short_time_energy(testutil::make_audio(x, sr), cfg);
  const FeatureSequence e1 =
      short_time_energy(testutil::make_audio(delayed, sr), cfg);
  for (std::size_t m = 0; m + 1 < e0.size(); ++m)
    CHECK(e1.frames(m + 1, 0) == Catch::Approx(e0.frames(m, 0)).margin(1e-9));

  std::vector<double> scaled(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = 0.3 * x[i];
  const FeatureSequence es = short_time_energy(testutil::make_audio(scaled, sr), cfg);
  for (std::size_t m = 0; m < e0.size(); ++m) {
    CHECK(es.frames(m, 0) >= 0.0);
    CHECK(es.frames(m, 0) == Catch::Approx(0.09 * e0.frames(m, 0)).margin(1e-12));
  }
}

TEST_CASE("MFCC of silence equals the DCT of the log-floor vector") {
  const auto audio = testutil::make_audio(std::vector<double>(8000, 0.0), 16000);
  FrameConfig cfg;  // defaults: hamming, pre-emphasis
  const std::size_t n_mels = 26, n_ceps = 13;
  const FeatureSequence f = mfcc(audio, cfg, n_mels, n_ceps);
  const std::vector<double> expected =
      dct2(std::vector<double>(n_mels, std::log(kLogFloor)), n_ceps);
  for (std::size_t t = 0; t < f.size(); ++t)
    for (std::size_t c = 0; c < n_ceps; ++c)
      CHECK(f.frames(t, c) == Catch::Approx(expected[c]).margin(1e-9));
}

TEST_CASE("pure tone at a mel band center lands in that band") {
  const int sr = 16000;
  const std::size_t n_mels = 20;
  FrameConfig cfg;
  cfg.pre_emphasis = 0.0;
  const std::size_t frame = cfg.frame_samples(sr);
  const std::size_t n_fft = next_pow2(frame);
  const MelFilterbank fbank(n_mels, n_fft, sr);

  for (std::size_t band : {std::size_t{4}, std::size_t{9}, std::size_t{14}}) {
    const double tone = fbank.center_hz[band];
    const auto audio = testutil::sine_audio(tone, 0.2, sr, 0.8);

    // Reference: dense DFT magnitudes through the same filterbank weights.
    const std::vector<double> w = window_weights(cfg.window, frame);
    std::vector<double> buf(frame);
    for (std::size_t n = 0; n < frame; ++n) buf[n] = w[n] * audio.samples[n];
    const std::vector<double> mag_ref = oracle::dense_dft_magnitude(buf, n_fft);
    const std::vector<double> mel_ref = fbank.apply(mag_ref);
    std::size_t argmax_ref = 0;
    for (std::size_t b = 0; b < n_mels; ++b)
      if (mel_ref[b] > mel_ref[argmax_ref]) argmax_ref = b;
    REQUIRE(argmax_ref == band);

    // Implementation path (FFT) agrees with the dense reference.
    const std::vector<double> mag = magnitude_spectrum(buf, n_fft);
    const std::vector<double> mel = fbank.apply(mag);
    for (std::size_t b = 0; b < n_mels; ++b)
      CHECK(mel[b] == Catch::Approx(mel_ref[b]).margin(1e-6 * (1.0 + mel_ref[b])));
    std::size_t argmax = 0;
    for (std::size_t b = 0; b < n_mels; ++b)
      if (mel[b] > mel[argmax]) argmax = b;
    CHECK(argmax == band);
  }
}

TEST_CASE("MFCC is deterministic and frame counts match STE") {
  const auto audio = testutil::sine_audio(440.0, 0.3, 16000, 0.5);
  FrameConfig cfg;
  const FeatureSequence a = mfcc(audio, cfg, 26, 13);
  const FeatureSequence b = mfcc(audio, cfg, 26, 13);
  CHECK(a.frames == b.frames);
  const FeatureSequence e = short_time_energy(audio, cfg);
  CHECK(a.size() == e.size());
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t c = 0; c < a.dim(); ++c) CHECK(std::isfinite(a.frames(t, c)));
}

TEST_CASE("MFCC rejects degenerate configs") {
  const auto audio = testutil::sine_audio(440.0, 0.1, 16000);
  FrameConfig cfg;
  CHECK_THROWS_MATCHES(mfcc(audio, cfg, 0, 0), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::config_error;
                       }));
  CHECK_THROWS_AS(mfcc(audio, cfg, 10, 11), Error);
}

TEST_CASE("deltas triple the dimension and CMS zeroes the mean") {
  const auto audio = testutil::sine_audio(300.0, 0.3, 16000, 0.4);
  FrameConfig cfg;
  FeatureSequence f = mfcc(audio, cfg, 26, 13);
  const FeatureSequence d = with_deltas(f);
  CHECK(d.dim() == 39);
  CHECK(d.size() == f.size());

  cepstral_mean_subtract(f);
  for (std::size_t c = 0; c < f.dim(); ++c) {
    double mean = 0.0;
    for (std::size_t t = 0; t < f.size(); ++t) mean += f.frames(t, c);
    CHECK(std::abs(mean / static_cast<double>(f.size())) < 1e-9);
  }
}
