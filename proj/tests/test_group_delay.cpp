#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aud/group_delay.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace aud;

namespace {

FeatureSequence contour_from(const std::vector<double>& e, double hop_s = 0.01) {
  FeatureSequence f;
  f.kind = FeatureKind::energy;
  f.frames = Matrix(e.size(), 1);
  f.frame_times.resize(e.size());
  for (std::size_t m = 0; m < e.size(); ++m) {
    f.frames(m, 0) = e[m];
    f.frame_times[m] = hop_s * static_cast<double>(m);
  }
  return f;
}

std::vector<double> gaussian_valleys(std::size_t M,
                                     const std::vector<double>& centers,
                                     double sigma, double depth) {
  std::vector<double> e(M, 1.0);
  for (std::size_t m = 0; m < M; ++m)
    for (double c : centers) {
      const double d = (static_cast<double>(m) - c) / sigma;
      e[m] -= depth * std::exp(-0.5 * d * d);
    }
  return e;
}

std::size_t argmax_of(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

FrameConfig plain_frames() {
  FrameConfig f;
  f.pre_emphasis = 0.0;
  f.window = Window::rectangular;
  return f;
}

}  // namespace

TEST_CASE("flat contour has zero group delay") {
  GroupDelayConfig cfg;
  const auto tau = min_phase_group_delay(contour_from(std::vector<double>(64, 3.0)), cfg);
  double scale = 0.0;
  for (double t : tau) scale = std::max(scale, std::abs(t));
  CHECK(scale < 1e-6);
}

TEST_CASE("all-zero contour is degenerate") {
  GroupDelayConfig cfg;
  CHECK_THROWS_MATCHES(
      min_phase_group_delay(contour_from(std::vector<double>(32, 0.0)), cfg), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == ErrorCode::degenerate_input; }));
}

TEST_CASE("single Gaussian valley peaks at the valley center") {
  const std::size_t M = 96, m0 = 40;
  const auto e = gaussian_valleys(M, {static_cast<double>(m0)}, 6.0, 0.95);
  GroupDelayConfig cfg;  // default wsf
  const auto tau = min_phase_group_delay(contour_from(e), cfg);
  const std::size_t peak = argmax_of(tau);
  CHECK(std::abs(static_cast<long>(peak) - static_cast<long>(m0)) <= 1);

  // Independent check: numeric phase differentiation of the same constructed
  // minimum-phase signal puts its argmax in the same place.
  const auto r = inverse_energy_contour(e, cfg.inverse_energy_floor);
  const auto x = min_phase_signal(r, cfg.wsf);
  const auto tau_ref = oracle::numeric_group_delay(x, M);
  CHECK(std::abs(static_cast<long>(argmax_of(tau_ref)) - static_cast<long>(m0)) <= 1);
  for (std::size_t k = 0; k < M; ++k)
    CHECK(tau[k] == Catch::Approx(tau_ref[k]).margin(1e-4 * (1.0 + std::abs(tau_ref[k]))));
}

TEST_CASE("two valleys at M/8 separation resolve into two peaks") {
  const std::size_t M = 128;
  const auto e = gaussian_valleys(M, {44.0, 60.0}, 3.0, 0.9);  // separation M/8
  GroupDelayConfig cfg;
  cfg.wsf = 4;  // wide causal window for narrow valleys
  const auto tau = min_phase_group_delay(contour_from(e), cfg);
  const auto peaks = pick_peaks(tau, 3);
  REQUIRE(peaks.size() == 2);
  CHECK(std::abs(static_cast<long>(peaks[0]) - 44L) <= 2);
  CHECK(std::abs(static_cast<long>(peaks[1]) - 60L) <= 2);

  const auto r = inverse_energy_contour(e, cfg.inverse_energy_floor);
  const auto x = min_phase_signal(r, cfg.wsf);
  const auto tau_ref = oracle::numeric_group_delay(x, M);
  const auto peaks_ref = pick_peaks(tau_ref, 3);
  REQUIRE(peaks_ref.size() == 2);
  CHECK(std::abs(static_cast<long>(peaks_ref[0]) - 44L) <= 2);
  CHECK(std::abs(static_cast<long>(peaks_ref[1]) - 60L) <= 2);
}

TEST_CASE("group-delay processing outresolves smoothed-energy valley picking") {
  // Frozen fixture: two narrow valleys 16 frames apart. A 21-frame moving
  // average merges them into one minimum; the group delay keeps both.
  const std::size_t M = 128;
  const auto e = gaussian_valleys(M, {56.0, 72.0}, 3.0, 0.9);

  const std::size_t W = 21;
  std::vector<double> smoothed(M, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    double acc = 0.0;
    std::size_t cnt = 0;
    for (long j = static_cast<long>(m) - static_cast<long>(W / 2);
         j <= static_cast<long>(m) + static_cast<long>(W / 2); ++j)
      if (j >= 0 && j < static_cast<long>(M)) {
        acc += e[static_cast<std::size_t>(j)];
        ++cnt;
      }
    smoothed[m] = acc / static_cast<double>(cnt);
  }
  double mean = 0.0;
  for (double v : smoothed) mean += v;
  mean /= static_cast<double>(M);
  std::vector<std::size_t> minima;
  for (std::size_t m = 1; m + 1 < M; ++m)
    if (smoothed[m] < smoothed[m - 1] && smoothed[m] < smoothed[m + 1] &&
        smoothed[m] < mean)
      minima.push_back(m);
  REQUIRE(minima.size() == 1);  // smoothing has merged the valleys

  GroupDelayConfig cfg;
  cfg.wsf = 4;
  const auto tau = min_phase_group_delay(contour_from(e), cfg);
  const auto peaks = pick_peaks(tau, 3);
  REQUIRE(peaks.size() == 2);
  CHECK(std::abs(static_cast<long>(peaks[0]) - 56L) <= 2);
  CHECK(std::abs(static_cast<long>(peaks[1]) - 72L) <= 2);
}

TEST_CASE("peak count is non-increasing in wsf") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> e(160);
    for (double& v : e) v = u(rng);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (int wsf : {2, 4, 8, 16, 32, 64}) {
      GroupDelayConfig cfg;
      cfg.wsf = wsf;
      const auto tau = min_phase_group_delay(contour_from(e), cfg);
      const std::size_t n = pick_peaks(tau, 2).size();
      CHECK(n <= prev);
      prev = n;
    }
  }
}

TEST_CASE("pure silence yields a single silence segment") {
  const auto audio = testutil::make_audio(std::vector<double>(16000, 0.0), 16000);
  const auto segs = segment_syllables(audio, plain_frames(), GroupDelayConfig{});
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].kind == SegmentKind::silence);
  CHECK(segs[0].start == 0.0);
  CHECK(segs[0].end == Catch::Approx(1.0));
}

TEST_CASE("one continuous constant-energy burst yields one syllable segment") {
  const auto audio = testutil::sine_audio(500.0, 1.0, 16000, 0.5);
  const auto segs = segment_syllables(audio, plain_frames(), GroupDelayConfig{});
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].kind == SegmentKind::syllable);
}

TEST_CASE("five noise bursts separate into five syllable segments") {
  const auto sig = testutil::burst_signal(5, 0.3, 0.1, 16000, 77);
  GroupDelayConfig gcfg;
  gcfg.wsf = 8;
  const auto segs = segment_syllables(sig.audio, plain_frames(), gcfg);
  std::vector<Segment> syllables;
  for (const auto& s : segs)
    if (s.kind == SegmentKind::syllable) syllables.push_back(s);
  REQUIRE(syllables.size() == 5);
  for (std::size_t b = 0; b < 5; ++b) {
    const auto [bs, be] = sig.bursts[b];
    const double lo = std::max(bs, syllables[b].start);
    const double hi = std::min(be, syllables[b].end);
    CHECK((hi - lo) / (be - bs) >= 0.80);
  }
}

TEST_CASE("segments partition the utterance exactly") {
  std::mt19937 rng(5);
  for (unsigned trial = 0; trial < 4; ++trial) {
    const auto sig =
        testutil::burst_signal(2 + trial, 0.25 + 0.05 * trial, 0.15, 16000,
                               100 + trial, trial % 2 ? 0.3 : 0.0);
    const auto segs = segment_syllables(sig.audio, plain_frames(), GroupDelayConfig{});
    REQUIRE(!segs.empty());
    CHECK(segs.front().start == 0.0);
    CHECK(segs.back().end == Catch::Approx(sig.audio.duration()));
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
      CHECK(segs[i].end == Catch::Approx(segs[i + 1].start));
      CHECK(segs[i].start < segs[i].end);
    }
  }
}

TEST_CASE("boundaries are invariant to audio gain") {
  const auto sig = testutil::burst_signal(3, 0.3, 0.15, 16000, 42);
  auto scaled = sig.audio;
  for (double& v : scaled.samples) v *= 4.0;  // exact in floating point
  const auto a = segment_syllables(sig.audio, plain_frames(), GroupDelayConfig{});
  const auto b = segment_syllables(scaled, plain_frames(), GroupDelayConfig{});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].start == b[i].start);
    CHECK(a[i].end == b[i].end);
    CHECK(a[i].kind == b[i].kind);
  }
}

TEST_CASE("leading silence is labeled silence") {
  const auto sig = testutil::burst_signal(2, 0.4, 0.2, 16000, 7, /*lead_s=*/0.5);
  const auto segs = segment_syllables(sig.audio, plain_frames(), GroupDelayConfig{});
  REQUIRE(segs.size() >= 2);
  CHECK(segs.front().kind == SegmentKind::silence);
  CHECK(segs.back().kind == SegmentKind::silence);
}
