// Throwaway exploration harness (not part of the shipped test suite).
#include <cmath>
#include <cstdio>
#include <vector>

#include "aud/features.hpp"
#include "aud/group_delay.hpp"
#include "aud/types.hpp"
#include "test_helpers.hpp"

using namespace aud;

namespace {
FrameConfig plain_frames() {
  FrameConfig f;
  f.pre_emphasis = 0.0;
  f.window = Window::rectangular;
  return f;
}

void show(const char* tag, const AudioBuffer& audio) {
  GroupDelayConfig g;
  const auto ste = short_time_energy(audio, plain_frames());
  const auto tau = min_phase_group_delay(ste, g);
  double mx = -1e300, mean = 0.0;
  for (double t : tau) {
    mx = std::max(mx, t);
    mean += t;
  }
  mean /= static_cast<double>(tau.size());
  double sd = 0.0;
  for (double t : tau) sd += (t - mean) * (t - mean);
  sd = std::sqrt(sd / static_cast<double>(tau.size()));
  std::printf("%-24s M=%zu max tau=%.4g mean=%.4g std=%.4g\n", tag, tau.size(), mx,
              mean, sd);
}
}  // namespace

int main() {
  show("sine constant burst", testutil::sine_audio(500.0, 1.0, 16000, 0.5));
  show("sine 443 Hz", testutil::sine_audio(443.0, 1.0, 16000, 0.5));
  show("bursts 5x300/100", testutil::burst_signal(5, 0.3, 0.1, 16000, 77).audio);
  show("bursts 5x500/200", testutil::burst_signal(5, 0.5, 0.2, 16000, 99).audio);
  show("bursts 2x400/200 lead", testutil::burst_signal(2, 0.4, 0.2, 16000, 7, 0.5).audio);
  {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    std::vector<double> x(16000);
    for (double& v : x) v = u(rng);
    show("constant noise", testutil::make_audio(std::move(x), 16000));
  }
  return 0;
}
