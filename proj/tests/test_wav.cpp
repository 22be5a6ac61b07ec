#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <fstream>

#include "aud/wav.hpp"
#include "test_helpers.hpp"

using namespace aud;

namespace {

std::vector<char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_pcm16(const std::string& path, const std::vector<int16_t>& pcm, int sr,
                 int channels = 1) {
  AudioBuffer a;
  a.sample_rate = sr;
  // hand-rolled writer so the reader is tested against known bytes
  std::ofstream os(path, std::ios::binary);
  auto u32 = [&](uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](uint16_t v) { os.write(reinterpret_cast<const char*>(&v), 2); };
  const uint32_t data_len = static_cast<uint32_t>(pcm.size() * 2);
  os.write("RIFF", 4);
  u32(36 + data_len);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  u32(16);
  u16(1);
  u16(static_cast<uint16_t>(channels));
  u32(static_cast<uint32_t>(sr));
  u32(static_cast<uint32_t>(sr * 2 * channels));
  u16(static_cast<uint16_t>(2 * channels));
  u16(16);
  os.write("data", 4);
  u32(data_len);
  for (int16_t s : pcm) u16(static_cast<uint16_t>(s));
}

}  // namespace

TEST_CASE("16-bit PCM scaling") {
  testutil::TempDir tmp("wav");
  write_pcm16(tmp.file("a.wav"), {0, 16384, -32768}, 16000);
  const AudioBuffer a = load_wav(tmp.file("a.wav"));
  REQUIRE(a.sample_rate == 16000);
  REQUIRE(a.samples.size() == 3);
  CHECK(a.samples[0] == 0.0);
  CHECK(a.samples[1] == 0.5);
  CHECK(a.samples[2] == -1.0);
}

TEST_CASE("round trip is byte-identical for 16-bit mono") {
  testutil::TempDir tmp("wav");
  std::vector<int16_t> pcm;
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> d(-32768, 32767);
  for (int i = 0; i < 4096; ++i) pcm.push_back(static_cast<int16_t>(d(rng)));
  write_pcm16(tmp.file("in.wav"), pcm, 8000);

  const AudioBuffer a = load_wav(tmp.file("in.wav"));
  write_wav(tmp.file("out.wav"), a);
  CHECK(read_bytes(tmp.file("in.wav")) == read_bytes(tmp.file("out.wav")));
}

TEST_CASE("one second of 16 kHz audio") {
  testutil::TempDir tmp("wav");
  write_pcm16(tmp.file("s.wav"), std::vector<int16_t>(16000, 100), 16000);
  const AudioBuffer a = load_wav(tmp.file("s.wav"));
  CHECK(a.samples.size() == 16000);
  CHECK(a.sample_rate == 16000);
  CHECK(a.duration() == Catch::Approx(1.0));
}

TEST_CASE("stereo handling") {
  testutil::TempDir tmp("wav");
  // L/R interleaved: (100, 300), (-200, 400)
  write_pcm16(tmp.file("st.wav"), {100, 300, -200, 400}, 16000, 2);
  CHECK_THROWS_MATCHES(load_wav(tmp.file("st.wav")), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::unsupported_format;
                       }));
  const AudioBuffer a = load_wav(tmp.file("st.wav"), /*downmix=*/true);
  REQUIRE(a.samples.size() == 2);
  CHECK(a.samples[0] == Catch::Approx(200.0 / 32768.0));
  CHECK(a.samples[1] == Catch::Approx(100.0 / 32768.0));
}

TEST_CASE("malformed and unsupported files are rejected") {
  testutil::TempDir tmp("wav");
  {
    std::ofstream os(tmp.file("bad.wav"), std::ios::binary);
    os << "definitely not a wav";
  }
  CHECK_THROWS_AS(load_wav(tmp.file("bad.wav")), Error);

  // 8-bit fmt chunk
  {
    std::ofstream os(tmp.file("bits.wav"), std::ios::binary);
    auto u32 = [&](uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](uint16_t v) { os.write(reinterpret_cast<const char*>(&v), 2); };
    os.write("RIFF", 4);
    u32(36);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(1);
    u32(16000);
    u32(16000);
    u16(1);
    u16(8);
    os.write("data", 4);
    u32(0);
  }
  CHECK_THROWS_MATCHES(load_wav(tmp.file("bits.wav")), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::unsupported_format;
                       }));
}
