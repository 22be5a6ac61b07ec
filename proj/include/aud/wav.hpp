#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "aud/types.hpp"

namespace aud {

namespace detail {

inline uint32_t read_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline uint16_t read_u16le(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

inline void write_u32le(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u16le(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace detail

// Reads a RIFF/WAVE file holding 16-bit PCM. Mono is accepted as-is; stereo is
// rejected unless downmix_stereo is set, in which case channels are averaged.
// Samples are scaled to [-1, 1] by dividing by 32768.
inline AudioBuffer load_wav(const std::string& path, bool downmix_stereo = false) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io_error, "cannot open wav file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  require(bytes.size() >= 12, ErrorCode::format_error, "wav too short: " + path);
  require(std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
              std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
          ErrorCode::format_error, "not a RIFF/WAVE file: " + path);

  uint16_t format_tag = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    uint32_t sz = detail::read_u32le(bytes.data() + pos + 4);
    std::size_t body = pos + 8;
    if (body + sz > bytes.size()) sz = static_cast<uint32_t>(bytes.size() - body);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      require(sz >= 16, ErrorCode::format_error, "truncated fmt chunk: " + path);
      format_tag = detail::read_u16le(bytes.data() + body);
      channels = detail::read_u16le(bytes.data() + body + 2);
      sample_rate = detail::read_u32le(bytes.data() + body + 4);
      bits = detail::read_u16le(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = sz;
    }
    pos = body + sz + (sz & 1);  // chunks are word-aligned
  }

  require(have_fmt, ErrorCode::format_error, "missing fmt chunk: " + path);
  require(data_off != 0, ErrorCode::format_error, "missing data chunk: " + path);
  require(format_tag == 1, ErrorCode::unsupported_format,
          "only 16-bit integer PCM is supported: " + path);
  require(bits == 16, ErrorCode::unsupported_format,
          "unsupported bit depth " + std::to_string(bits) + ": " + path);
  require(channels == 1 || channels == 2, ErrorCode::unsupported_format,
          "unsupported channel count " + std::to_string(channels) + ": " + path);
  require(channels == 1 || downmix_stereo, ErrorCode::unsupported_format,
          "stereo input rejected (enable downmix to average channels): " + path);
  require(sample_rate > 0, ErrorCode::format_error, "zero sample rate: " + path);

  const std::size_t bytes_per_frame = 2u * channels;
  const std::size_t n = data_len / bytes_per_frame;
  AudioBuffer buf;
  buf.sample_rate = static_cast<int>(sample_rate);
  buf.utterance_id = std::filesystem::path(path).stem().string();
  buf.samples.resize(n);
  const unsigned char* d = bytes.data() + data_off;
  for (std::size_t i = 0; i < n; ++i) {
    if (channels == 1) {
      int16_t s = static_cast<int16_t>(detail::read_u16le(d + 2 * i));
      buf.samples[i] = s / 32768.0;
    } else {
      int16_t l = static_cast<int16_t>(detail::read_u16le(d + 4 * i));
      int16_t r = static_cast<int16_t>(detail::read_u16le(d + 4 * i + 2));
      buf.samples[i] = (l + r) / 2.0 / 32768.0;
    }
  }
  return buf;
}

// Writes 16-bit PCM mono. Samples are scaled by 32768, rounded, and clamped.
inline void write_wav(const std::string& path, const AudioBuffer& audio) {
  require(audio.sample_rate > 0, ErrorCode::config_error,
          "audio buffer has no sample rate");
  std::ofstream os(path, std::ios::binary);
  require(os.good(), ErrorCode::io_error, "cannot write wav file: " + path);

  const uint32_t data_len = static_cast<uint32_t>(audio.samples.size() * 2);
  os.write("RIFF", 4);
  detail::write_u32le(os, 36 + data_len);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  detail::write_u32le(os, 16);
  detail::write_u16le(os, 1);  // PCM
  detail::write_u16le(os, 1);  // mono
  detail::write_u32le(os, static_cast<uint32_t>(audio.sample_rate));
  detail::write_u32le(os, static_cast<uint32_t>(audio.sample_rate) * 2);
  detail::write_u16le(os, 2);   // block align
  detail::write_u16le(os, 16);  // bits
  os.write("data", 4);
  detail::write_u32le(os, data_len);
  for (double x : audio.samples) {
    long long v = std::llround(x * 32768.0);
    if (v > 32767) v = 32767;
    if (v < -32768) v = -32768;
    detail::write_u16le(os, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }
  require(os.good(), ErrorCode::io_error, "short write: " + path);
}

}  // namespace aud
