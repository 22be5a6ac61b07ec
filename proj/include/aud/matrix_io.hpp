#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "aud/types.hpp"

namespace aud {

// Binary matrix file: 16-byte header (magic "AUDF", u32 version, u32 rows,
// u32 cols, little-endian) followed by row-major 32-bit little-endian floats.
constexpr uint32_t kMatrixFormatVersion = 1;

inline void write_matrix(const std::string& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), ErrorCode::io_error, "cannot write matrix file: " + path);
  auto put_u32 = [&](uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
  };
  os.write("AUDF", 4);
  put_u32(kMatrixFormatVersion);
  put_u32(static_cast<uint32_t>(m.rows()));
  put_u32(static_cast<uint32_t>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const float f = static_cast<float>(m(r, c));
      uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(u);
    }
  require(os.good(), ErrorCode::io_error, "short write: " + path);
}

inline Matrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io_error, "cannot open matrix file: " + path);
  unsigned char hdr[16];
  in.read(reinterpret_cast<char*>(hdr), 16);
  require(in.gcount() == 16 && std::memcmp(hdr, "AUDF", 4) == 0,
          ErrorCode::format_error, "bad matrix file header: " + path);
  auto get_u32 = [&](const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
  };
  const uint32_t version = get_u32(hdr + 4);
  require(version == kMatrixFormatVersion, ErrorCode::unsupported_format,
          "unsupported matrix file version: " + path);
  const uint32_t rows = get_u32(hdr + 8), cols = get_u32(hdr + 12);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      unsigned char b[4];
      in.read(reinterpret_cast<char*>(b), 4);
      require(in.gcount() == 4, ErrorCode::format_error,
              "truncated matrix payload: " + path);
      const uint32_t u = get_u32(b);
      float f;
      std::memcpy(&f, &u, 4);
      m(r, c) = f;
    }
  return m;
}

}  // namespace aud
