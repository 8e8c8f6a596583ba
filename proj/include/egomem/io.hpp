#pragma once

// Binary PGM (P5, 8-bit) and RIFF/WAVE (PCM 16-bit) readers and writers.

#include <array>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "egomem/errors.hpp"
#include "egomem/image.hpp"
#include "egomem/sls.hpp"

namespace egomem::io {

namespace fs = std::filesystem;

inline std::vector<char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading", path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Creates missing parent directories.
inline void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory", path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed", path.string());
}

inline void write_pgm(const fs::path& path, const GrayImage& img) {
  std::string bytes = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  bytes.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  write_file(path, bytes);
}

inline GrayImage read_pgm(const fs::path& path) {
  const auto data = read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) tok += data[pos++];
    return tok;
  };
  if (next_token() != "P5") throw IoError("not a binary PGM", path.string());
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw IoError("malformed PGM header", path.string());
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw IoError("unsupported PGM dimensions/depth", path.string());
  ++pos;  // single whitespace before raster
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (data.size() < pos + n) throw IoError("truncated PGM raster", path.string());
  GrayImage img(w, h);
  std::memcpy(img.pixels.data(), data.data() + pos, n);
  return img;
}

namespace detail {
inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}
inline std::uint32_t get_u32(const std::vector<char>& d, std::size_t p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(d[p + static_cast<std::size_t>(i)]);
  return v;
}
inline std::uint16_t get_u16(const std::vector<char>& d, std::size_t p) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(d[p]) | (static_cast<unsigned char>(d[p + 1]) << 8));
}
}  // namespace detail

/// Canonical 44-byte-header PCM WAV.
inline std::string encode_wav(const AudioEvent& a) {
  a.validate();
  const auto data_bytes = static_cast<std::uint32_t>(a.samples.size() * 2);
  std::string s;
  s.reserve(44 + data_bytes);
  s += "RIFF";
  detail::put_u32(s, 36 + data_bytes);
  s += "WAVEfmt ";
  detail::put_u32(s, 16);
  detail::put_u16(s, 1);
  detail::put_u16(s, static_cast<std::uint16_t>(a.channels));
  detail::put_u32(s, static_cast<std::uint32_t>(a.sample_rate));
  detail::put_u32(s, static_cast<std::uint32_t>(a.sample_rate * a.channels * 2));
  detail::put_u16(s, static_cast<std::uint16_t>(a.channels * 2));
  detail::put_u16(s, 16);
  s += "data";
  detail::put_u32(s, data_bytes);
  for (std::int16_t v : a.samples) detail::put_u16(s, static_cast<std::uint16_t>(v));
  return s;
}

inline void write_wav(const fs::path& path, const AudioEvent& a) { write_file(path, encode_wav(a)); }

/// Reads PCM 16-bit WAV; ground-truth fields of the event are left default.
inline AudioEvent read_wav(const fs::path& path) {
  const auto d = read_file(path);
  if (d.size() < 12 || std::memcmp(d.data(), "RIFF", 4) != 0 || std::memcmp(d.data() + 8, "WAVE", 4) != 0)
    throw IoError("not a RIFF/WAVE file", path.string());
  AudioEvent a;
  bool have_fmt = false;
  std::size_t p = 12;
  while (p + 8 <= d.size()) {
    const std::string id(d.data() + p, 4);
    const std::uint32_t len = detail::get_u32(d, p + 4);
    const std::size_t body = p + 8;
    if (body + len > d.size()) throw IoError("truncated WAV chunk", path.string());
    if (id == "fmt ") {
      if (detail::get_u16(d, body) != 1 || detail::get_u16(d, body + 14) != 16)
        throw IoError("only 16-bit PCM WAV supported", path.string());
      a.channels = detail::get_u16(d, body + 2);
      a.sample_rate = static_cast<int>(detail::get_u32(d, body + 4));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw IoError("WAV data before fmt chunk", path.string());
      a.samples.resize(len / 2);
      for (std::size_t i = 0; i < a.samples.size(); ++i)
        a.samples[i] = static_cast<std::int16_t>(detail::get_u16(d, body + 2 * i));
      return a;
    }
    p = body + len + (len & 1);
  }
  throw IoError("WAV has no data chunk", path.string());
}

}  // namespace egomem::io
