#include "qerover/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "qerover/common.hpp"

namespace qerover {
namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::uint16_t read_u16(const unsigned char* p) {
  return std::uint16_t(p[0] | p[1] << 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav file: " + path);
  std::string raw((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (raw.size() < 12 || raw.compare(0, 4, "RIFF") != 0 ||
      raw.compare(8, 4, "WAVE") != 0)
    throw ParseError(path, 0, "not a RIFF/WAVE file");

  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  std::size_t pos = 12;
  int sample_rate = 0;
  int bits = 0;
  int channels = 0;
  int audio_format = 0;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;

  while (pos + 8 <= raw.size()) {
    std::string id = raw.substr(pos, 4);
    std::uint32_t len = read_u32(bytes + pos + 4);
    pos += 8;
    if (pos + len > raw.size())
      throw ParseError(path, 0, "truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (len < 16) throw ParseError(path, 0, "fmt chunk too short");
      audio_format = read_u16(bytes + pos);
      channels = read_u16(bytes + pos + 2);
      sample_rate = int(read_u32(bytes + pos + 4));
      bits = read_u16(bytes + pos + 14);
      have_fmt = true;
    } else if (id == "data") {
      data_off = pos;
      data_len = len;
    }
    pos += len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw ParseError(path, 0, "missing fmt chunk");
  if (data_off == 0 && data_len == 0)
    throw ParseError(path, 0, "missing data chunk");
  if (audio_format != 1 || bits != 16)
    throw ValidationError(path + ": only 16-bit PCM is supported");
  if (channels != 1)
    throw ValidationError(path + ": only mono audio is supported");
  if (sample_rate <= 0) throw ValidationError(path + ": bad sample rate");

  WavData wav;
  wav.sample_rate = sample_rate;
  std::size_t n = data_len / 2;
  wav.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::int16_t s =
        std::int16_t(read_u16(bytes + data_off + 2 * i));
    wav.samples[i] = s / 32768.0;
  }
  return wav;
}

void write_wav(const std::string& path, const WavData& wav) {
  if (wav.sample_rate <= 0) throw ValidationError("bad sample rate");
  const std::uint32_t data_len = std::uint32_t(wav.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, std::uint32_t(wav.sample_rate));
  put_u32(out, std::uint32_t(wav.sample_rate) * 2);
  put_u16(out, 2);   // block align
  put_u16(out, 16);  // bits
  out += "data";
  put_u32(out, data_len);
  for (double v : wav.samples) {
    double c = std::clamp(v, -1.0, 1.0);
    auto s = std::int16_t(std::lround(c * 32767.0));
    put_u16(out, std::uint16_t(s));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write wav file: " + path);
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw IoError("short write: " + path);
}

}  // namespace qerover
