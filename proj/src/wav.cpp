#include "sslspk/wav.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "sslspk/errors.hpp"

namespace sslspk {

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
               static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  f.write(b, 4);
}

void put_u16(std::ofstream& f, std::uint16_t v) {
  char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
  f.write(b, 2);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DataError("wav: " + path + " is not a RIFF/WAVE file");
  }

  std::size_t pos = 12;
  int channels = 0, bits = 0, format = 0, rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = get_u32(bytes.data() + pos + 4);
    if (pos + 8 + len > bytes.size()) break;
    if (std::memcmp(id, "fmt ", 4) == 0 && len >= 16) {
      const unsigned char* p = bytes.data() + pos + 8;
      format = get_u16(p);
      channels = get_u16(p + 2);
      rate = static_cast<int>(get_u32(p + 4));
      bits = get_u16(p + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + pos + 8;
      data_len = len;
    }
    pos += 8 + len + (len & 1);
  }

  if (format != 1) {
    throw DataError("wav: " + path + " is not uncompressed PCM (format tag " +
                    std::to_string(format) + ")");
  }
  if (channels != 1) {
    throw DataError("wav: " + path + " has " + std::to_string(channels) +
                    " channels; only mono is supported");
  }
  if (bits != 16) {
    throw DataError("wav: " + path + " has " + std::to_string(bits) +
                    "-bit samples; only 16-bit PCM is supported");
  }
  if (!data) throw DataError("wav: " + path + " has no data chunk");

  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(data_len / 2);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const std::int16_t s =
        static_cast<std::int16_t>(get_u16(data + 2 * i));
    w.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot write " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  const std::uint32_t byte_rate = static_cast<std::uint32_t>(w.sample_rate) * 2;

  f.write("RIFF", 4);
  put_u32(f, 36 + 2 * n);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put_u32(f, 16);
  put_u16(f, 1);  // PCM
  put_u16(f, 1);  // mono
  put_u32(f, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(f, byte_rate);
  put_u16(f, 2);   // block align
  put_u16(f, 16);  // bits
  f.write("data", 4);
  put_u32(f, 2 * n);
  for (double s : w.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lrint(clamped * 32767.0));
    put_u16(f, static_cast<std::uint16_t>(q));
  }
  if (!f) throw DataError("wav: write failed for " + path);
}

}  // namespace sslspk
