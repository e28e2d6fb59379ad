#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "effn/audio.hpp"
#include "effn/error.hpp"

namespace effn {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError("read_wav: malformed RIFF header in " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t sz = read_u32(bytes.data() + pos + 4);
    pos += 8;
    if (pos + sz > bytes.size()) throw IoError("read_wav: truncated chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (sz < 16) throw FormatError("read_wav: short fmt chunk in " + path);
      format = read_u16(bytes.data() + pos);
      channels = read_u16(bytes.data() + pos + 2);
      rate = read_u32(bytes.data() + pos + 4);
      bits = read_u16(bytes.data() + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + pos;
      data_len = sz;
    }
    pos += sz + (sz & 1);  // chunks are word aligned
  }
  if (!have_fmt || data == nullptr) throw FormatError("read_wav: missing fmt or data chunk in " + path);
  if (channels < 1 || channels > 2)
    throw FormatError("read_wav: unsupported channel count " + std::to_string(channels));
  if (rate == 0) throw FormatError("read_wav: zero sample rate in " + path);

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.channels = channels;
  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data_len / 2;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::int16_t v = static_cast<std::int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
      clip.samples[i] = static_cast<float>(v) / 32768.0f;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data_len / 4;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      float f;
      std::uint32_t u = read_u32(data + 4 * i);
      std::memcpy(&f, &u, 4);
      clip.samples[i] = std::clamp(f, -1.0f, 1.0f);
    }
  } else {
    throw FormatError("read_wav: unsupported codec (format=" + std::to_string(format) +
                      ", bits=" + std::to_string(bits) + ") in " + path);
  }
  if (clip.samples.empty()) throw FormatError("read_wav: empty data chunk in " + path);
  if (clip.samples.size() % channels != 0) clip.samples.resize(clip.samples.size() - 1);
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip) {
  if (clip.channels < 1 || clip.channels > 2)
    throw FormatError("write_wav: unsupported channel count");
  if (clip.sample_rate <= 0) throw ParameterError("write_wav: sample rate must be positive");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, static_cast<std::uint16_t>(clip.channels));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * clip.channels * 2);
  put_u16(out, static_cast<std::uint16_t>(clip.channels * 2));
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (const float s : clip.samples) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    const std::int16_t v = static_cast<std::int16_t>(std::lrint(c * 32767.0f));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("write_wav: cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write_wav: short write to " + path);
}

}  // namespace effn
