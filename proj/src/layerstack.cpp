#include "effn/layerstack.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace effn {

namespace {

constexpr char kMagic[4] = {'L', 'S', 'T', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxExtent = 1u << 24;

void write_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4)) throw IoError("layerstack: truncated header in " + path);
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

}  // namespace

void write_layerstack(const LayerStackF& stack, const std::string& path) {
  if (stack.layers.empty()) throw ParameterError("write_layerstack: empty stack");
  const std::size_t t = stack.frames();
  const std::size_t d = stack.dim();
  for (const auto& l : stack.layers)
    if (l.rows() != t || l.cols() != d)
      throw DimensionError("write_layerstack: layers disagree on shape");

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("write_layerstack: cannot open " + path);
  f.write(kMagic, 4);
  write_u32(f, kVersion);
  write_u32(f, static_cast<std::uint32_t>(stack.layers.size()));
  write_u32(f, static_cast<std::uint32_t>(t));
  write_u32(f, static_cast<std::uint32_t>(d));
  for (const auto& l : stack.layers)
    f.write(reinterpret_cast<const char*>(l.data()),
            static_cast<std::streamsize>(l.size() * sizeof(float)));
  if (!f) throw IoError("write_layerstack: short write to " + path);
}

LayerStackF read_layerstack(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_layerstack: cannot open " + path);
  char magic[4];
  if (!f.read(magic, 4)) throw IoError("read_layerstack: truncated header in " + path);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("read_layerstack: bad magic in " + path);
  const std::uint32_t version = read_u32(f, path);
  if (version != kVersion)
    throw FormatError("read_layerstack: unsupported version " + std::to_string(version));
  const std::uint32_t l = read_u32(f, path);
  const std::uint32_t t = read_u32(f, path);
  const std::uint32_t d = read_u32(f, path);
  if (l == 0 || t == 0 || d == 0 || l > 256 || t > kMaxExtent || d > kMaxExtent ||
      static_cast<std::uint64_t>(l) * t * d > (1ull << 32))
    throw FormatError("read_layerstack: implausible shape in " + path);

  LayerStackF stack;
  stack.layers.reserve(l);
  for (std::uint32_t i = 0; i < l; ++i) {
    TensorF layer(std::vector<std::size_t>{t, d});
    if (!f.read(reinterpret_cast<char*>(layer.data()),
                static_cast<std::streamsize>(layer.size() * sizeof(float))))
      throw IoError("read_layerstack: truncated payload in " + path);
    stack.layers.push_back(std::move(layer));
  }
  return stack;
}

}  // namespace effn
