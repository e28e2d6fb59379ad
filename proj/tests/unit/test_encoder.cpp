#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "effn/encoder.hpp"
#include "effn/error.hpp"
#include "effn/layerstack.hpp"

using namespace effn;
namespace fs = std::filesystem;

namespace {

MelSpec fake_features(float fill = 0.0f) {
  MelSpec spec;
  spec.normalized = true;
  spec.frames = TensorF(std::vector<std::size_t>{1024, 128});
  for (std::size_t i = 0; i < spec.frames.size(); ++i) {
    const int step = static_cast<int>(i * 2654435761u % 1000) - 500;
    spec.frames[i] = fill == 0.0f ? 0.0f : fill * static_cast<float>(step) / 500.0f;
  }
  return spec;
}

EncoderSpec small_spec() {
  EncoderSpec s;
  s.dim = 16;
  s.seed = 42;
  return s;
}

}  // namespace

TEST_CASE("stub encoder is deterministic and bounded") {
  const MelSpec mel = fake_features(0.8f);
  const EncoderSpec spec = small_spec();
  const LayerStackF a = encode_stub(spec, mel);
  const LayerStackF b = encode_stub(spec, mel);
  REQUIRE(a.num_layers() == 12);
  CHECK(a.frames() == 512);
  CHECK(a.dim() == 16);
  for (int l = 0; l < 12; ++l) {
    CHECK(a.layers[l].values() == b.layers[l].values());
    for (const float v : a.layers[l]) {
      CHECK(v > -1.0f);
      CHECK(v < 1.0f);
    }
  }
}

TEST_CASE("stub encoder propagates zeros and reacts to input changes") {
  const MelSpec zero = fake_features(0.0f);
  const LayerStackF z = encode_stub(small_spec(), zero);
  for (const auto& layer : z.layers)
    for (const float v : layer) CHECK(v == 0.0f);

  MelSpec a = fake_features(0.5f);
  MelSpec b = a;
  b.frames.at(100, 7) += 0.25f;
  const LayerStackF sa = encode_stub(small_spec(), a);
  const LayerStackF sb = encode_stub(small_spec(), b);
  bool differ = false;
  for (int l = 0; l < 12 && !differ; ++l) differ = sa.layers[l].values() != sb.layers[l].values();
  CHECK(differ);
}

TEST_CASE("stub encoder seed changes outputs") {
  const MelSpec mel = fake_features(0.5f);
  EncoderSpec s1 = small_spec();
  EncoderSpec s2 = small_spec();
  s2.seed = 43;
  const LayerStackF a = encode_stub(s1, mel);
  const LayerStackF b = encode_stub(s2, mel);
  CHECK(a.layers[0].values() != b.layers[0].values());
}

TEST_CASE("stub encoder rejects wrong shapes") {
  MelSpec bad;
  bad.normalized = true;
  bad.frames = TensorF(std::vector<std::size_t>{512, 128});
  CHECK_THROWS_AS(encode_stub(small_spec(), bad), DimensionError);
}

TEST_CASE("layerstack file round trip is lossless") {
  LayerStackF stack;
  for (int l = 0; l < 3; ++l) {
    TensorF t(std::vector<std::size_t>{4, 5});
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = static_cast<float>(l * 100 + static_cast<int>(i)) * 0.37f;
    stack.layers.push_back(std::move(t));
  }
  const std::string path = (fs::temp_directory_path() / "effn_stack.lsk").string();
  write_layerstack(stack, path);
  const LayerStackF r = read_layerstack(path);
  REQUIRE(r.num_layers() == 3);
  for (int l = 0; l < 3; ++l) CHECK(r.layers[l].values() == stack.layers[l].values());

  CHECK(r.layer(1).values() == stack.layers[0].values());
  CHECK_THROWS_AS(r.layer(0), ParameterError);
  CHECK_THROWS_AS(r.layer(4), ParameterError);
}

TEST_CASE("layerstack file rejects corruption") {
  LayerStackF stack;
  stack.layers.push_back(TensorF(std::vector<std::size_t>{2, 2}));
  const std::string path = (fs::temp_directory_path() / "effn_stack_bad.lsk").string();
  write_layerstack(stack, path);

  // corrupt magic
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(read_layerstack(path), FormatError);

  // header claims more layers than the payload holds
  write_layerstack(stack, path);
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(8);
    const std::uint32_t twelve = 12;
    f.write(reinterpret_cast<const char*>(&twelve), 4);
  }
  CHECK_THROWS_AS(read_layerstack(path), IoError);

  CHECK_THROWS_AS(read_layerstack((fs::temp_directory_path() / "no_such.lsk").string()), IoError);
}
