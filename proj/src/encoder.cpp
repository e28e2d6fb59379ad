#include "effn/encoder.hpp"

#include <cmath>

#include "effn/ops.hpp"
#include "effn/rng.hpp"

namespace effn {

namespace {

TensorF seeded_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  Rng rng(seed);
  TensorF m(std::vector<std::size_t>{rows, cols});
  const float scale = static_cast<float>(1.0 / std::sqrt(static_cast<double>(rows)));
  for (float& v : m) v = static_cast<float>(rng.uniform(-1.0, 1.0)) * scale;
  return m;
}

TensorF pool_frames(const TensorF& mel, int downsample) {
  const std::size_t groups = mel.rows() / static_cast<std::size_t>(downsample);
  TensorF out(std::vector<std::size_t>{groups, mel.cols()});
  const float inv = 1.0f / static_cast<float>(downsample);
  for (std::size_t g = 0; g < groups; ++g) {
    for (int j = 0; j < downsample; ++j) {
      const float* row = mel.data() + (g * downsample + j) * mel.cols();
      float* orow = out.data() + g * mel.cols();
      for (std::size_t c = 0; c < mel.cols(); ++c) orow[c] += row[c] * inv;
    }
  }
  return out;
}

}  // namespace

LayerStackF encode_stub(const EncoderSpec& spec, const MelSpec& mel) {
  if (!mel.normalized) throw StateError("encode_stub: expects normalized features");
  if (mel.frames.rows() != static_cast<std::size_t>(kTargetFrames) ||
      mel.frames.cols() != static_cast<std::size_t>(kMelBins))
    throw DimensionError("encode_stub: expected " + std::to_string(kTargetFrames) + "x" +
                         std::to_string(kMelBins) + " features, got " + shape_str(mel.frames));
  if (spec.num_layers < 1 || spec.dim < 1 || spec.downsample < 1)
    throw ParameterError("encode_stub: num_layers, dim and downsample must be positive");

  const TensorF pooled = pool_frames(mel.frames, spec.downsample);
  const std::size_t d = static_cast<std::size_t>(spec.dim);

  LayerStackF stack;
  stack.layers.reserve(spec.num_layers);
  for (int l = 0; l < spec.num_layers; ++l) {
    const std::uint64_t layer_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(l));
    const TensorF proj = seeded_matrix(mix_seed(layer_seed, 0), mel.frames.cols(), d);
    TensorF pre = matmul(pooled, proj);
    if (l == 0) {
      for (float& v : pre) v = std::tanh(v);
    } else {
      const TensorF recur = seeded_matrix(mix_seed(layer_seed, 1), d, d);
      const TensorF carried = matmul(stack.layers.back(), recur);
      for (std::size_t i = 0; i < pre.size(); ++i)
        pre[i] = std::tanh(0.7f * carried[i] + 0.3f * pre[i]);
    }
    stack.layers.push_back(std::move(pre));
  }
  return stack;
}

}  // namespace effn
