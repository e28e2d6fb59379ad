#pragma once

#include <cstdint>
#include <string>

#include "effn/layerstack.hpp"
#include "effn/mel.hpp"

namespace effn {

// The frozen feature extractor behind the trainable back-end. `stub`
// computes deterministic pseudo-embeddings from the features; `file`
// ingests hidden states precomputed by an external model in the
// layerstack container format. Nothing in this repo ever updates encoder
// parameters.
struct EncoderSpec {
  enum class Kind { kStub, kFile };

  Kind kind = Kind::kStub;
  int num_layers = 12;
  int dim = 768;        // desk-scale runs use 32 or smaller
  int downsample = 2;   // feature frames per hidden step
  std::uint64_t seed = 7;
};

// Deterministic stub: mel frames are mean-pooled in non-overlapping
// groups of `downsample`, then
//   s_1 = tanh(mel' P_0)
//   s_l = tanh(0.7 s_{l-1} A_{l-1} + 0.3 mel' P_{l-1}),  l = 2..L
// with P_*, A_* drawn once from per-layer seeds mix(seed, layer) and
// scaled by 1 / sqrt(fan_in). The mel skip keeps every layer carrying
// distinct information, so learned fusion weights are meaningful.
LayerStackF encode_stub(const EncoderSpec& spec, const MelSpec& mel);

}  // namespace effn
