#pragma once

#include <string>

#include "effn/model.hpp"

namespace effn {

// Checkpoint container, little endian: magic "EFFN", version u32 = 1, a
// hyperparameter block, the fusion layer set, then a manifest of
// (name, shape, offset) tensor entries followed by one float32 payload.
// The fusion-weight trajectory of the producing run rides along as an
// extra "fusion.trajectory" tensor (steps x |layer_set|).
struct Checkpoint {
  ModelParams<float> params;
  double dropout = 0.1;
  TensorF trajectory;  // empty when the run logged no steps
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace effn
