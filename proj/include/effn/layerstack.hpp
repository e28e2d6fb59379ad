#pragma once

#include <string>
#include <vector>

#include "effn/error.hpp"
#include "effn/tensor.hpp"

namespace effn {

// Per-layer hidden states of one clip: L tensors of identical frames x dim
// shape. Layer ids are 1-based (block outputs 1..L).
template <typename T>
struct LayerStack {
  std::vector<Tensor<T>> layers;

  int num_layers() const { return static_cast<int>(layers.size()); }
  std::size_t frames() const { return layers.empty() ? 0 : layers[0].rows(); }
  std::size_t dim() const { return layers.empty() ? 0 : layers[0].cols(); }

  const Tensor<T>& layer(int id) const {
    if (id < 1 || id > num_layers())
      throw ParameterError("layerstack: layer id " + std::to_string(id) + " out of range 1.." +
                           std::to_string(num_layers()));
    return layers[static_cast<std::size_t>(id - 1)];
  }

  template <typename U>
  LayerStack<U> cast() const {
    LayerStack<U> out;
    out.layers.reserve(layers.size());
    for (const auto& l : layers) out.layers.push_back(l.template cast<U>());
    return out;
  }
};

using LayerStackF = LayerStack<float>;

// File container, little endian: magic "LSTK", version u32 = 1, then
// L, T', D as u32 and L*T'*D float32 values, layer major then row major.
void write_layerstack(const LayerStackF& stack, const std::string& path);
LayerStackF read_layerstack(const std::string& path);

}  // namespace effn
