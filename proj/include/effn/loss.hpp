#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "effn/error.hpp"

namespace effn {

enum class Label : std::uint8_t { kBona = 0, kSpoof = 1 };

// Per-class loss weights. Only the ratio w_bona / w_spoof matters (the
// weighted mean normalizes), so weights are canonicalized to
// (ratio, 1) before use; scaling both by any c > 0 cannot change a
// training trajectory.
struct ClassWeights {
  double w_bona = 1.0;
  double w_spoof = 1.0;

  ClassWeights canonical() const {
    if (!(w_bona > 0.0) || !(w_spoof > 0.0))
      throw ParameterError("class weights must be positive");
    return ClassWeights{w_bona / w_spoof, 1.0};
  }
};

// Inverse class-frequency weighting: w_spoof = 1, w_bona = N_spoof / N_bona.
inline ClassWeights auto_class_weights(std::uint64_t n_bona, std::uint64_t n_spoof) {
  if (n_bona == 0 || n_spoof == 0)
    throw ParameterError("auto_class_weights: both classes must be present");
  return ClassWeights{static_cast<double>(n_spoof) / static_cast<double>(n_bona), 1.0};
}

template <typename T>
struct LossResult {
  double loss = 0.0;
  std::vector<std::array<T, 2>> dlogits;  // per clip, already 1/sum(w) scaled
};

// Class-weighted binary cross entropy over a batch of two-class logits:
// loss = sum_i w_{y_i} * CE_i / sum_i w_{y_i}.
template <typename T>
LossResult<T> weighted_ce(const std::vector<std::array<T, 2>>& logits,
                          const std::vector<Label>& labels, const ClassWeights& weights) {
  if (logits.empty()) throw ParameterError("weighted_ce: empty batch");
  if (logits.size() != labels.size())
    throw DimensionError("weighted_ce: logits/labels size mismatch");
  const ClassWeights w = weights.canonical();

  LossResult<T> out;
  out.dlogits.resize(logits.size());
  double weight_sum = 0.0;
  for (const Label y : labels) weight_sum += y == Label::kBona ? w.w_bona : w.w_spoof;

  double loss_sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double l0 = static_cast<double>(logits[i][0]);
    const double l1 = static_cast<double>(logits[i][1]);
    const double mx = std::max(l0, l1);
    const double e0 = std::exp(l0 - mx);
    const double e1 = std::exp(l1 - mx);
    const double z = e0 + e1;
    const double p0 = e0 / z;
    const double p1 = e1 / z;
    const bool bona = labels[i] == Label::kBona;
    const double wi = bona ? w.w_bona : w.w_spoof;
    const double py = bona ? p0 : p1;
    loss_sum += wi * -std::log(std::max(py, 1e-300));
    const double scale = wi / weight_sum;
    out.dlogits[i][0] = static_cast<T>(scale * (p0 - (bona ? 1.0 : 0.0)));
    out.dlogits[i][1] = static_cast<T>(scale * (p1 - (bona ? 0.0 : 1.0)));
  }
  out.loss = loss_sum / weight_sum;
  return out;
}

}  // namespace effn
