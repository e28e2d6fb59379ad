#pragma once

#include <cmath>
#include <string>

#include "effn/model.hpp"

namespace effn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  ModelParams<T> m;
  ModelParams<T> v;
  long long t = 0;

  explicit AdamState(const ModelParams<T>& params)
      : m(zeros_like(params)), v(zeros_like(params)) {}
};

// One bias-corrected Adam update. Throws before touching any parameter if
// a gradient is non-finite, naming the offending tensor.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg) {
  grads.for_each([&](const char* name, const Tensor<T>& g) {
    if (!g.all_finite()) throw NumericError(std::string("adam_step: non-finite gradient in ") + name);
  });
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));

  auto update = [&](Tensor<T>& p, const Tensor<T>& g, Tensor<T>& m, Tensor<T>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      p[i] = static_cast<T>(static_cast<double>(p[i]) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  };

  update(params.fusion_logits, grads.fusion_logits, state.m.fusion_logits, state.v.fusion_logits);
  update(params.w1, grads.w1, state.m.w1, state.v.w1);
  update(params.b1, grads.b1, state.m.b1, state.v.b1);
  update(params.w2, grads.w2, state.m.w2, state.v.w2);
  update(params.b2, grads.b2, state.m.b2, state.v.b2);
  update(params.wa, grads.wa, state.m.wa, state.v.wa);
  update(params.ba, grads.ba, state.m.ba, state.v.ba);
  update(params.v, grads.v, state.m.v, state.v.v);
  update(params.k, grads.k, state.m.k, state.v.k);
  update(params.wc, grads.wc, state.m.wc, state.v.wc);
  update(params.bc, grads.bc, state.m.bc, state.v.bc);
}

}  // namespace effn
