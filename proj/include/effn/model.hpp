#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "effn/layerstack.hpp"
#include "effn/ops.hpp"
#include "effn/rng.hpp"
#include "effn/tensor.hpp"

namespace effn {

// Trainable back-end: softmax-weighted fusion of selected encoder layers,
// two ReLU projections with dropout, attentive statistics pooling and a
// two-score classifier. The detection score is logit_bona - logit_spoof.

inline const std::vector<int> kDefaultLayerSet = {4, 5, 6, 7, 8, 9};

template <typename T>
struct ModelParams {
  std::vector<int> layer_set = kDefaultLayerSet;
  Tensor<T> fusion_logits;  // [S]
  Tensor<T> w1, b1;         // D x H, H
  Tensor<T> w2, b2;         // H x H, H
  Tensor<T> wa, ba;         // H x A, A
  Tensor<T> v;              // A
  Tensor<T> k;              // [1]; alpha is invariant to k, its gradient is exactly 0
  Tensor<T> wc, bc;         // 2H x 2, 2

  std::size_t dim() const { return w1.rows(); }
  std::size_t hidden() const { return w1.cols(); }
  std::size_t attn() const { return wa.cols(); }

  template <typename F>
  void for_each(F&& f) {
    f("fusion.logits", fusion_logits);
    f("ffn.w1", w1);
    f("ffn.b1", b1);
    f("ffn.w2", w2);
    f("ffn.b2", b2);
    f("pool.wa", wa);
    f("pool.ba", ba);
    f("pool.v", v);
    f("pool.k", k);
    f("cls.w", wc);
    f("cls.b", bc);
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<ModelParams*>(this)->for_each(
        [&](const char* name, Tensor<T>& t) { f(name, static_cast<const Tensor<T>&>(t)); });
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.layer_set = layer_set;
    out.fusion_logits = fusion_logits.template cast<U>();
    out.w1 = w1.template cast<U>();
    out.b1 = b1.template cast<U>();
    out.w2 = w2.template cast<U>();
    out.b2 = b2.template cast<U>();
    out.wa = wa.template cast<U>();
    out.ba = ba.template cast<U>();
    out.v = v.template cast<U>();
    out.k = k.template cast<U>();
    out.wc = wc.template cast<U>();
    out.bc = bc.template cast<U>();
    return out;
  }
};

template <typename T>
Tensor<T> glorot(std::size_t fan_in, std::size_t fan_out, std::vector<std::size_t> shape, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> t(std::move(shape));
  for (T& x : t) x = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

// Weights Glorot-uniform, biases and fusion logits zero.
template <typename T>
ModelParams<T> init_params(std::size_t dim, std::size_t hidden, std::size_t attn,
                           std::vector<int> layer_set, Rng& rng) {
  if (layer_set.empty()) throw ParameterError("init_params: empty fusion layer set");
  ModelParams<T> p;
  p.layer_set = std::move(layer_set);
  p.fusion_logits = Tensor<T>(std::vector<std::size_t>{p.layer_set.size()});
  p.w1 = glorot<T>(dim, hidden, {dim, hidden}, rng);
  p.b1 = Tensor<T>(std::vector<std::size_t>{hidden});
  p.w2 = glorot<T>(hidden, hidden, {hidden, hidden}, rng);
  p.b2 = Tensor<T>(std::vector<std::size_t>{hidden});
  p.wa = glorot<T>(hidden, attn, {hidden, attn}, rng);
  p.ba = Tensor<T>(std::vector<std::size_t>{attn});
  p.v = glorot<T>(attn, 1, {attn}, rng);
  p.k = Tensor<T>(std::vector<std::size_t>{1});
  p.wc = glorot<T>(2 * hidden, 2, {2 * hidden, 2}, rng);
  p.bc = Tensor<T>(std::vector<std::size_t>{2});
  return p;
}

template <typename T>
ModelParams<T> zeros_like(const ModelParams<T>& p) {
  ModelParams<T> g;
  g.layer_set = p.layer_set;
  g.fusion_logits = Tensor<T>(p.fusion_logits.shape());
  g.w1 = Tensor<T>(p.w1.shape());
  g.b1 = Tensor<T>(p.b1.shape());
  g.w2 = Tensor<T>(p.w2.shape());
  g.b2 = Tensor<T>(p.b2.shape());
  g.wa = Tensor<T>(p.wa.shape());
  g.ba = Tensor<T>(p.ba.shape());
  g.v = Tensor<T>(p.v.shape());
  g.k = Tensor<T>(p.k.shape());
  g.wc = Tensor<T>(p.wc.shape());
  g.bc = Tensor<T>(p.bc.shape());
  return g;
}

// Fusion weights: softmax of the logits evaluated in double.
template <typename T>
std::vector<T> fusion_weights(const Tensor<T>& logits) {
  if (logits.size() == 0) throw DimensionError("fusion_weights: empty logits");
  std::vector<double> w(logits.size());
  double mx = static_cast<double>(logits[0]);
  for (std::size_t i = 0; i < logits.size(); ++i)
    mx = std::max(mx, static_cast<double>(logits[i]));
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w[i] = std::exp(static_cast<double>(logits[i]) - mx);
    sum += w[i];
  }
  std::vector<T> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = static_cast<T>(w[i] / sum);
  return out;
}

// Picks the tensors for params.layer_set out of a full stack.
template <typename T>
std::vector<const Tensor<T>*> select_layers(const LayerStack<T>& stack,
                                            const std::vector<int>& layer_set) {
  std::vector<const Tensor<T>*> sel;
  sel.reserve(layer_set.size());
  for (const int id : layer_set) sel.push_back(&stack.layer(id));
  return sel;
}

template <typename T>
Tensor<T> fuse_selected(const std::vector<const Tensor<T>*>& layers, const Tensor<T>& logits) {
  if (layers.empty()) throw ParameterError("fuse: empty layer selection");
  if (layers.size() != logits.size())
    throw DimensionError("fuse: logits count does not match selected layers");
  const std::vector<T> w = fusion_weights(logits);
  Tensor<T> out(layers[0]->shape());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i]->same_shape(*layers[0]))
      throw DimensionError("fuse: selected layers disagree on shape");
    axpy(out, w[i], *layers[i]);
  }
  return out;
}

template <typename T>
Tensor<T> fuse(const LayerStack<T>& stack, const std::vector<int>& layer_set,
               const Tensor<T>& logits) {
  return fuse_selected(select_layers(stack, layer_set), logits);
}

constexpr double kVarianceEps = 1e-9;

template <typename T>
struct ForwardTrace {
  std::vector<T> weights;  // fusion weights at this forward
  Tensor<T> fused;
  Tensor<T> z1, h1;  // pre-activation, post-dropout
  std::vector<std::uint8_t> mask1;
  Tensor<T> z2, h2;
  std::vector<std::uint8_t> mask2;
  Tensor<T> u;           // tanh attention features, T' x A
  std::vector<T> alpha;  // attention over frames
  std::vector<T> mu, qsum, sigma;
  Tensor<T> pooled;  // [2H]
  std::array<T, 2> logits{};

  T score() const { return logits[0] - logits[1]; }
};

template <typename T>
ForwardTrace<T> forward(const std::vector<const Tensor<T>*>& layers, const ModelParams<T>& params,
                        double dropout_p, Rng* rng, bool training) {
  ForwardTrace<T> tr;
  tr.weights = fusion_weights(params.fusion_logits);
  tr.fused = fuse_selected(layers, params.fusion_logits);
  const std::size_t frames = tr.fused.rows();
  if (frames == 0) throw DimensionError("forward: zero frames");
  const std::size_t hidden = params.hidden();
  if (tr.fused.cols() != params.dim())
    throw DimensionError("forward: stack dim " + std::to_string(tr.fused.cols()) +
                         " does not match model dim " + std::to_string(params.dim()));

  Rng local(0);
  Rng& r = rng ? *rng : local;

  tr.z1 = matmul(tr.fused, params.w1);
  add_row_inplace(tr.z1, params.b1);
  auto d1 = dropout(relu(tr.z1), dropout_p, r, training);
  tr.h1 = std::move(d1.y);
  tr.mask1 = std::move(d1.mask);

  tr.z2 = matmul(tr.h1, params.w2);
  add_row_inplace(tr.z2, params.b2);
  auto d2 = dropout(relu(tr.z2), dropout_p, r, training);
  tr.h2 = std::move(d2.y);
  tr.mask2 = std::move(d2.mask);

  // Attention scores e_t = v . tanh(h_t wa + ba) + k. The softmax over
  // frames is shift invariant, so the k term cancels exactly and never
  // enters the computation.
  Tensor<T> c = matmul(tr.h2, params.wa);
  add_row_inplace(c, params.ba);
  tr.u = tanh_op(c);
  tr.alpha.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    double e = 0.0;
    for (std::size_t a = 0; a < params.attn(); ++a)
      e += static_cast<double>(tr.u.at(t, a)) * static_cast<double>(params.v[a]);
    tr.alpha[t] = static_cast<T>(e);
  }
  softmax_inplace(std::span<T>(tr.alpha.data(), tr.alpha.size()));

  tr.mu.assign(hidden, T(0));
  tr.qsum.assign(hidden, T(0));
  tr.sigma.assign(hidden, T(0));
  for (std::size_t t = 0; t < frames; ++t) {
    const T a = tr.alpha[t];
    const T* row = tr.h2.data() + t * hidden;
    for (std::size_t j = 0; j < hidden; ++j) {
      tr.mu[j] += a * row[j];
      tr.qsum[j] += a * row[j] * row[j];
    }
  }
  tr.pooled = Tensor<T>(std::vector<std::size_t>{2 * hidden});
  for (std::size_t j = 0; j < hidden; ++j) {
    const double r2 = static_cast<double>(tr.qsum[j]) -
                      static_cast<double>(tr.mu[j]) * static_cast<double>(tr.mu[j]);
    tr.sigma[j] = static_cast<T>(std::sqrt(std::max(r2, kVarianceEps)));
    tr.pooled[j] = tr.mu[j];
    tr.pooled[hidden + j] = tr.sigma[j];
  }

  for (int out = 0; out < 2; ++out) {
    double acc = static_cast<double>(params.bc[out]);
    for (std::size_t i = 0; i < 2 * hidden; ++i)
      acc += static_cast<double>(tr.pooled[i]) * static_cast<double>(params.wc.at(i, out));
    tr.logits[static_cast<std::size_t>(out)] = static_cast<T>(acc);
  }
  return tr;
}

template <typename T>
ForwardTrace<T> forward(const LayerStack<T>& stack, const ModelParams<T>& params, double dropout_p,
                        Rng* rng, bool training) {
  return forward(select_layers(stack, params.layer_set), params, dropout_p, rng, training);
}

// Accumulates analytic gradients for one clip into `grads`; `dlogits` is
// the upstream gradient of the loss w.r.t. this clip's two logits.
template <typename T>
void backward(const std::vector<const Tensor<T>*>& layers, const ModelParams<T>& params,
              const ForwardTrace<T>& tr, const std::array<T, 2>& dlogits, double dropout_p,
              ModelParams<T>& grads) {
  const std::size_t frames = tr.fused.rows();
  const std::size_t hidden = params.hidden();
  const std::size_t attn = params.attn();

  // classifier
  Tensor<T> dpooled(std::vector<std::size_t>{2 * hidden});
  for (std::size_t i = 0; i < 2 * hidden; ++i) {
    grads.wc.at(i, 0) += tr.pooled[i] * dlogits[0];
    grads.wc.at(i, 1) += tr.pooled[i] * dlogits[1];
    dpooled[i] = params.wc.at(i, 0) * dlogits[0] + params.wc.at(i, 1) * dlogits[1];
  }
  grads.bc[0] += dlogits[0];
  grads.bc[1] += dlogits[1];

  // statistics pooling
  std::vector<T> dmu(hidden), dq(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double r2 = static_cast<double>(tr.qsum[j]) -
                      static_cast<double>(tr.mu[j]) * static_cast<double>(tr.mu[j]);
    const T dsigma = dpooled[hidden + j];
    T dr = T(0);
    if (r2 > kVarianceEps) dr = static_cast<T>(dsigma / (T(2) * tr.sigma[j]));
    dq[j] = dr;
    dmu[j] = dpooled[j] - T(2) * tr.mu[j] * dr;
  }
  std::vector<T> dalpha(frames, T(0));
  Tensor<T> dh2(tr.h2.shape());
  for (std::size_t t = 0; t < frames; ++t) {
    const T a = tr.alpha[t];
    const T* row = tr.h2.data() + t * hidden;
    T* drow = dh2.data() + t * hidden;
    double dacc = 0.0;
    for (std::size_t j = 0; j < hidden; ++j) {
      dacc += static_cast<double>(dmu[j]) * row[j] + static_cast<double>(dq[j]) * row[j] * row[j];
      drow[j] = a * (dmu[j] + T(2) * dq[j] * row[j]);
    }
    dalpha[t] = static_cast<T>(dacc);
  }

  // attention
  std::vector<T> de(frames);
  softmax_backward(std::span<const T>(tr.alpha.data(), frames),
                   std::span<const T>(dalpha.data(), frames), std::span<T>(de.data(), frames));
  Tensor<T> dc(tr.u.shape());
  for (std::size_t t = 0; t < frames; ++t) {
    const T det = de[t];
    const T* urow = tr.u.data() + t * attn;
    T* crow = dc.data() + t * attn;
    for (std::size_t a = 0; a < attn; ++a) {
      grads.v[a] += det * urow[a];
      crow[a] = det * params.v[a] * (T(1) - urow[a] * urow[a]);
    }
  }
  // k cancels in the frame softmax; its gradient is identically zero.
  {
    const Tensor<T> dwa = matmul_tn(tr.h2, dc);
    for (std::size_t i = 0; i < dwa.size(); ++i) grads.wa[i] += dwa[i];
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t a = 0; a < attn; ++a) grads.ba[a] += dc.at(t, a);
    const Tensor<T> dh2_att = matmul_nt(dc, params.wa);
    for (std::size_t i = 0; i < dh2.size(); ++i) dh2[i] += dh2_att[i];
  }

  // projection 2
  Tensor<T> dz2 = relu_backward(tr.z2, dropout_backward(dh2, tr.mask2, dropout_p));
  {
    const Tensor<T> dw2 = matmul_tn(tr.h1, dz2);
    for (std::size_t i = 0; i < dw2.size(); ++i) grads.w2[i] += dw2[i];
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t j = 0; j < hidden; ++j) grads.b2[j] += dz2.at(t, j);
  }
  Tensor<T> dh1 = matmul_nt(dz2, params.w2);

  // projection 1
  Tensor<T> dz1 = relu_backward(tr.z1, dropout_backward(dh1, tr.mask1, dropout_p));
  {
    const Tensor<T> dw1 = matmul_tn(tr.fused, dz1);
    for (std::size_t i = 0; i < dw1.size(); ++i) grads.w1[i] += dw1[i];
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t j = 0; j < hidden; ++j) grads.b1[j] += dz1.at(t, j);
  }
  const Tensor<T> dfused = matmul_nt(dz1, params.w1);

  // fusion
  std::vector<T> dw(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i)
    dw[i] = static_cast<T>(dot_all(*layers[i], dfused));
  std::vector<T> dg(layers.size());
  softmax_backward(std::span<const T>(tr.weights.data(), tr.weights.size()),
                   std::span<const T>(dw.data(), dw.size()), std::span<T>(dg.data(), dg.size()));
  for (std::size_t i = 0; i < dg.size(); ++i) grads.fusion_logits[i] += dg[i];
}

}  // namespace effn
