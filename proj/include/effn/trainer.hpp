#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "effn/adam.hpp"
#include "effn/eer.hpp"
#include "effn/loss.hpp"
#include "effn/model.hpp"
#include "effn/rng.hpp"

namespace effn {

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 32;
  double dropout = 0.1;
  int max_steps = 500;
  int eval_every = 50;
  std::uint64_t seed = 1;
  bool auto_weights = true;           // derived from the train split
  ClassWeights explicit_weights{};    // used when auto_weights == false
  std::size_t hidden = 256;
  std::size_t attn = 128;
  std::vector<int> layer_set = kDefaultLayerSet;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  double finetune_lr = 5e-5;
};

struct TrainItem {
  std::string trial_id;
  Label label = Label::kBona;
};

struct MetricRow {
  int step = 0;
  double loss = 0.0;  // NaN for the step-0 evaluation
  double dev_eer = 0.0;
};

template <typename T>
struct TrainResult {
  ModelParams<T> best_params;
  double best_eer = 1.0;
  int best_step = 0;
  ModelParams<T> final_params;
  std::vector<MetricRow> metrics;            // one row per dev evaluation
  std::vector<std::vector<T>> trajectory;    // fusion weights after each step
};

// Supplies the selected fusion layers of one clip, ordered like
// TrainConfig::layer_set.
template <typename T>
using SelectedProvider = std::function<std::vector<Tensor<T>>(const std::string& trial_id)>;

namespace detail {

template <typename T>
std::vector<const Tensor<T>*> layer_ptrs(const std::vector<Tensor<T>>& layers) {
  std::vector<const Tensor<T>*> p;
  p.reserve(layers.size());
  for (const auto& l : layers) p.push_back(&l);
  return p;
}

}  // namespace detail

template <typename T>
double dev_eer_of(const std::map<std::string, std::vector<Tensor<T>>>& cache,
                  const std::vector<TrainItem>& dev, const ModelParams<T>& params) {
  std::vector<TrialScore> scores;
  scores.reserve(dev.size());
  for (const auto& item : dev) {
    const auto tr =
        forward(detail::layer_ptrs(cache.at(item.trial_id)), params, 0.0, nullptr, false);
    scores.push_back({item.trial_id, static_cast<double>(tr.score()), item.label});
  }
  return compute_eer(scores).eer;
}

// Class-weighted training with per-epoch seeded shuffling and dev-EER
// checkpoint selection. Evaluates at step 0 (the untrained or fine-tuning
// start point), every eval_every steps and at the final step; ties keep
// the earlier step. Aborts with NumericError on a non-finite loss; the
// best checkpoint seen so far stays valid in the result.
template <typename T>
TrainResult<T> train_loop(const SelectedProvider<T>& provider, const std::vector<TrainItem>& train,
                          const std::vector<TrainItem>& dev, ModelParams<T> init,
                          const TrainConfig& cfg,
                          const std::function<void(int, double, const ModelParams<T>&)>& on_step =
                              nullptr) {
  if (train.empty() || dev.empty())
    throw ParameterError("train: empty train or dev manifest");
  if (cfg.batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
  if (!(cfg.lr >= 0.0)) throw ParameterError("train: lr must be non-negative");

  ClassWeights weights = cfg.explicit_weights;
  if (cfg.auto_weights) {
    std::uint64_t nb = 0, ns = 0;
    for (const auto& item : train) (item.label == Label::kBona ? nb : ns) += 1;
    weights = auto_class_weights(nb, ns);
  }
  weights = weights.canonical();

  std::map<std::string, std::vector<Tensor<T>>> cache;
  for (const auto& item : train)
    if (!cache.count(item.trial_id)) cache[item.trial_id] = provider(item.trial_id);
  for (const auto& item : dev)
    if (!cache.count(item.trial_id)) cache[item.trial_id] = provider(item.trial_id);

  TrainResult<T> result;
  result.best_params = init;
  result.best_eer = dev_eer_of(cache, dev, init);
  result.best_step = 0;
  result.metrics.push_back({0, std::numeric_limits<double>::quiet_NaN(), result.best_eer});

  ModelParams<T> params = std::move(init);
  AdamState<T> state(params);
  const AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps};

  std::vector<std::size_t> order(train.size());
  std::size_t cursor = order.size();  // forces a shuffle on first use
  std::uint64_t epoch = 0;

  for (int step = 1; step <= cfg.max_steps; ++step) {
    std::vector<std::size_t> batch;
    batch.reserve(cfg.batch_size);
    for (int i = 0; i < cfg.batch_size; ++i) {
      if (cursor >= order.size()) {
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        Rng shuffle_rng = derive_rng(cfg.seed, 0xe70c, epoch++);
        for (std::size_t j = order.size() - 1; j > 0; --j)
          std::swap(order[j], order[shuffle_rng.below(j + 1)]);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
      if (cursor >= order.size()) break;  // keep the epoch's tail as a short batch
    }

    std::vector<ForwardTrace<T>> traces;
    traces.reserve(batch.size());
    std::vector<std::array<T, 2>> logits;
    std::vector<Label> labels;
    for (std::size_t bi = 0; bi < batch.size(); ++bi) {
      const TrainItem& item = train[batch[bi]];
      Rng drop_rng = derive_rng(cfg.seed, 0xd509 + static_cast<std::uint64_t>(step), bi);
      traces.push_back(forward(detail::layer_ptrs(cache.at(item.trial_id)), params, cfg.dropout,
                               &drop_rng, true));
      logits.push_back(traces.back().logits);
      labels.push_back(item.label);
    }

    const LossResult<T> loss = weighted_ce(logits, labels, weights);
    if (!std::isfinite(loss.loss))
      throw NumericError("train: non-finite loss at step " + std::to_string(step));

    ModelParams<T> grads = zeros_like(params);
    for (std::size_t bi = 0; bi < batch.size(); ++bi) {
      const TrainItem& item = train[batch[bi]];
      backward(detail::layer_ptrs(cache.at(item.trial_id)), params, traces[bi], loss.dlogits[bi],
               cfg.dropout, grads);
    }
    adam_step(params, grads, state, adam);

    result.trajectory.push_back(fusion_weights(params.fusion_logits));
    if (on_step) on_step(step, loss.loss, params);

    if ((cfg.eval_every > 0 && step % cfg.eval_every == 0) || step == cfg.max_steps) {
      const double eer = dev_eer_of(cache, dev, params);
      result.metrics.push_back({step, loss.loss, eer});
      if (eer < result.best_eer) {
        result.best_eer = eer;
        result.best_step = step;
        result.best_params = params;
      }
    }
  }

  result.final_params = std::move(params);
  return result;
}

}  // namespace effn
