#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "effn/encoder.hpp"
#include "effn/manifest.hpp"
#include "effn/mel.hpp"
#include "effn/trainer.hpp"

namespace effn {

// File-staged pipeline operations backing the CLI subcommands. Every
// stage is a pure function of its inputs and seeds, so reruns produce
// byte-identical outputs.

// Audio front-end for one manifest entry: read, mono, resample to 16 kHz
// and repeat/truncate to 10 s. Train-split clips draw their truncation
// offset from derive(seed, fnv1a(trial_id), epoch); dev/eval clips use
// offset 0.
AudioClip load_pipeline_clip(const Manifest& manifest, const ManifestEntry& entry,
                             std::uint64_t seed, std::uint64_t epoch = 0);

// Scalar normalization statistics over the unnormalized log-mels of the
// train split.
NormStats pipeline_stats(const Manifest& manifest, std::uint64_t seed, int threads);

// Normalized, frame-fitted 1024 x 128 features for every manifest entry,
// written as single-layer layerstack files plus "features.idx".
void pipeline_extract(const Manifest& manifest, const NormStats& stats, const std::string& out_dir,
                      std::uint64_t seed, int threads);

// Stub encoding of extracted features into 12-layer layerstack files plus
// "embeddings.idx"; or validation+copy of externally produced files.
void pipeline_encode_stub(const Manifest& manifest, const std::string& features_dir,
                          const std::string& out_dir, const EncoderSpec& spec, int threads);
void pipeline_encode_file(const Manifest& manifest, const std::string& in_dir,
                          const std::string& out_dir);

// Index files map "trial_id<TAB>relative_path".
std::map<std::string, std::string> read_index(const std::string& index_path);

// Loads the layer_set subset of one trial's embedding.
std::vector<TensorF> load_selected(const std::string& embeddings_dir,
                                   const std::map<std::string, std::string>& index,
                                   const std::string& trial_id, const std::vector<int>& layer_set);

struct TrainRunResult {
  double best_eer = 1.0;
  int best_step = 0;
  std::string checkpoint_path;
};

// Full training run: reads embeddings for the manifest's train/dev
// splits, trains, and writes best.ckpt, metrics.csv and fusion.csv under
// run_dir. When finetune_from is non-empty the checkpoint provides the
// initial parameters and cfg.finetune_lr replaces cfg.lr.
TrainRunResult pipeline_train(const Manifest& manifest, const std::string& embeddings_dir,
                              const TrainConfig& cfg, const std::string& run_dir,
                              const std::string& finetune_from = "");

// Eval-mode scores, one "trial_id<TAB>score" line per manifest entry.
void pipeline_score(const Manifest& manifest, const std::string& embeddings_dir,
                    const std::string& checkpoint_path, const std::string& scores_path);

// Joins a score file with manifest labels.
std::vector<TrialScore> load_scores_with_labels(const std::string& scores_path,
                                                const Manifest& labels);

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows);
void write_fusion_csv(const std::string& path, const std::vector<int>& layer_set,
                      const std::vector<std::vector<float>>& trajectory);

}  // namespace effn
