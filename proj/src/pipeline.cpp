#include "effn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "effn/checkpoint.hpp"
#include "effn/parallel.hpp"

namespace fs = std::filesystem;

namespace effn {

namespace {

void check_id_is_filename(const std::string& id) {
  if (id.empty() || id.find('/') != std::string::npos || id.find('\\') != std::string::npos ||
      id == "." || id == "..")
    throw ParameterError("trial id '" + id + "' is not usable as a file name");
}

void write_index(const std::string& path, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open index " + path);
  for (const auto& [id, rel] : rows) f << id << '\t' << rel << '\n';
  if (!f) throw IoError("short write to index " + path);
}

}  // namespace

AudioClip load_pipeline_clip(const Manifest& manifest, const ManifestEntry& entry,
                             std::uint64_t seed, std::uint64_t epoch) {
  AudioClip clip = read_wav(manifest.resolve(entry.path));
  clip = to_mono(clip);
  clip = resample(clip, 16000);
  if (entry.split == Split::kTrain) {
    Rng rng = derive_rng(seed, fnv1a64(entry.trial_id), epoch);
    return fit_duration(clip, 10.0, rng);
  }
  return fit_duration_eval(clip, 10.0);
}

NormStats pipeline_stats(const Manifest& manifest, std::uint64_t seed, int threads) {
  const std::vector<ManifestEntry> train = manifest.with_split(Split::kTrain);
  if (train.empty()) throw ParameterError("stats: manifest has no train entries");

  // Per-clip partials reduced in manifest order, so the result does not
  // depend on the thread count.
  std::vector<double> sums(train.size()), counts(train.size());
  parallel_for(train.size(), threads, [&](std::size_t i) {
    const MelSpec spec = logmel(load_pipeline_clip(manifest, train[i], seed));
    double s = 0.0;
    for (const float v : spec.frames) s += static_cast<double>(v);
    sums[i] = s;
    counts[i] = static_cast<double>(spec.frames.size());
  });
  double total = 0.0, count = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    total += sums[i];
    count += counts[i];
  }
  const double mean = total / count;

  std::vector<double> sq(train.size());
  parallel_for(train.size(), threads, [&](std::size_t i) {
    const MelSpec spec = logmel(load_pipeline_clip(manifest, train[i], seed));
    double s = 0.0;
    for (const float v : spec.frames) {
      const double d = static_cast<double>(v) - mean;
      s += d * d;
    }
    sq[i] = s;
  });
  double sq_total = 0.0;
  for (const double s : sq) sq_total += s;

  NormStats stats;
  stats.mean = mean;
  stats.std_dev = std::max(std::sqrt(sq_total / count), 1e-5);
  stats.source = "train";
  stats.count = static_cast<std::uint64_t>(count);
  return stats;
}

void pipeline_extract(const Manifest& manifest, const NormStats& stats, const std::string& out_dir,
                      std::uint64_t seed, int threads) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("extract: cannot create " + out_dir + ": " + ec.message());
  for (const auto& e : manifest.entries) check_id_is_filename(e.trial_id);

  parallel_for(manifest.entries.size(), threads, [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    const MelSpec spec =
        fit_frames(normalize(logmel(load_pipeline_clip(manifest, e, seed)), stats));
    LayerStackF single;
    single.layers.push_back(spec.frames);
    write_layerstack(single, (fs::path(out_dir) / (e.trial_id + ".lsk")).string());
  });

  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& e : manifest.entries) rows.emplace_back(e.trial_id, e.trial_id + ".lsk");
  write_index((fs::path(out_dir) / "features.idx").string(), rows);
}

void pipeline_encode_stub(const Manifest& manifest, const std::string& features_dir,
                          const std::string& out_dir, const EncoderSpec& spec, int threads) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("encode: cannot create " + out_dir + ": " + ec.message());
  const auto feature_index = read_index((fs::path(features_dir) / "features.idx").string());

  parallel_for(manifest.entries.size(), threads, [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    const auto it = feature_index.find(e.trial_id);
    if (it == feature_index.end())
      throw IoError("encode: missing feature for trial " + e.trial_id);
    const LayerStackF single =
        read_layerstack((fs::path(features_dir) / it->second).string());
    MelSpec features;
    features.frames = single.layers.at(0);
    features.normalized = true;
    const LayerStackF stack = encode_stub(spec, features);
    write_layerstack(stack, (fs::path(out_dir) / (e.trial_id + ".lsk")).string());
  });

  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& e : manifest.entries) rows.emplace_back(e.trial_id, e.trial_id + ".lsk");
  write_index((fs::path(out_dir) / "embeddings.idx").string(), rows);
}

void pipeline_encode_file(const Manifest& manifest, const std::string& in_dir,
                          const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("encode: cannot create " + out_dir + ": " + ec.message());
  const auto in_index = read_index((fs::path(in_dir) / "embeddings.idx").string());

  int layers = -1;
  std::size_t frames = 0, dim = 0;
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& e : manifest.entries) {
    const auto it = in_index.find(e.trial_id);
    if (it == in_index.end()) throw IoError("encode: missing embedding for trial " + e.trial_id);
    const LayerStackF stack = read_layerstack((fs::path(in_dir) / it->second).string());
    if (layers < 0) {
      layers = stack.num_layers();
      frames = stack.frames();
      dim = stack.dim();
    } else if (stack.num_layers() != layers || stack.frames() != frames || stack.dim() != dim) {
      throw FormatError("encode: embedding shape for trial " + e.trial_id +
                        " disagrees with the rest of the corpus");
    }
    write_layerstack(stack, (fs::path(out_dir) / (e.trial_id + ".lsk")).string());
    rows.emplace_back(e.trial_id, e.trial_id + ".lsk");
  }
  write_index((fs::path(out_dir) / "embeddings.idx").string(), rows);
}

std::map<std::string, std::string> read_index(const std::string& index_path) {
  std::ifstream f(index_path);
  if (!f) throw IoError("cannot open index " + index_path);
  std::map<std::string, std::string> index;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("bad index line in " + index_path);
    index[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return index;
}

std::vector<TensorF> load_selected(const std::string& embeddings_dir,
                                   const std::map<std::string, std::string>& index,
                                   const std::string& trial_id, const std::vector<int>& layer_set) {
  const auto it = index.find(trial_id);
  if (it == index.end()) throw IoError("missing embedding for trial " + trial_id);
  const LayerStackF stack = read_layerstack((fs::path(embeddings_dir) / it->second).string());
  std::vector<TensorF> sel;
  sel.reserve(layer_set.size());
  for (const int id : layer_set) sel.push_back(stack.layer(id));
  return sel;
}

TrainRunResult pipeline_train(const Manifest& manifest, const std::string& embeddings_dir,
                              const TrainConfig& cfg, const std::string& run_dir,
                              const std::string& finetune_from) {
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) throw IoError("train: cannot create " + run_dir + ": " + ec.message());
  const auto index = read_index((fs::path(embeddings_dir) / "embeddings.idx").string());

  auto items_of = [&](Split split) {
    std::vector<TrainItem> items;
    for (const auto& e : manifest.with_split(split)) items.push_back({e.trial_id, e.label});
    return items;
  };
  const std::vector<TrainItem> train = items_of(Split::kTrain);
  const std::vector<TrainItem> dev = items_of(Split::kDev);

  TrainConfig run_cfg = cfg;
  ModelParams<float> init;
  if (!finetune_from.empty()) {
    const Checkpoint base = read_checkpoint(finetune_from);
    init = base.params;
    run_cfg.lr = cfg.finetune_lr;
    run_cfg.layer_set = init.layer_set;
    run_cfg.hidden = init.hidden();
    run_cfg.attn = init.attn();
  } else {
    // Model width comes from the embeddings themselves.
    if (train.empty() || dev.empty()) throw ParameterError("train: empty train or dev split");
    const auto probe = load_selected(embeddings_dir, index, train[0].trial_id, cfg.layer_set);
    Rng init_rng = derive_rng(cfg.seed, 0x1417);
    init = init_params<float>(probe[0].cols(), cfg.hidden, cfg.attn, cfg.layer_set, init_rng);
  }

  SelectedProvider<float> provider = [&](const std::string& id) {
    return load_selected(embeddings_dir, index, id, run_cfg.layer_set);
  };

  const TrainResult<float> result =
      train_loop<float>(provider, train, dev, std::move(init), run_cfg);

  Checkpoint best;
  best.params = result.best_params;
  best.dropout = run_cfg.dropout;
  if (!result.trajectory.empty()) {
    best.trajectory = TensorF(std::vector<std::size_t>{result.trajectory.size(),
                                                       run_cfg.layer_set.size()});
    for (std::size_t s = 0; s < result.trajectory.size(); ++s)
      for (std::size_t l = 0; l < run_cfg.layer_set.size(); ++l)
        best.trajectory.at(s, l) = result.trajectory[s][l];
  }
  const std::string ckpt_path = (fs::path(run_dir) / "best.ckpt").string();
  write_checkpoint(ckpt_path, best);
  write_metrics_csv((fs::path(run_dir) / "metrics.csv").string(), result.metrics);
  write_fusion_csv((fs::path(run_dir) / "fusion.csv").string(), run_cfg.layer_set,
                   result.trajectory);

  return {result.best_eer, result.best_step, ckpt_path};
}

void pipeline_score(const Manifest& manifest, const std::string& embeddings_dir,
                    const std::string& checkpoint_path, const std::string& scores_path) {
  const Checkpoint ckpt = read_checkpoint(checkpoint_path);
  const auto index = read_index((fs::path(embeddings_dir) / "embeddings.idx").string());
  std::ofstream f(scores_path, std::ios::trunc);
  if (!f) throw IoError("score: cannot open " + scores_path);
  char buf[64];
  for (const auto& e : manifest.entries) {
    const auto sel = load_selected(embeddings_dir, index, e.trial_id, ckpt.params.layer_set);
    const auto tr = forward(detail::layer_ptrs(sel), ckpt.params, 0.0, nullptr, false);
    std::snprintf(buf, sizeof(buf), "%.6f", static_cast<double>(tr.score()));
    f << e.trial_id << '\t' << buf << '\n';
  }
  if (!f) throw IoError("score: short write to " + scores_path);
}

std::vector<TrialScore> load_scores_with_labels(const std::string& scores_path,
                                                const Manifest& labels) {
  std::ifstream f(scores_path);
  if (!f) throw IoError("cannot open score file " + scores_path);
  std::map<std::string, Label> by_id;
  for (const auto& e : labels.entries) by_id[e.trial_id] = e.label;

  std::vector<TrialScore> scores;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("bad score line in " + scores_path);
    TrialScore s;
    s.trial_id = line.substr(0, tab);
    s.score = std::stod(line.substr(tab + 1));
    if (!seen.insert(s.trial_id).second)
      throw FormatError("duplicate trial '" + s.trial_id + "' in " + scores_path);
    const auto it = by_id.find(s.trial_id);
    if (it == by_id.end())
      throw FormatError("trial '" + s.trial_id + "' has no label in the manifest");
    s.label = it->second;
    scores.push_back(std::move(s));
  }
  return scores;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path);
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.6f\n", r.step, r.loss, r.dev_eer);
    f << buf;
  }
  if (!f) throw IoError("short write to " + path);
}

void write_fusion_csv(const std::string& path, const std::vector<int>& layer_set,
                      const std::vector<std::vector<float>>& trajectory) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path);
  char buf[128];
  for (std::size_t s = 0; s < trajectory.size(); ++s) {
    for (std::size_t l = 0; l < layer_set.size(); ++l) {
      std::snprintf(buf, sizeof(buf), "%zu,%d,%.9g\n", s + 1, layer_set[l],
                    static_cast<double>(trajectory[s][l]));
      f << buf;
    }
  }
  if (!f) throw IoError("short write to " + path);
}

}  // namespace effn
