// Command-line front end for the environmental audio deepfake detection
// pipeline. Subcommands stage everything through files, so externally
// computed embeddings can replace the stub encoder via `encode --kind file`.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "effn/checkpoint.hpp"
#include "effn/eer.hpp"
#include "effn/error.hpp"
#include "effn/manifest.hpp"
#include "effn/pipeline.hpp"
#include "effn/synth.hpp"

namespace fs = std::filesystem;
using namespace effn;

namespace {

std::vector<int> parse_layer_set(const std::string& text) {
  std::vector<int> out;
  const std::size_t dash = text.find('-');
  if (dash != std::string::npos && text.find(',') == std::string::npos) {
    const int lo = std::stoi(text.substr(0, dash));
    const int hi = std::stoi(text.substr(dash + 1));
    if (lo < 1 || hi < lo) throw ParameterError("bad layer range '" + text + "'");
    for (int i = lo; i <= hi; ++i) out.push_back(i);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string tok = text.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!tok.empty()) out.push_back(std::stoi(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ParameterError("empty layer set '" + text + "'");
  return out;
}

void log_config(const CLI::App* cmd) {
  std::cerr << "config: subcommand=" << cmd->get_name() << "\n";
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_name().empty() || opt->get_name() == "--help") continue;
    if (opt->count() > 0 || !opt->get_default_str().empty()) {
      std::string value = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
      std::cerr << "config: " << opt->get_name() << "=" << value << "\n";
    }
  }
}

struct CommonTrainFlags {
  std::string manifest_path, embeddings, run_dir, config_file;
  TrainConfig cfg;
  std::string layers = "4-9";
  std::string weights = "auto";

  void wire(CLI::App* cmd) {
    cmd->add_option("--manifest", manifest_path, "corpus manifest (train/dev splits)")->required();
    cmd->add_option("--embeddings", embeddings, "embedding directory from `encode`")->required();
    cmd->add_option("--out", run_dir, "run directory for checkpoint and logs")->required();
    cmd->add_option("--lr", cfg.lr, "learning rate")->capture_default_str();
    cmd->add_option("--batch-size", cfg.batch_size, "batch size")->capture_default_str();
    cmd->add_option("--dropout", cfg.dropout, "dropout probability")->capture_default_str();
    cmd->add_option("--max-steps", cfg.max_steps, "optimizer steps")->capture_default_str();
    cmd->add_option("--eval-every", cfg.eval_every, "dev evaluation cadence")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "training seed")->capture_default_str();
    cmd->add_option("--hidden", cfg.hidden, "projection width")->capture_default_str();
    cmd->add_option("--attn", cfg.attn, "attention width")->capture_default_str();
    cmd->add_option("--layers", layers, "fusion layer ids, e.g. 4-9 or 4,5,6")
        ->capture_default_str();
    cmd->add_option("--class-weights", weights, "auto or BONA:SPOOF")->capture_default_str();
    cmd->set_config("--config", "", "flat key=value config file");
  }

  void finish() {
    cfg.layer_set = parse_layer_set(layers);
    if (weights == "auto") {
      cfg.auto_weights = true;
    } else {
      const std::size_t colon = weights.find(':');
      if (colon == std::string::npos)
        throw ParameterError("--class-weights expects auto or BONA:SPOOF");
      cfg.auto_weights = false;
      cfg.explicit_weights =
          ClassWeights{std::stod(weights.substr(0, colon)), std::stod(weights.substr(colon + 1))};
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"environmental audio deepfake detection pipeline"};
  app.require_subcommand(1);

  // synth-data
  auto* synth_cmd = app.add_subcommand("synth-data", "generate a deterministic synthetic corpus");
  SynthConfig synth_cfg;
  std::string synth_out, synth_shift = "none", synth_split = "0.8,0.1,0.1";
  std::uint64_t synth_split_seed = 1;
  int threads = 0;
  synth_cmd->add_option("--out", synth_out, "output corpus directory")->required();
  synth_cmd->add_option("--seed", synth_cfg.seed, "corpus seed")->capture_default_str();
  synth_cmd->add_option("--n-bona", synth_cfg.n_bona, "bona fide clip count")->capture_default_str();
  synth_cmd->add_option("--n-spoof", synth_cfg.n_spoof, "spoof clip count")->capture_default_str();
  synth_cmd->add_option("--shift", synth_shift, "none or domain2")->capture_default_str();
  synth_cmd->add_option("--split", synth_split, "train,dev,eval fractions")->capture_default_str();
  synth_cmd->add_option("--split-seed", synth_split_seed, "split seed")->capture_default_str();
  synth_cmd->add_option("--threads", threads, "worker cap (0 = auto)")->capture_default_str();

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "global feature statistics over the train split");
  std::string stats_manifest, stats_out;
  std::uint64_t stats_seed = 1;
  stats_cmd->add_option("--manifest", stats_manifest, "corpus manifest")->required();
  stats_cmd->add_option("--out", stats_out, "stats file")->required();
  stats_cmd->add_option("--seed", stats_seed, "front-end seed (truncation offsets)")
      ->capture_default_str();
  stats_cmd->add_option("--threads", threads, "worker cap (0 = auto)")->capture_default_str();

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "normalized 1024x128 features per clip");
  std::string ex_manifest, ex_stats, ex_out;
  std::uint64_t ex_seed = 1;
  extract_cmd->add_option("--manifest", ex_manifest, "corpus manifest")->required();
  extract_cmd->add_option("--stats", ex_stats, "stats file from `stats`")->required();
  extract_cmd->add_option("--out", ex_out, "feature directory")->required();
  extract_cmd->add_option("--seed", ex_seed, "front-end seed (truncation offsets)")
      ->capture_default_str();
  extract_cmd->add_option("--threads", threads, "worker cap (0 = auto)")->capture_default_str();

  // encode
  auto* encode_cmd = app.add_subcommand("encode", "encoder hidden states per clip");
  std::string en_manifest, en_features, en_out, en_kind = "stub", en_in;
  EncoderSpec en_spec;
  en_spec.dim = 768;
  encode_cmd->add_option("--manifest", en_manifest, "corpus manifest")->required();
  encode_cmd->add_option("--out", en_out, "embedding directory")->required();
  encode_cmd->add_option("--kind", en_kind, "stub or file")->capture_default_str();
  encode_cmd->add_option("--features", en_features, "feature directory (stub)");
  encode_cmd->add_option("--in", en_in, "external embedding directory (file)");
  encode_cmd->add_option("--dim", en_spec.dim, "stub hidden width")->capture_default_str();
  encode_cmd->add_option("--encoder-seed", en_spec.seed, "stub seed")->capture_default_str();
  encode_cmd->add_option("--downsample", en_spec.downsample, "feature frames per hidden step")
      ->capture_default_str();
  encode_cmd->add_option("--num-layers", en_spec.num_layers, "stub layer count")
      ->capture_default_str();
  encode_cmd->add_option("--threads", threads, "worker cap (0 = auto)")->capture_default_str();

  // train / finetune
  auto* train_cmd = app.add_subcommand("train", "train the back-end from embeddings");
  CommonTrainFlags train_flags;
  train_flags.wire(train_cmd);

  auto* finetune_cmd = app.add_subcommand("finetune", "continue training from a checkpoint");
  CommonTrainFlags finetune_flags;
  std::string finetune_from;
  finetune_flags.cfg.max_steps = 200;
  finetune_flags.wire(finetune_cmd);
  finetune_cmd->add_option("--from", finetune_from, "base checkpoint")->required();
  finetune_cmd->add_option("--finetune-lr", finetune_flags.cfg.finetune_lr, "reduced learning rate")
      ->capture_default_str();

  // score
  auto* score_cmd = app.add_subcommand("score", "eval-mode detection scores per trial");
  std::string sc_manifest, sc_embeddings, sc_ckpt, sc_out, sc_split;
  score_cmd->add_option("--manifest", sc_manifest, "corpus manifest")->required();
  score_cmd->add_option("--embeddings", sc_embeddings, "embedding directory")->required();
  score_cmd->add_option("--checkpoint", sc_ckpt, "model checkpoint")->required();
  score_cmd->add_option("--out", sc_out, "score file")->required();
  score_cmd->add_option("--split", sc_split, "restrict to one split (train|dev|eval)");

  // eval-eer
  auto* eer_cmd = app.add_subcommand("eval-eer", "equal error rate of a score file");
  std::string eer_scores, eer_labels, eer_split;
  eer_cmd->add_option("--scores", eer_scores, "score file from `score`")->required();
  eer_cmd->add_option("--labels", eer_labels, "manifest with ground-truth labels")->required();
  eer_cmd->add_option("--split", eer_split, "restrict to one split (train|dev|eval)");

  // fusion-weights
  auto* fw_cmd = app.add_subcommand("fusion-weights", "fusion-weight trajectory of a checkpoint");
  std::string fw_ckpt, fw_out;
  fw_cmd->add_option("--checkpoint", fw_ckpt, "model checkpoint")->required();
  fw_cmd->add_option("--out", fw_out, "output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* cmd = app.get_subcommands().at(0);
    log_config(cmd);

    if (cmd == synth_cmd) {
      if (synth_shift != "none" && synth_shift != "domain2")
        throw ParameterError("--shift must be none or domain2");
      synth_cfg.domain2 = synth_shift == "domain2";
      Manifest m = gen_synthetic_corpus(synth_cfg, synth_out, threads);
      double fr[3];
      if (std::sscanf(synth_split.c_str(), "%lf,%lf,%lf", &fr[0], &fr[1], &fr[2]) != 3)
        throw ParameterError("--split expects three comma-separated fractions");
      split_manifest(m, fr[0], fr[1], fr[2], synth_split_seed);
      write_manifest((fs::path(synth_out) / "manifest.tsv").string(), m);
      std::cout << "corpus: " << m.entries.size() << " clips in " << synth_out << "\n";
    } else if (cmd == stats_cmd) {
      const Manifest m = load_manifest(stats_manifest);
      const NormStats stats = pipeline_stats(m, stats_seed, threads);
      write_stats(stats_out, stats);
      std::cout << "stats: mean=" << stats.mean << " std=" << stats.std_dev
                << " count=" << stats.count << "\n";
    } else if (cmd == extract_cmd) {
      const Manifest m = load_manifest(ex_manifest);
      const NormStats stats = read_stats(ex_stats);
      pipeline_extract(m, stats, ex_out, ex_seed, threads);
      std::cout << "features: " << m.entries.size() << " clips in " << ex_out << "\n";
    } else if (cmd == encode_cmd) {
      const Manifest m = load_manifest(en_manifest);
      if (en_kind == "stub") {
        if (en_features.empty()) throw ParameterError("encode --kind stub needs --features");
        en_spec.kind = EncoderSpec::Kind::kStub;
        pipeline_encode_stub(m, en_features, en_out, en_spec, threads);
      } else if (en_kind == "file") {
        if (en_in.empty()) throw ParameterError("encode --kind file needs --in");
        pipeline_encode_file(m, en_in, en_out);
      } else {
        throw ParameterError("--kind must be stub or file");
      }
      std::cout << "embeddings: " << m.entries.size() << " clips in " << en_out << "\n";
    } else if (cmd == train_cmd || cmd == finetune_cmd) {
      CommonTrainFlags& flags = cmd == train_cmd ? train_flags : finetune_flags;
      flags.finish();
      const Manifest m = load_manifest(flags.manifest_path);
      const TrainRunResult r = pipeline_train(m, flags.embeddings, flags.cfg, flags.run_dir,
                                              cmd == train_cmd ? "" : finetune_from);
      char buf[128];
      std::snprintf(buf, sizeof(buf), "best: step=%d dev_eer=%.6f", r.best_step, r.best_eer);
      std::cout << buf << " checkpoint=" << r.checkpoint_path << "\n";
    } else if (cmd == score_cmd) {
      Manifest m = load_manifest(sc_manifest);
      if (!sc_split.empty()) {
        const Split keep = parse_split(sc_split);
        Manifest filtered;
        filtered.dir = m.dir;
        filtered.entries = m.with_split(keep);
        m = std::move(filtered);
      }
      pipeline_score(m, sc_embeddings, sc_ckpt, sc_out);
      std::cout << "scores: " << m.entries.size() << " trials in " << sc_out << "\n";
    } else if (cmd == eer_cmd) {
      Manifest m = load_manifest(eer_labels, false);
      if (!eer_split.empty()) {
        const Split keep = parse_split(eer_split);
        Manifest filtered;
        filtered.dir = m.dir;
        filtered.entries = m.with_split(keep);
        m = std::move(filtered);
      }
      const auto scores = load_scores_with_labels(eer_scores, m);
      const EerResult r = compute_eer(scores);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "eer=%.6f threshold=%.6f n_bona=%zu n_spoof=%zu\n", r.eer,
                    r.threshold, r.n_bona, r.n_spoof);
      std::cout << buf;
    } else if (cmd == fw_cmd) {
      const Checkpoint ckpt = read_checkpoint(fw_ckpt);
      std::string text;
      char buf[128];
      for (std::size_t s = 0; s < ckpt.trajectory.rows(); ++s)
        for (std::size_t l = 0; l < ckpt.params.layer_set.size(); ++l) {
          std::snprintf(buf, sizeof(buf), "%zu,%d,%.9g\n", s + 1, ckpt.params.layer_set[l],
                        static_cast<double>(ckpt.trajectory.at(s, l)));
          text += buf;
        }
      if (fw_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(fw_out, std::ios::trunc);
        if (!f) throw IoError("cannot open " + fw_out);
        f << text;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
