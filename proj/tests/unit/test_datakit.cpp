#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "effn/error.hpp"
#include "effn/manifest.hpp"
#include "effn/synth.hpp"

using namespace effn;
namespace fs = std::filesystem;

namespace {

std::string scratch_dir(const std::string& name) {
  const std::string dir = (fs::temp_directory_path() / ("effn_datakit_" + name)).string();
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("manifest round trip, duplicates and bad tokens") {
  const std::string dir = scratch_dir("manifest");
  Manifest m;
  m.dir = dir;
  m.comments.push_back("# seed=9");
  m.entries.push_back({"a1", "-", Label::kBona, Split::kTrain});
  m.entries.push_back({"a2", "-", Label::kSpoof, Split::kDev});
  m.entries.push_back({"a3", "-", Label::kSpoof, Split::kEval});
  const std::string path = dir + "/m.tsv";
  write_manifest(path, m);

  const Manifest r = load_manifest(path);
  REQUIRE(r.entries.size() == 3);
  CHECK(r.comments == m.comments);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.entries[i].trial_id == m.entries[i].trial_id);
    CHECK(r.entries[i].label == m.entries[i].label);
    CHECK(r.entries[i].split == m.entries[i].split);
  }

  std::ofstream dup(path, std::ios::app);
  dup << "a1\t-\tbona\ttrain\n";
  dup.close();
  CHECK_THROWS_AS(load_manifest(path), FormatError);

  const std::string bad = dir + "/bad.tsv";
  std::ofstream bf(bad);
  bf << "x\t-\tgenuine\ttrain\n";
  bf.close();
  CHECK_THROWS_AS(load_manifest(bad), FormatError);

  const std::string missing_ref = dir + "/missing.tsv";
  std::ofstream mf(missing_ref);
  mf << "x\tno_such.wav\tbona\ttrain\n";
  mf.close();
  CHECK_THROWS_AS(load_manifest(missing_ref), IoError);

  const std::string empty = dir + "/empty.tsv";
  std::ofstream(empty).close();
  CHECK(load_manifest(empty).entries.empty());
}

TEST_CASE("stratified split preserves ratios and is seeded") {
  Manifest m;
  for (int i = 0; i < 50; ++i)
    m.entries.push_back({"b" + std::to_string(i), "-", Label::kBona, Split::kTrain});
  for (int i = 0; i < 200; ++i)
    m.entries.push_back({"s" + std::to_string(i), "-", Label::kSpoof, Split::kTrain});

  split_manifest(m, 0.8, 0.1, 0.1, 7);
  std::size_t counts[3] = {0, 0, 0};
  std::size_t bona_counts[3] = {0, 0, 0};
  for (const auto& e : m.entries) {
    counts[static_cast<int>(e.split)] += 1;
    if (e.label == Label::kBona) bona_counts[static_cast<int>(e.split)] += 1;
  }
  CHECK(counts[0] == 200);
  CHECK(counts[1] == 25);
  CHECK(counts[2] == 25);
  CHECK(bona_counts[0] == 40);
  CHECK(bona_counts[1] == 5);
  CHECK(bona_counts[2] == 5);

  Manifest m2;
  m2.entries = m.entries;
  for (auto& e : m2.entries) e.split = Split::kTrain;
  split_manifest(m2, 0.8, 0.1, 0.1, 7);
  for (std::size_t i = 0; i < m.entries.size(); ++i)
    CHECK(m.entries[i].split == m2.entries[i].split);

  Manifest tiny;
  tiny.entries.push_back({"b0", "-", Label::kBona, Split::kTrain});
  tiny.entries.push_back({"b1", "-", Label::kBona, Split::kTrain});
  tiny.entries.push_back({"s0", "-", Label::kSpoof, Split::kTrain});
  tiny.entries.push_back({"s1", "-", Label::kSpoof, Split::kTrain});
  tiny.entries.push_back({"s2", "-", Label::kSpoof, Split::kTrain});
  CHECK_THROWS_AS(split_manifest(tiny, 0.8, 0.1, 0.1, 1), ParameterError);
  CHECK_THROWS_AS(split_manifest(m, 0.5, 0.1, 0.1, 1), ParameterError);
}

TEST_CASE("synthetic corpus counts, determinism and self-description") {
  SynthConfig cfg;
  cfg.seed = 11;
  cfg.n_bona = 6;
  cfg.n_spoof = 24;

  const std::string dir_a = scratch_dir("corpus_a");
  const Manifest ma = gen_synthetic_corpus(cfg, dir_a, 2);
  CHECK(ma.entries.size() == 30);
  CHECK(ma.count_label(Label::kBona) == 6);
  CHECK(ma.count_label(Label::kSpoof) == 24);
  bool has_seed_comment = false;
  for (const auto& c : ma.comments) has_seed_comment |= c.find("seed=11") != std::string::npos;
  CHECK(has_seed_comment);

  const std::string dir_b = scratch_dir("corpus_b");
  gen_synthetic_corpus(cfg, dir_b, 1);
  for (const auto& e : ma.entries) {
    std::ifstream fa(dir_a + "/" + e.path, std::ios::binary);
    std::ifstream fb(dir_b + "/" + e.path, std::ios::binary);
    const std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ba == bb);
  }
  const Manifest loaded = load_manifest(dir_a + "/manifest.tsv");
  CHECK(loaded.entries.size() == 30);

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("clip durations exercise both repeat and truncate") {
  SynthConfig cfg;
  cfg.seed = 3;
  bool shorter = false, longer = false;
  for (int i = 0; i < 24; ++i) {
    const AudioClip c = synth_clip(cfg, Label::kBona, i);
    CHECK(c.samples.size() >= 2 * 16000);
    CHECK(c.samples.size() <= 12 * 16000);
    shorter |= c.samples.size() < 160000;
    longer |= c.samples.size() > 160000;
  }
  CHECK(shorter);
  CHECK(longer);
}

TEST_CASE("notch-band statistic separates the classes, RMS does not") {
  SynthConfig cfg;
  cfg.seed = 21;
  const auto notches = artifact_notch_hz(false);

  std::vector<double> bona_stat, spoof_stat, bona_rms, spoof_rms;
  for (int i = 0; i < 30; ++i) {
    const AudioClip b = synth_clip(cfg, Label::kBona, i);
    const AudioClip s = synth_clip(cfg, Label::kSpoof, i);
    bona_stat.push_back(notch_band_ratio(b, notches));
    spoof_stat.push_back(notch_band_ratio(s, notches));
    auto rms = [](const AudioClip& c) {
      double acc = 0.0;
      for (const float v : c.samples) acc += static_cast<double>(v) * v;
      return std::sqrt(acc / c.samples.size());
    };
    bona_rms.push_back(rms(b));
    spoof_rms.push_back(rms(s));
  }

  // band-ratio threshold at the geometric midpoint of the class medians
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double thr = std::sqrt(median(bona_stat) * median(spoof_stat));
  int correct = 0;
  for (const double v : bona_stat) correct += v > thr;
  for (const double v : spoof_stat) correct += v <= thr;
  const double accuracy = static_cast<double>(correct) / 60.0;
  CHECK(accuracy > 0.9);

  // RMS distributions overlap: neither class dominates the other
  const double max_bona = *std::max_element(bona_rms.begin(), bona_rms.end());
  const double min_bona = *std::min_element(bona_rms.begin(), bona_rms.end());
  const double max_spoof = *std::max_element(spoof_rms.begin(), spoof_rms.end());
  const double min_spoof = *std::min_element(spoof_rms.begin(), spoof_rms.end());
  CHECK(std::max(min_bona, min_spoof) < std::min(max_bona, max_spoof));
}

TEST_CASE("domain2 moves the notch positions") {
  const auto d1 = artifact_notch_hz(false);
  const auto d2 = artifact_notch_hz(true);
  REQUIRE(d1.size() == d2.size());
  for (std::size_t i = 0; i < d1.size(); ++i) CHECK(d1[i] != d2[i]);

  // clips from the two domains differ
  SynthConfig c1, c2;
  c1.seed = c2.seed = 5;
  c2.domain2 = true;
  const AudioClip a = synth_clip(c1, Label::kSpoof, 0);
  const AudioClip b = synth_clip(c2, Label::kSpoof, 0);
  CHECK(a.samples != b.samples);
}

TEST_CASE("counts must be positive") {
  SynthConfig cfg;
  cfg.n_bona = 0;
  CHECK_THROWS_AS(gen_synthetic_corpus(cfg, scratch_dir("bad"), 1), ParameterError);
}
