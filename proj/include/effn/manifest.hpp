#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "effn/loss.hpp"

namespace effn {

enum class Split : std::uint8_t { kTrain = 0, kDev = 1, kEval = 2 };

std::string to_string(Label label);
std::string to_string(Split split);
Label parse_label(const std::string& token);
Split parse_split(const std::string& token);

// One corpus row: "trial_id<TAB>path<TAB>label<TAB>split". The path is a
// WAV (or embedding id) relative to the manifest's directory; "-" marks
// an entry with no backing file (label-only manifests).
struct ManifestEntry {
  std::string trial_id;
  std::string path;
  Label label = Label::kBona;
  Split split = Split::kTrain;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> comments;  // "#"-prefixed header lines, kept on rewrite
  std::string dir;                    // directory the manifest was loaded from

  std::vector<ManifestEntry> with_split(Split split) const;
  std::size_t count_label(Label label) const;
  std::string resolve(const std::string& path) const;
};

// check_files verifies that every non-"-" path exists relative to the
// manifest location.
Manifest load_manifest(const std::string& path, bool check_files = true);
void write_manifest(const std::string& path, const Manifest& manifest);

ClassWeights auto_class_weights(const std::vector<ManifestEntry>& entries);

// Seeded stratified split; per class the 80/10/10-style allocation uses
// largest remainders, so each split's class ratio stays within one sample
// of the global ratio.
void split_manifest(Manifest& manifest, double train_frac, double dev_frac, double eval_frac,
                    std::uint64_t seed);

}  // namespace effn
