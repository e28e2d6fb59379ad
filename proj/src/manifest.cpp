#include "effn/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "effn/error.hpp"
#include "effn/rng.hpp"

namespace fs = std::filesystem;

namespace effn {

std::string to_string(Label label) { return label == Label::kBona ? "bona" : "spoof"; }

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    default: return "eval";
  }
}

Label parse_label(const std::string& token) {
  if (token == "bona") return Label::kBona;
  if (token == "spoof") return Label::kSpoof;
  throw FormatError("manifest: bad label token '" + token + "'");
}

Split parse_split(const std::string& token) {
  if (token == "train") return Split::kTrain;
  if (token == "dev") return Split::kDev;
  if (token == "eval") return Split::kEval;
  throw FormatError("manifest: bad split token '" + token + "'");
}

std::vector<ManifestEntry> Manifest::with_split(Split split) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == split) out.push_back(e);
  return out;
}

std::size_t Manifest::count_label(Label label) const {
  std::size_t n = 0;
  for (const auto& e : entries)
    if (e.label == label) ++n;
  return n;
}

std::string Manifest::resolve(const std::string& path) const {
  if (path.empty() || path == "-") return path;
  const fs::path p(path);
  if (p.is_absolute() || dir.empty()) return path;
  return (fs::path(dir) / p).string();
}

Manifest load_manifest(const std::string& path, bool check_files) {
  std::ifstream f(path);
  if (!f) throw IoError("load_manifest: cannot open " + path);
  Manifest m;
  m.dir = fs::path(path).parent_path().string();

  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      m.comments.push_back(line);
      continue;
    }
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 4)
      throw FormatError("load_manifest: expected 4 tab-separated columns at " + path + ":" +
                        std::to_string(lineno));
    if (cols[0] == "trial_id") continue;  // optional header row
    ManifestEntry e;
    e.trial_id = cols[0];
    e.path = cols[1];
    e.label = parse_label(cols[2]);
    e.split = parse_split(cols[3]);
    if (!seen.insert(e.trial_id).second)
      throw FormatError("load_manifest: duplicate trial_id '" + e.trial_id + "' in " + path);
    if (check_files && e.path != "-" && !e.path.empty()) {
      const std::string resolved = m.resolve(e.path);
      if (!fs::exists(resolved))
        throw IoError("load_manifest: missing file " + resolved + " for trial " + e.trial_id);
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("write_manifest: cannot open " + path);
  for (const auto& c : manifest.comments) f << c << "\n";
  for (const auto& e : manifest.entries)
    f << e.trial_id << '\t' << e.path << '\t' << to_string(e.label) << '\t' << to_string(e.split)
      << "\n";
  if (!f) throw IoError("write_manifest: short write to " + path);
}

ClassWeights auto_class_weights(const std::vector<ManifestEntry>& entries) {
  std::uint64_t n_bona = 0, n_spoof = 0;
  for (const auto& e : entries) (e.label == Label::kBona ? n_bona : n_spoof) += 1;
  return auto_class_weights(n_bona, n_spoof);
}

void split_manifest(Manifest& manifest, double train_frac, double dev_frac, double eval_frac,
                    std::uint64_t seed) {
  if (std::abs(train_frac + dev_frac + eval_frac - 1.0) > 1e-9)
    throw ParameterError("split_manifest: fractions must sum to 1");
  const double fracs[3] = {train_frac, dev_frac, eval_frac};

  for (const Label label : {Label::kBona, Label::kSpoof}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
      if (manifest.entries[i].label == label) idx.push_back(i);
    if (idx.empty()) continue;
    if (idx.size() < 3)
      throw ParameterError("split_manifest: class " + to_string(label) +
                           " has fewer samples than splits");

    Rng rng = derive_rng(seed, 0x5711, label == Label::kBona ? 0 : 1);
    for (std::size_t i = idx.size() - 1; i > 0; --i)
      std::swap(idx[i], idx[rng.below(i + 1)]);

    // Largest-remainder allocation of the class count over the splits.
    const std::size_t n = idx.size();
    std::size_t counts[3];
    double rems[3];
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      const double want = fracs[s] * static_cast<double>(n);
      counts[s] = static_cast<std::size_t>(want);
      rems[s] = want - static_cast<double>(counts[s]);
      assigned += counts[s];
    }
    while (assigned < n) {
      int best = 0;
      for (int s = 1; s < 3; ++s)
        if (rems[s] > rems[best]) best = s;
      counts[best] += 1;
      rems[best] = -1.0;
      ++assigned;
    }
    std::size_t at = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t i = 0; i < counts[s]; ++i)
        manifest.entries[idx[at++]].split = static_cast<Split>(s);
  }
}

}  // namespace effn
