#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "effn/audio.hpp"
#include "effn/manifest.hpp"

namespace effn {

// Deterministic synthetic corpus: environmental-ish bona fide clips
// (band-filtered noise bursts plus amplitude-modulated tones, 2-12 s so
// both repeat and truncate paths run), and spoof clips made from the same
// generator plus a detectable artifact: a comb of narrow spectral notches
// at fixed mel positions and 8-level quantization of the amplitude
// envelope. Everything is peak-normalized afterwards, so total energy
// does not separate the classes. `domain2` moves the notch positions and
// changes the burst statistics.
struct SynthConfig {
  std::uint64_t seed = 1;
  int n_bona = 50;
  int n_spoof = 200;
  bool domain2 = false;
  int sample_rate = 16000;
};

// Notch center frequencies (Hz) of the spoof artifact for a domain.
std::vector<double> artifact_notch_hz(bool domain2);

AudioClip synth_clip(const SynthConfig& cfg, Label label, int index);

// Writes wav/<id>.wav files plus manifest.tsv (all entries split=train;
// callers typically apply split_manifest next). The manifest records the
// seed in a comment line.
Manifest gen_synthetic_corpus(const SynthConfig& cfg, const std::string& out_dir, int threads = 1);

// Mean power in the notch bands over mean power in their flanking bands;
// low values flag the artifact. Used by tests as the independent
// separability oracle and exposed here so both domains share geometry.
double notch_band_ratio(const AudioClip& clip, const std::vector<double>& notch_hz);

}  // namespace effn
