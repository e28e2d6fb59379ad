#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "effn/rng.hpp"

namespace effn {

// A decoded recording. Samples are interleaved when channels == 2 and
// scaled to [-1, 1]. After the ingestion pipeline (mono, 16 kHz, fixed
// duration) a clip is exactly 160000 mono samples.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;
  int channels = 1;

  std::size_t frames() const { return channels > 0 ? samples.size() / channels : 0; }
};

// RIFF/WAVE reader for PCM16 and IEEE float32, 1 or 2 channels. PCM16
// scaling is v / 32768 (so -32768 -> -1.0); float input is clamped to
// [-1, 1].
AudioClip read_wav(const std::string& path);

// Writes mono or stereo PCM16. Samples are clamped then scaled by 32767.
void write_wav(const std::string& path, const AudioClip& clip);

// Mean of channels; mono input passes through unchanged.
AudioClip to_mono(const AudioClip& clip);

// Band-limited Kaiser-windowed-sinc resampling to target_rate. Output
// length is round(len * target / source); equal rates return the input
// unchanged.
AudioClip resample(const AudioClip& clip, int target_rate);

// Repeat/truncate to exactly target_seconds. Short clips are tiled
// end-to-end and cut; long clips keep a window starting at a random
// offset drawn from rng (use fit_duration_eval for the deterministic
// offset-0 variant used at evaluation time).
AudioClip fit_duration(const AudioClip& clip, double target_seconds, Rng& rng);
AudioClip fit_duration_eval(const AudioClip& clip, double target_seconds);

}  // namespace effn
