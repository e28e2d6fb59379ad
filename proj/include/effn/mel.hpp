#pragma once

#include <string>
#include <vector>

#include "effn/audio.hpp"
#include "effn/tensor.hpp"

namespace effn {

// Log-Mel front-end: 25 ms Hanning frames at a 10 ms shift, 512-point
// FFT, 128 triangular filters on the HTK mel scale spanning 20 Hz-8 kHz,
// natural log with a 1e-10 floor. Feature matrices are frames x 128.

constexpr int kMelBins = 128;
constexpr int kWinSamples = 400;   // 25 ms at 16 kHz
constexpr int kHopSamples = 160;   // 10 ms at 16 kHz
constexpr int kFftSize = 512;
constexpr double kFminHz = 20.0;
constexpr double kFmaxHz = 8000.0;
constexpr double kLogFloor = 1e-10;
constexpr int kTargetFrames = 1024;

// HTK mel scale: mel(f) = 2595 * log10(1 + f / 700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelSpec {
  TensorF frames;  // T x 128
  bool normalized = false;
};

struct NormStats {
  double mean = 0.0;
  double std_dev = 1.0;
  std::string source;
  std::uint64_t count = 0;  // number of aggregated cells
};

// Triangular filters evaluated by averaging each triangle over a sub-bin
// grid, so every filter keeps positive weight even where the mel spacing
// drops below one FFT bin.
class MelBank {
 public:
  MelBank();

  // mel energies (pre-log) for one power spectrum of kFftSize/2+1 bins
  void apply(const std::vector<double>& power, std::vector<double>& mel_out) const;

  int num_filters() const { return kMelBins; }
  double center_hz(int filter) const { return center_hz_[filter]; }
  const std::vector<double>& weights(int filter) const { return weights_[filter]; }
  int first_bin(int filter) const { return first_bin_[filter]; }

 private:
  std::vector<double> center_hz_;
  std::vector<int> first_bin_;
  std::vector<std::vector<double>> weights_;
};

const MelBank& shared_mel_bank();

// Unnormalized log-mel of a 16 kHz mono clip. T = 1 + floor((N - 400) / 160).
MelSpec logmel(const AudioClip& clip);

// Scalar corpus statistics over all cells of the given unnormalized
// feature matrices, population convention, std clamped at 1e-5.
class StatsAccumulator {
 public:
  void add_pass1(const MelSpec& spec);
  void finish_pass1();
  void add_pass2(const MelSpec& spec);
  NormStats finish(const std::string& source);

  double mean() const { return mean_; }

 private:
  double sum_ = 0.0, sq_sum_ = 0.0, mean_ = 0.0;
  std::uint64_t count_ = 0;
  bool pass1_done_ = false;
};

NormStats compute_global_stats(const std::vector<MelSpec>& specs, const std::string& source);

void write_stats(const std::string& path, const NormStats& stats);
NormStats read_stats(const std::string& path);

// (cell - mean) / std. Refuses to normalize twice.
MelSpec normalize(const MelSpec& spec, const NormStats& stats);

// Pad with zero frames or truncate to exactly target_t frames.
MelSpec fit_frames(const MelSpec& spec, int target_t = kTargetFrames);

}  // namespace effn
