#include "effn/mel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "effn/error.hpp"
#include "effn/fft.hpp"

namespace effn {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
constexpr int kNumBins = kFftSize / 2 + 1;
constexpr int kSubSamples = 16;  // sub-bin grid for triangle averaging
}  // namespace

double hz_to_mel(double hz) {
  if (hz < 0.0) throw ParameterError("hz_to_mel: negative frequency");
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelBank::MelBank() {
  const double mel_lo = hz_to_mel(kFminHz);
  const double mel_hi = hz_to_mel(kFmaxHz);
  const double step = (mel_hi - mel_lo) / (kMelBins + 1);
  const double hz_per_bin = 16000.0 / kFftSize;

  center_hz_.resize(kMelBins);
  first_bin_.resize(kMelBins);
  weights_.resize(kMelBins);
  for (int m = 0; m < kMelBins; ++m) {
    const double center = mel_lo + step * (m + 1);
    const double left = center - step;
    const double right = center + step;
    center_hz_[m] = mel_to_hz(center);

    int first = -1;
    std::vector<double> w;
    for (int k = 0; k < kNumBins; ++k) {
      double acc = 0.0;
      for (int j = 0; j < kSubSamples; ++j) {
        const double f = (k - 0.5 + (j + 0.5) / kSubSamples) * hz_per_bin;
        if (f < 0.0) continue;
        const double mel = hz_to_mel(f);
        double tri = 0.0;
        if (mel > left && mel < right)
          tri = mel <= center ? (mel - left) / step : (right - mel) / step;
        acc += tri;
      }
      const double v = acc / kSubSamples;
      if (v > 0.0) {
        if (first < 0) first = k;
        w.resize(static_cast<std::size_t>(k - first) + 1, 0.0);
        w.back() = v;
      }
    }
    if (first < 0) throw NumericError("mel bank: empty filter " + std::to_string(m));
    first_bin_[m] = first;
    weights_[m] = std::move(w);
  }
}

void MelBank::apply(const std::vector<double>& power, std::vector<double>& mel_out) const {
  mel_out.assign(kMelBins, 0.0);
  for (int m = 0; m < kMelBins; ++m) {
    const auto& w = weights_[m];
    const int f0 = first_bin_[m];
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * power[f0 + i];
    mel_out[m] = acc;
  }
}

const MelBank& shared_mel_bank() {
  static const MelBank bank;
  return bank;
}

MelSpec logmel(const AudioClip& clip) {
  if (clip.channels != 1) throw ParameterError("logmel: expects mono input");
  if (clip.sample_rate != 16000) throw ParameterError("logmel: expects 16 kHz input");
  const std::size_t n = clip.samples.size();
  if (n < static_cast<std::size_t>(kWinSamples))
    throw ParameterError("logmel: clip shorter than one 400-sample window");
  const std::size_t t = 1 + (n - kWinSamples) / kHopSamples;

  static const std::vector<double> hann = [] {
    std::vector<double> w(kWinSamples);
    for (int i = 0; i < kWinSamples; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (kWinSamples - 1));
    return w;
  }();

  const MelBank& bank = shared_mel_bank();
  MelSpec spec;
  spec.frames = TensorF(std::vector<std::size_t>{t, static_cast<std::size_t>(kMelBins)});
  std::vector<double> frame(kWinSamples);
  std::vector<double> mel;
  for (std::size_t fi = 0; fi < t; ++fi) {
    const std::size_t off = fi * kHopSamples;
    for (int i = 0; i < kWinSamples; ++i)
      frame[i] = static_cast<double>(clip.samples[off + i]) * hann[i];
    const std::vector<double> power = power_spectrum(frame, kFftSize);
    bank.apply(power, mel);
    float* row = spec.frames.data() + fi * kMelBins;
    for (int m = 0; m < kMelBins; ++m)
      row[m] = static_cast<float>(std::log(std::max(mel[m], kLogFloor)));
  }
  return spec;
}

void StatsAccumulator::add_pass1(const MelSpec& spec) {
  if (spec.normalized) throw StateError("stats: expects unnormalized features");
  for (const float v : spec.frames) sum_ += static_cast<double>(v);
  count_ += spec.frames.size();
}

void StatsAccumulator::finish_pass1() {
  if (count_ == 0) throw ParameterError("stats: empty corpus");
  mean_ = sum_ / static_cast<double>(count_);
  pass1_done_ = true;
}

void StatsAccumulator::add_pass2(const MelSpec& spec) {
  if (!pass1_done_) throw StateError("stats: pass 1 not finished");
  for (const float v : spec.frames) {
    const double d = static_cast<double>(v) - mean_;
    sq_sum_ += d * d;
  }
}

NormStats StatsAccumulator::finish(const std::string& source) {
  if (!pass1_done_) throw StateError("stats: pass 1 not finished");
  NormStats s;
  s.mean = mean_;
  s.std_dev = std::max(std::sqrt(sq_sum_ / static_cast<double>(count_)), 1e-5);
  s.source = source;
  s.count = count_;
  return s;
}

NormStats compute_global_stats(const std::vector<MelSpec>& specs, const std::string& source) {
  if (specs.empty()) throw ParameterError("compute_global_stats: empty manifest");
  StatsAccumulator acc;
  for (const auto& s : specs) acc.add_pass1(s);
  acc.finish_pass1();
  for (const auto& s : specs) acc.add_pass2(s);
  return acc.finish(source);
}

void write_stats(const std::string& path, const NormStats& stats) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("write_stats: cannot open " + path);
  char buf[512];
  std::snprintf(buf, sizeof(buf), "mean=%.17g\nstd=%.17g\nsource=%s\ncount=%llu\n", stats.mean,
                stats.std_dev, stats.source.c_str(),
                static_cast<unsigned long long>(stats.count));
  f << buf;
  if (!f) throw IoError("write_stats: short write to " + path);
}

NormStats read_stats(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_stats: cannot open " + path);
  NormStats s;
  bool have_mean = false, have_std = false;
  std::string line;
  while (std::getline(f, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "mean") {
      s.mean = std::stod(val);
      have_mean = true;
    } else if (key == "std") {
      s.std_dev = std::stod(val);
      have_std = true;
    } else if (key == "source") {
      s.source = val;
    } else if (key == "count") {
      s.count = std::stoull(val);
    } else {
      throw FormatError("read_stats: unknown key '" + key + "' in " + path);
    }
  }
  if (!have_mean || !have_std) throw FormatError("read_stats: missing mean/std in " + path);
  if (s.std_dev <= 0.0) throw FormatError("read_stats: std must be positive");
  return s;
}

MelSpec normalize(const MelSpec& spec, const NormStats& stats) {
  if (spec.normalized) throw StateError("normalize: features already normalized");
  if (stats.std_dev <= 0.0) throw ParameterError("normalize: std must be positive");
  MelSpec out;
  out.normalized = true;
  out.frames = spec.frames;
  const float mean = static_cast<float>(stats.mean);
  const float inv = static_cast<float>(1.0 / stats.std_dev);
  for (float& v : out.frames) v = (v - mean) * inv;
  return out;
}

MelSpec fit_frames(const MelSpec& spec, int target_t) {
  if (!spec.normalized) throw StateError("fit_frames: expects normalized features");
  const std::size_t t = spec.frames.rows();
  const std::size_t target = static_cast<std::size_t>(target_t);
  if (t == target) return spec;
  MelSpec out;
  out.normalized = true;
  out.frames = TensorF(std::vector<std::size_t>{target, static_cast<std::size_t>(kMelBins)});
  const std::size_t copy_rows = std::min(t, target);
  std::copy(spec.frames.data(), spec.frames.data() + copy_rows * kMelBins, out.frames.data());
  return out;
}

}  // namespace effn
