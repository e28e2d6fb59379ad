#include "effn/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "effn/error.hpp"

namespace effn {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

double bessel_i0(double x) {
  // Series expansion; converges quickly for the beta range used here.
  double sum = 1.0, term = 1.0;
  const double h = x * 0.5;
  for (int k = 1; k < 64; ++k) {
    term *= (h / k) * (h / k);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

// Prototype lowpass kernel sampled on a fine phase grid, shared per
// (source, target) pair within one resample call.
struct SincTable {
  double half_width;   // kernel half width in source samples
  double cutoff;       // normalized cutoff (cycles per source sample)
  int phases;          // table resolution per source sample
  std::vector<double> h;

  double eval(double t) const {
    const double a = std::abs(t);
    if (a >= half_width) return 0.0;
    const double idx = a * phases;
    const std::size_t i = static_cast<std::size_t>(idx);
    const double frac = idx - static_cast<double>(i);
    if (i + 1 >= h.size()) return h.back() * (1.0 - frac);
    return h[i] * (1.0 - frac) + h[i + 1] * frac;
  }
};

SincTable build_table(double ratio) {
  // Cutoff at 0.95 * Nyquist of the lower rate; the kernel widens by the
  // decimation factor when downsampling.
  const double scale = std::min(1.0, ratio);
  SincTable t;
  t.cutoff = 0.475 * scale;
  t.half_width = 32.0 / scale;
  t.phases = 512;
  const double beta = 8.6;
  const double i0b = bessel_i0(beta);
  const std::size_t n = static_cast<std::size_t>(t.half_width * t.phases) + 2;
  t.h.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / t.phases;  // source samples from center
    const double u = x / t.half_width;
    if (u >= 1.0) {
      t.h[i] = 0.0;
      continue;
    }
    const double win = bessel_i0(beta * std::sqrt(1.0 - u * u)) / i0b;
    const double arg = 2.0 * t.cutoff * x;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(kPi * arg) / (kPi * arg);
    t.h[i] = 2.0 * t.cutoff * sinc * win;
  }
  return t;
}

}  // namespace

AudioClip to_mono(const AudioClip& clip) {
  if (clip.channels == 1) return clip;
  if (clip.channels != 2) throw FormatError("to_mono: more than 2 channels");
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.channels = 1;
  const std::size_t n = clip.samples.size() / 2;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] = 0.5f * (clip.samples[2 * i] + clip.samples[2 * i + 1]);
  return out;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (clip.sample_rate <= 0 || target_rate <= 0)
    throw ParameterError("resample: rates must be positive");
  if (clip.channels != 1) throw ParameterError("resample: expects mono input");
  if (clip.sample_rate == target_rate) return clip;

  const std::uint64_t src = static_cast<std::uint64_t>(clip.sample_rate);
  const std::uint64_t dst = static_cast<std::uint64_t>(target_rate);
  const std::uint64_t in_len = clip.samples.size();
  const std::uint64_t out_len = (in_len * dst + src / 2) / src;

  const double ratio = static_cast<double>(dst) / static_cast<double>(src);
  const SincTable table = build_table(ratio);

  AudioClip out;
  out.sample_rate = target_rate;
  out.channels = 1;
  out.samples.resize(out_len);
  const double step = static_cast<double>(src) / static_cast<double>(dst);
  for (std::uint64_t n = 0; n < out_len; ++n) {
    const double tc = static_cast<double>(n) * step;
    const std::int64_t k0 = static_cast<std::int64_t>(std::ceil(tc - table.half_width));
    const std::int64_t k1 = static_cast<std::int64_t>(std::floor(tc + table.half_width));
    double acc = 0.0, wsum = 0.0;
    for (std::int64_t k = k0; k <= k1; ++k) {
      const double w = table.eval(static_cast<double>(k) - tc);
      wsum += w;
      if (k >= 0 && k < static_cast<std::int64_t>(in_len))
        acc += w * static_cast<double>(clip.samples[static_cast<std::size_t>(k)]);
    }
    // Normalizing by the tap sum keeps DC gain exactly 1 at every phase.
    out.samples[n] = static_cast<float>(wsum != 0.0 ? acc / wsum : 0.0);
  }
  return out;
}

namespace {

AudioClip fit_with_offset(const AudioClip& clip, double target_seconds, std::uint64_t offset) {
  const std::size_t target = static_cast<std::size_t>(
      std::llround(target_seconds * static_cast<double>(clip.sample_rate)));
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.channels = 1;
  out.samples.resize(target);
  const std::size_t n = clip.samples.size();
  if (n < target) {
    for (std::size_t i = 0; i < target; ++i) out.samples[i] = clip.samples[i % n];
  } else {
    for (std::size_t i = 0; i < target; ++i) out.samples[i] = clip.samples[offset + i];
  }
  return out;
}

void check_fit_pre(const AudioClip& clip) {
  if (clip.samples.empty()) throw FormatError("fit_duration: empty clip");
  if (clip.channels != 1) throw ParameterError("fit_duration: expects mono input");
}

}  // namespace

AudioClip fit_duration(const AudioClip& clip, double target_seconds, Rng& rng) {
  check_fit_pre(clip);
  const std::size_t target = static_cast<std::size_t>(
      std::llround(target_seconds * static_cast<double>(clip.sample_rate)));
  if (clip.samples.size() == target) return clip;
  std::uint64_t offset = 0;
  if (clip.samples.size() > target)
    offset = rng.below(static_cast<std::uint64_t>(clip.samples.size() - target) + 1);
  return fit_with_offset(clip, target_seconds, offset);
}

AudioClip fit_duration_eval(const AudioClip& clip, double target_seconds) {
  check_fit_pre(clip);
  const std::size_t target = static_cast<std::size_t>(
      std::llround(target_seconds * static_cast<double>(clip.sample_rate)));
  if (clip.samples.size() == target) return clip;
  return fit_with_offset(clip, target_seconds, 0);
}

}  // namespace effn
