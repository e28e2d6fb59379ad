#include "effn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "effn/error.hpp"
#include "effn/fft.hpp"
#include "effn/mel.hpp"
#include "effn/parallel.hpp"
#include "effn/rng.hpp"

namespace fs = std::filesystem;

namespace effn {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

// RBJ cookbook biquad, direct form II transposed.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  double s1 = 0, s2 = 0;

  static Biquad bandpass(double f0, double q, double fs) {
    const double w0 = 2.0 * kPi * f0 / fs;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad b;
    b.b0 = alpha / a0;
    b.b1 = 0.0;
    b.b2 = -alpha / a0;
    b.a1 = -2.0 * std::cos(w0) / a0;
    b.a2 = (1.0 - alpha) / a0;
    return b;
  }

  static Biquad notch(double f0, double q, double fs) {
    const double w0 = 2.0 * kPi * f0 / fs;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad b;
    b.b0 = 1.0 / a0;
    b.b1 = -2.0 * std::cos(w0) / a0;
    b.b2 = 1.0 / a0;
    b.a1 = -2.0 * std::cos(w0) / a0;
    b.a2 = (1.0 - alpha) / a0;
    return b;
  }

  double step(double x) {
    const double y = b0 * x + s1;
    s1 = b1 * x - a1 * y + s2;
    s2 = b2 * x - a2 * y;
    return y;
  }
};

struct BurstStats {
  double f_lo, f_hi;
  int bursts_lo, bursts_hi;
  double am_lo, am_hi;
};

BurstStats burst_stats(bool domain2) {
  if (domain2) return {300.0, 7000.0, 1, 4, 1.0, 12.0};
  return {150.0, 6000.0, 2, 5, 0.5, 8.0};
}

void apply_notches(std::vector<double>& x, const std::vector<double>& notch_hz, double fs) {
  for (const double f0 : notch_hz) {
    const double q = std::max(f0 / 250.0, 2.0);
    // Three cascaded passes deepen the stopband past -60 dB.
    for (int pass = 0; pass < 3; ++pass) {
      Biquad nb = Biquad::notch(f0, q, fs);
      for (double& v : x) v = nb.step(v);
    }
  }
}

void quantize_envelope(std::vector<double>& x, double fs) {
  // Peak follower with ~20 ms release, then snap its level to 8 steps.
  const double release = std::exp(-1.0 / (0.020 * fs));
  std::vector<double> env(x.size());
  double e = 0.0, emax = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    e = std::max(std::abs(x[i]), e * release);
    env[i] = e;
    emax = std::max(emax, e);
  }
  if (emax <= 0.0) return;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double level = std::ceil(env[i] / emax * 8.0) / 8.0 * emax;
    x[i] *= level / (env[i] + 0.05 * emax);
  }
}

}  // namespace

std::vector<double> artifact_notch_hz(bool domain2) {
  // Positions fixed on the mel scale per domain.
  static const double mels1[8] = {500.0, 800.0, 1100.0, 1400.0, 1700.0, 2000.0, 2300.0, 2600.0};
  static const double mels2[8] = {650.0, 950.0, 1250.0, 1550.0, 1850.0, 2150.0, 2450.0, 2750.0};
  const double* mels = domain2 ? mels2 : mels1;
  std::vector<double> hz(8);
  for (int i = 0; i < 8; ++i) hz[i] = mel_to_hz(mels[i]);
  return hz;
}

AudioClip synth_clip(const SynthConfig& cfg, Label label, int index) {
  const std::uint64_t class_tag = label == Label::kBona ? 0xb0 : 0x5f;
  Rng rng = derive_rng(cfg.seed, class_tag, static_cast<std::uint64_t>(index));
  const double fs = cfg.sample_rate;
  const BurstStats bs = burst_stats(cfg.domain2);

  const double dur = rng.uniform(2.0, 12.0);
  const std::size_t n = static_cast<std::size_t>(std::llround(dur * fs));
  std::vector<double> x(n, 0.0);

  // broadband floor keeps every band fed so spectral dips stay visible
  for (double& v : x) v = 0.07 * rng.normal();

  const int nbursts = bs.bursts_lo + static_cast<int>(rng.below(bs.bursts_hi - bs.bursts_lo + 1));
  for (int b = 0; b < nbursts; ++b) {
    const double f0 = std::exp(rng.uniform(std::log(bs.f_lo), std::log(bs.f_hi)));
    const double q = rng.uniform(2.0, 10.0);
    const double gain = rng.uniform(0.2, 0.6);
    const std::size_t start = static_cast<std::size_t>(rng.below(n * 9 / 10));
    const std::size_t len =
        std::min(n - start, static_cast<std::size_t>(fs * rng.uniform(0.2, 0.5 * dur)));
    if (len < 32) continue;
    Biquad bp = Biquad::bandpass(f0, q, fs);
    const std::size_t edge = std::min<std::size_t>(static_cast<std::size_t>(0.05 * fs), len / 2);
    for (std::size_t i = 0; i < len; ++i) {
      double env = 1.0;
      if (i < edge) env = 0.5 - 0.5 * std::cos(kPi * i / edge);
      if (len - 1 - i < edge) env = std::min(env, 0.5 - 0.5 * std::cos(kPi * (len - 1 - i) / edge));
      x[start + i] += gain * env * bp.step(rng.normal());
    }
  }

  const int ntones = 1 + static_cast<int>(rng.below(2));
  for (int t = 0; t < ntones; ++t) {
    const double fc = rng.uniform(200.0, 4000.0);
    const double fm = rng.uniform(bs.am_lo, bs.am_hi);
    const double depth = rng.uniform(0.3, 0.9);
    const double gain = rng.uniform(0.08, 0.25);
    const double ph = rng.uniform(0.0, 2.0 * kPi);
    const double ph2 = rng.uniform(0.0, 2.0 * kPi);
    for (std::size_t i = 0; i < n; ++i) {
      const double tt = static_cast<double>(i) / fs;
      const double am = 1.0 - depth * (0.5 + 0.5 * std::sin(2.0 * kPi * fm * tt + ph2));
      x[i] += gain * am * std::sin(2.0 * kPi * fc * tt + ph);
    }
  }

  if (label == Label::kSpoof) {
    apply_notches(x, artifact_notch_hz(cfg.domain2), fs);
    quantize_envelope(x, fs);
  }

  double peak = 0.0;
  for (const double v : x) peak = std::max(peak, std::abs(v));
  const double target_peak = rng.uniform(0.35, 0.6);
  const double scale = peak > 0.0 ? target_peak / peak : 0.0;

  AudioClip clip;
  clip.sample_rate = cfg.sample_rate;
  clip.channels = 1;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) clip.samples[i] = static_cast<float>(x[i] * scale);
  return clip;
}

Manifest gen_synthetic_corpus(const SynthConfig& cfg, const std::string& out_dir, int threads) {
  if (cfg.n_bona < 1 || cfg.n_spoof < 1)
    throw ParameterError("gen_synthetic_corpus: counts must be >= 1");
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "wav", ec);
  if (ec) throw IoError("gen_synthetic_corpus: cannot create " + out_dir + ": " + ec.message());

  Manifest m;
  m.dir = out_dir;
  m.comments.push_back("# seed=" + std::to_string(cfg.seed));
  m.comments.push_back(std::string("# shift=") + (cfg.domain2 ? "domain2" : "none"));

  struct Job {
    Label label;
    int index;
    std::string id;
  };
  std::vector<Job> jobs;
  char buf[64];
  for (int i = 0; i < cfg.n_bona; ++i) {
    std::snprintf(buf, sizeof(buf), "b%05d", i);
    jobs.push_back({Label::kBona, i, buf});
  }
  for (int i = 0; i < cfg.n_spoof; ++i) {
    std::snprintf(buf, sizeof(buf), "s%05d", i);
    jobs.push_back({Label::kSpoof, i, buf});
  }

  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const AudioClip clip = synth_clip(cfg, jobs[j].label, jobs[j].index);
    write_wav((fs::path(out_dir) / "wav" / (jobs[j].id + ".wav")).string(), clip);
  });

  for (const auto& j : jobs) {
    ManifestEntry e;
    e.trial_id = j.id;
    e.path = "wav/" + j.id + ".wav";
    e.label = j.label;
    e.split = Split::kTrain;
    m.entries.push_back(std::move(e));
  }
  write_manifest((fs::path(out_dir) / "manifest.tsv").string(), m);
  return m;
}

double notch_band_ratio(const AudioClip& clip, const std::vector<double>& notch_hz) {
  const double fs = clip.sample_rate;
  const std::size_t n_fft = 512;
  const double hz_per_bin = fs / static_cast<double>(n_fft);

  // Welch-style average power spectrum with Hann frames, hop n_fft/2.
  std::vector<double> avg(n_fft / 2 + 1, 0.0);
  std::vector<double> frame(n_fft);
  std::size_t frames = 0;
  for (std::size_t off = 0; off + n_fft <= clip.samples.size(); off += n_fft / 2) {
    for (std::size_t i = 0; i < n_fft; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (n_fft - 1));
      frame[i] = static_cast<double>(clip.samples[off + i]) * w;
    }
    const std::vector<double> p = power_spectrum(frame, n_fft);
    for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += p[k];
    ++frames;
  }
  if (frames == 0) throw ParameterError("notch_band_ratio: clip too short");

  // Median of the per-notch ratios: robust against a burst or tone that
  // happens to sit in one band's flank.
  std::vector<double> ratios;
  for (const double f0 : notch_hz) {
    double notch_sum = 0.0, flank_sum = 0.0;
    for (std::size_t k = 0; k < avg.size(); ++k) {
      const double f = k * hz_per_bin;
      const double d = std::abs(f - f0);
      if (d <= 60.0)
        notch_sum += avg[k];
      else if (d > 100.0 && d <= 220.0)
        flank_sum += avg[k];
    }
    ratios.push_back(notch_sum / std::max(flank_sum, 1e-30));
  }
  std::sort(ratios.begin(), ratios.end());
  return ratios[ratios.size() / 2];
}

}  // namespace effn
