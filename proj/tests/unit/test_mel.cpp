#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "effn/error.hpp"
#include "effn/mel.hpp"

using namespace effn;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

AudioClip tone16k(double freq, double seconds, double amp = 0.5) {
  AudioClip c;
  c.sample_rate = 16000;
  c.channels = 1;
  const std::size_t n = static_cast<std::size_t>(seconds * 16000);
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    c.samples[i] = static_cast<float>(amp * std::sin(2.0 * kPi * freq * i / 16000.0));
  return c;
}

}  // namespace

TEST_CASE("hz_to_mel analytic points and round trip") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-12));
  const double f = 1234.5;
  CHECK(mel_to_hz(hz_to_mel(f)) == doctest::Approx(f).epsilon(1e-6));
  CHECK_THROWS_AS(hz_to_mel(-1.0), ParameterError);
}

TEST_CASE("mel bank geometry") {
  const MelBank& bank = shared_mel_bank();
  REQUIRE(bank.num_filters() == 128);

  double prev_center = 0.0;
  for (int m = 0; m < bank.num_filters(); ++m) {
    CHECK(bank.center_hz(m) > prev_center);
    prev_center = bank.center_hz(m);

    const auto& w = bank.weights(m);
    double sum = 0.0;
    for (const double v : w) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    CHECK(sum > 0.0);

    // single peak: non-decreasing then non-increasing
    std::size_t peak = 0;
    for (std::size_t i = 1; i < w.size(); ++i)
      if (w[i] > w[peak]) peak = i;
    for (std::size_t i = 1; i <= peak; ++i) CHECK(w[i] >= w[i - 1] - 1e-12);
    for (std::size_t i = peak + 1; i < w.size(); ++i) CHECK(w[i] <= w[i - 1] + 1e-12);
  }

  // no dead FFT bins between 20 Hz and 8 kHz
  std::vector<double> coverage(kFftSize / 2 + 1, 0.0);
  for (int m = 0; m < bank.num_filters(); ++m) {
    const auto& w = bank.weights(m);
    for (std::size_t i = 0; i < w.size(); ++i) coverage[bank.first_bin(m) + i] += w[i];
  }
  for (std::size_t k = 0; k < coverage.size(); ++k) {
    const double f = k * 16000.0 / kFftSize;
    if (f > 20.0 + 16000.0 / kFftSize && f <= 8000.0) CHECK(coverage[k] > 0.0);
  }
}

TEST_CASE("logmel framing arithmetic and floor") {
  AudioClip ten_s;
  ten_s.sample_rate = 16000;
  ten_s.channels = 1;
  ten_s.samples.assign(160000, 0.0f);
  const MelSpec spec = logmel(ten_s);
  CHECK(spec.frames.rows() == 998);
  CHECK(spec.frames.cols() == 128);
  for (const float v : spec.frames) CHECK(v == doctest::Approx(std::log(1e-10)));

  AudioClip tiny;
  tiny.sample_rate = 16000;
  tiny.channels = 1;
  tiny.samples.assign(399, 0.1f);
  CHECK_THROWS_AS(logmel(tiny), ParameterError);
}

TEST_CASE("logmel is deterministic") {
  const AudioClip c = tone16k(440, 2.0);
  const MelSpec a = logmel(c);
  const MelSpec b = logmel(c);
  CHECK(a.frames.values() == b.frames.values());
}

TEST_CASE("pure tone peaks at the filter nearest 1 kHz") {
  const MelBank& bank = shared_mel_bank();
  const AudioClip c = tone16k(1000, 2.0);
  const MelSpec spec = logmel(c);

  int nearest = 0;
  for (int m = 1; m < bank.num_filters(); ++m)
    if (std::abs(bank.center_hz(m) - 1000.0) < std::abs(bank.center_hz(nearest) - 1000.0))
      nearest = m;

  int first_argmax = -1;
  for (std::size_t t = 0; t < spec.frames.rows(); ++t) {
    int argmax = 0;
    for (int m = 1; m < 128; ++m)
      if (spec.frames.at(t, m) > spec.frames.at(t, argmax)) argmax = m;
    if (first_argmax < 0) first_argmax = argmax;
    CHECK(argmax == first_argmax);  // constant over frames
  }
  CHECK(std::abs(first_argmax - nearest) <= 1);
}

TEST_CASE("scaling the waveform by 2 scales every pre-log mel energy by 4") {
  const AudioClip c1 = tone16k(700, 1.0, 0.25);
  AudioClip c2 = c1;
  for (float& v : c2.samples) v *= 2.0f;
  const MelSpec m1 = logmel(c1);
  const MelSpec m2 = logmel(c2);
  const float ln4 = static_cast<float>(std::log(4.0));
  for (std::size_t i = 0; i < m1.frames.size(); ++i) {
    if (m1.frames[i] <= std::log(1e-10) + 1e-6) continue;  // floored cells
    CHECK(m2.frames[i] - m1.frames[i] == doctest::Approx(ln4).epsilon(1e-4));
  }
}

TEST_CASE("global stats toy corpus and determinism") {
  MelSpec toy;
  toy.frames = TensorF::from({1, 128}, [] {
    std::vector<float> v(128, 0.0f);
    for (int i = 0; i < 64; ++i) v[i] = 0.0f;
    for (int i = 64; i < 128; ++i) v[i] = 2.0f;
    return v;
  }());
  const NormStats s = compute_global_stats({toy}, "toy");
  CHECK(s.mean == doctest::Approx(1.0));
  CHECK(s.std_dev == doctest::Approx(1.0));

  // degenerate corpus: all-zero clip floors at ln(1e-10), std clamps
  AudioClip zero;
  zero.sample_rate = 16000;
  zero.channels = 1;
  zero.samples.assign(160000, 0.0f);
  const MelSpec zm = logmel(zero);
  const NormStats zs = compute_global_stats({zm}, "zero");
  CHECK(zs.mean == doctest::Approx(std::log(1e-10)));
  CHECK(zs.std_dev == 1e-5);

  const NormStats again = compute_global_stats({zm}, "zero");
  CHECK(zs.mean == again.mean);
  CHECK(zs.std_dev == again.std_dev);

  CHECK_THROWS_AS(compute_global_stats({}, "empty"), ParameterError);
}

TEST_CASE("stats file render and parse") {
  NormStats s;
  s.mean = -11.512925464970229;
  s.std_dev = 2.7182818284590452;
  s.source = "train";
  s.count = 12771840;
  const std::string path = (fs::temp_directory_path() / "effn_stats.txt").string();
  write_stats(path, s);
  const NormStats r = read_stats(path);
  CHECK(r.mean == s.mean);
  CHECK(r.std_dev == s.std_dev);
  CHECK(r.source == s.source);
  CHECK(r.count == s.count);
}

TEST_CASE("normalize identity, centering and round trip") {
  const AudioClip c = tone16k(500, 1.0);
  const MelSpec spec = logmel(c);

  NormStats unit;
  unit.mean = 0.0;
  unit.std_dev = 1.0;
  const MelSpec same = normalize(spec, unit);
  CHECK(same.frames.values() == spec.frames.values());
  CHECK(same.normalized);
  CHECK_THROWS_AS(normalize(same, unit), StateError);

  MelSpec constant;
  constant.frames = TensorF::raw({2, 128}, std::vector<float>(256, 3.25f));
  NormStats st;
  st.mean = 3.25;
  st.std_dev = 2.0;
  for (const float v : normalize(constant, st).frames) CHECK(v == 0.0f);

  NormStats real_stats;
  real_stats.mean = -4.0;
  real_stats.std_dev = 3.5;
  const MelSpec n = normalize(spec, real_stats);
  for (std::size_t i = 0; i < spec.frames.size(); ++i) {
    const double back = static_cast<double>(n.frames[i]) * real_stats.std_dev + real_stats.mean;
    CHECK(back == doctest::Approx(static_cast<double>(spec.frames[i])).epsilon(1e-6));
  }
}

TEST_CASE("fit_frames pads with zeros or truncates") {
  MelSpec spec;
  spec.normalized = true;
  spec.frames = TensorF(std::vector<std::size_t>{998, 128});
  for (std::size_t i = 0; i < spec.frames.size(); ++i)
    spec.frames[i] = static_cast<float>(i % 97) * 0.01f;

  const MelSpec padded = fit_frames(spec);
  CHECK(padded.frames.rows() == 1024);
  for (std::size_t t = 0; t < 998; ++t)
    CHECK(padded.frames.at(t, 5) == spec.frames.at(t, 5));
  for (std::size_t t = 998; t < 1024; ++t)
    for (int m = 0; m < 128; ++m) CHECK(padded.frames.at(t, m) == 0.0f);

  MelSpec exact;
  exact.normalized = true;
  exact.frames = TensorF(std::vector<std::size_t>{1024, 128});
  const MelSpec same = fit_frames(exact);
  CHECK(same.frames.rows() == 1024);

  MelSpec longer;
  longer.normalized = true;
  longer.frames = TensorF(std::vector<std::size_t>{2000, 128});
  longer.frames.at(0, 0) = 7.5f;
  const MelSpec cut = fit_frames(longer);
  CHECK(cut.frames.rows() == 1024);
  CHECK(cut.frames.at(0, 0) == 7.5f);

  MelSpec raw;
  raw.normalized = false;
  raw.frames = TensorF(std::vector<std::size_t>{10, 128});
  CHECK_THROWS_AS(fit_frames(raw), StateError);
}
