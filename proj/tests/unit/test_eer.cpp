#include <cmath>

#include "doctest.h"
#include "effn/eer.hpp"
#include "effn/error.hpp"
#include "effn/rng.hpp"

using namespace effn;

namespace {

std::vector<TrialScore> make_scores(const std::vector<double>& bona,
                                    const std::vector<double>& spoof) {
  std::vector<TrialScore> s;
  int id = 0;
  for (const double v : bona) s.push_back({"b" + std::to_string(id++), v, Label::kBona});
  for (const double v : spoof) s.push_back({"s" + std::to_string(id++), v, Label::kSpoof});
  return s;
}

std::vector<TrialScore> random_scores(Rng& rng) {
  const int n = 2 + static_cast<int>(rng.below(49));
  std::vector<TrialScore> s;
  int nb = 0, ns = 0;
  for (int i = 0; i < n; ++i) {
    const Label label = rng.next_double() < 0.4 ? Label::kBona : Label::kSpoof;
    double score = rng.uniform(-2.0, 2.0) + (label == Label::kBona ? rng.uniform(0.0, 1.5) : 0.0);
    if (rng.next_double() < 0.5) score = std::round(score * 4.0) / 4.0;  // force ties
    s.push_back({"t" + std::to_string(i), score, label});
    (label == Label::kBona ? nb : ns) += 1;
  }
  if (nb == 0) s.push_back({"pad_b", rng.uniform(-2.0, 2.0), Label::kBona});
  if (ns == 0) s.push_back({"pad_s", rng.uniform(-2.0, 2.0), Label::kSpoof});
  return s;
}

}  // namespace

TEST_CASE("worked EER examples") {
  // perfect separation
  auto r = compute_eer(make_scores({0.9, 0.8}, {0.2, 0.1}));
  CHECK(r.eer == 0.0);
  CHECK(r.n_bona == 2);
  CHECK(r.n_spoof == 2);

  // one error on each side at the crossing
  r = compute_eer(make_scores({0.9, 0.8, 0.3}, {0.7, 0.2, 0.1}));
  CHECK(r.eer == doctest::Approx(1.0 / 3).epsilon(1e-12));

  // all scores identical: sentinel sweep gives (1,0) and (0,1)
  r = compute_eer(make_scores({0.5, 0.5}, {0.5, 0.5, 0.5}));
  CHECK(r.eer == doctest::Approx(0.5).epsilon(1e-12));

  // labels flipped on a perfectly separated set
  r = compute_eer(make_scores({0.2, 0.1}, {0.9, 0.8}));
  CHECK(r.eer == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(compute_eer(make_scores({0.5}, {})), ParameterError);
  CHECK_THROWS_AS(compute_eer(make_scores({}, {0.5})), ParameterError);
}

TEST_CASE("oracle matches the worked examples") {
  CHECK(eer_oracle(make_scores({0.9, 0.8}, {0.2, 0.1})).eer == 0.0);
  CHECK(eer_oracle(make_scores({0.9, 0.8, 0.3}, {0.7, 0.2, 0.1})).eer ==
        doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(eer_oracle(make_scores({0.5}, {0.5})).eer == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(eer_oracle(make_scores({0.2, 0.1}, {0.9, 0.8})).eer ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("compute_eer agrees with the oracle on random tied sets") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto scores = random_scores(rng);
    const double a = compute_eer(scores).eer;
    const double b = eer_oracle(scores).eer;
    INFO("trial ", trial);
    CHECK(std::abs(a - b) < 1e-9);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("EER is a rank statistic") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    auto scores = random_scores(rng);
    const double base = compute_eer(scores).eer;

    // strictly increasing transform
    auto mapped = scores;
    for (auto& s : mapped) s.score = std::exp(0.7 * s.score) + 3.0;
    CHECK(compute_eer(mapped).eer == doctest::Approx(base).epsilon(1e-12));

    // duplicating every trial changes nothing
    auto doubled = scores;
    for (auto s : scores) {
      s.trial_id += "_dup";
      doubled.push_back(s);
    }
    CHECK(compute_eer(doubled).eer == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("EER is zero iff strictly separated") {
  Rng rng(66);
  for (int trial = 0; trial < 200; ++trial) {
    const auto scores = random_scores(rng);
    double min_bona = 1e300, max_spoof = -1e300;
    for (const auto& s : scores) {
      if (s.label == Label::kBona)
        min_bona = std::min(min_bona, s.score);
      else
        max_spoof = std::max(max_spoof, s.score);
    }
    const bool separated = min_bona > max_spoof;
    const double eer = compute_eer(scores).eer;
    CHECK((eer == 0.0) == separated);
  }
}
