#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "effn/checkpoint.hpp"
#include "effn/gradcheck.hpp"
#include "effn/loss.hpp"
#include "effn/model.hpp"

using namespace effn;
namespace fs = std::filesystem;

namespace {

LayerStack<double> random_stack(int layers, std::size_t frames, std::size_t dim, Rng& rng) {
  LayerStack<double> s;
  for (int l = 0; l < layers; ++l) {
    Tensor<double> t(std::vector<std::size_t>{frames, dim});
    for (double& v : t) v = rng.uniform(-0.9, 0.9);
    s.layers.push_back(std::move(t));
  }
  return s;
}

// Weighted-CE loss of a tiny labeled batch, used as the gradcheck target.
struct TinyBatch {
  std::vector<LayerStack<double>> stacks;
  std::vector<Label> labels;
  ClassWeights weights{2.0, 1.0};

  double loss(const ModelParams<double>& params) const {
    std::vector<std::array<double, 2>> logits;
    for (const auto& s : stacks)
      logits.push_back(forward(s, params, 0.0, nullptr, false).logits);
    return weighted_ce(logits, labels, weights).loss;
  }

  ModelParams<double> grads(const ModelParams<double>& params) const {
    std::vector<ForwardTrace<double>> traces;
    std::vector<std::array<double, 2>> logits;
    for (const auto& s : stacks) {
      traces.push_back(forward(s, params, 0.0, nullptr, false));
      logits.push_back(traces.back().logits);
    }
    const auto lr = weighted_ce(logits, labels, weights);
    ModelParams<double> g = zeros_like(params);
    for (std::size_t i = 0; i < stacks.size(); ++i)
      backward(select_layers(stacks[i], params.layer_set), params, traces[i], lr.dlogits[i], 0.0,
               g);
    return g;
  }
};

}  // namespace

TEST_CASE("fuse limit cases") {
  Rng rng(21);
  LayerStack<double> stack = random_stack(12, 6, 4, rng);

  ModelParams<double> p;
  p.layer_set = {4, 5, 6, 7, 8, 9};

  // uniform logits -> exact average of the six layers
  Tensor<double> zero_logits(std::vector<std::size_t>{6});
  const Tensor<double> avg = fuse(stack, p.layer_set, zero_logits);
  for (std::size_t i = 0; i < avg.size(); ++i) {
    double want = 0.0;
    for (int id = 4; id <= 9; ++id) want += stack.layer(id)[i] / 6.0;
    CHECK(avg[i] == doctest::Approx(want).epsilon(1e-12));
  }

  // one dominant logit -> that layer, within 1e-9 relative on the max norm
  Tensor<double> dominant = Tensor<double>::from({6}, {30, 0, 0, 0, 0, 0});
  const Tensor<double> almost4 = fuse(stack, p.layer_set, dominant);
  double max_diff = 0.0, max_abs = 0.0;
  for (std::size_t i = 0; i < almost4.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(almost4[i] - stack.layer(4)[i]));
    max_abs = std::max(max_abs, std::abs(stack.layer(4)[i]));
  }
  CHECK(max_diff / max_abs < 1e-9);

  // identical layers -> convex combination fixed point
  LayerStack<double> same;
  for (int l = 0; l < 12; ++l) same.layers.push_back(stack.layers[0]);
  Tensor<double> any = Tensor<double>::from({6}, {0.3, -1, 2, 0.5, -0.2, 1.1});
  const Tensor<double> fixed = fuse(same, p.layer_set, any);
  for (std::size_t i = 0; i < fixed.size(); ++i)
    CHECK(fixed[i] == doctest::Approx(stack.layers[0][i]).epsilon(1e-12));

  CHECK_THROWS_AS(fuse(stack, {4, 5, 13}, Tensor<double>(std::vector<std::size_t>{3})),
                  ParameterError);
}

TEST_CASE("fuse is linear in the stack") {
  Rng rng(22);
  LayerStack<double> x = random_stack(12, 5, 3, rng);
  LayerStack<double> y = random_stack(12, 5, 3, rng);
  const double a = 1.7, b = -0.4;
  LayerStack<double> mix;
  for (int l = 0; l < 12; ++l) {
    Tensor<double> t(x.layers[l].shape());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = a * x.layers[l][i] + b * y.layers[l][i];
    mix.layers.push_back(std::move(t));
  }
  Tensor<double> logits = Tensor<double>::from({6}, {0.1, 0.2, -0.3, 0, 0.5, -0.1});
  const std::vector<int> set = {4, 5, 6, 7, 8, 9};
  const auto fx = fuse(x, set, logits);
  const auto fy = fuse(y, set, logits);
  const auto fm = fuse(mix, set, logits);
  for (std::size_t i = 0; i < fm.size(); ++i)
    CHECK(fm[i] == doctest::Approx(a * fx[i] + b * fy[i]).epsilon(1e-9));
}

TEST_CASE("restricted fusion equals full fusion with pinned logits") {
  Rng rng(23);
  LayerStack<double> stack = random_stack(12, 8, 4, rng);
  Tensor<double> logits = Tensor<double>::from({6}, {0.4, -0.2, 0.9, 0.1, -0.5, 0.3});

  std::vector<int> full_set(12);
  for (int i = 0; i < 12; ++i) full_set[i] = i + 1;
  Tensor<double> full_logits(std::vector<std::size_t>{12});
  for (int i = 0; i < 12; ++i) full_logits[i] = -1e6;
  for (int i = 0; i < 6; ++i) full_logits[3 + i] = logits[i];

  const auto restricted = fuse(stack, {4, 5, 6, 7, 8, 9}, logits);
  const auto full = fuse(stack, full_set, full_logits);
  for (std::size_t i = 0; i < restricted.size(); ++i)
    CHECK(std::abs(restricted[i] - full[i]) <= 1e-6);
}

TEST_CASE("attentive statistics pooling hand cases") {
  Rng rng(31);
  // constant frames: mu = c, sigma = sqrt(eps)
  {
    LayerStack<double> s;
    Tensor<double> t(std::vector<std::size_t>{7, 1});
    for (double& v : t) v = 0.6;
    s.layers.assign(6, t);
    ModelParams<double> p = init_params<double>(1, 1, 2, {1, 2, 3, 4, 5, 6}, rng);
    p.w1 = Tensor<double>::from({1, 1}, {1.0});
    p.w2 = Tensor<double>::from({1, 1}, {1.0});
    const auto tr = forward(s, p, 0.0, nullptr, false);
    CHECK(tr.mu[0] == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(tr.sigma[0] == doctest::Approx(std::sqrt(1e-9)).epsilon(1e-6));
  }
  // two frames 0 and 2 with v = 0 forcing uniform attention: mu 1, sigma 1
  {
    LayerStack<double> s;
    Tensor<double> t = Tensor<double>::from({2, 1}, {0.0, 2.0});
    s.layers.assign(1, t);
    ModelParams<double> p = init_params<double>(1, 1, 2, {1}, rng);
    p.w1 = Tensor<double>::from({1, 1}, {1.0});
    p.w2 = Tensor<double>::from({1, 1}, {1.0});
    p.v = Tensor<double>(std::vector<std::size_t>{2});  // zero vector
    p.k[0] = 3.7;                                       // arbitrary
    const auto tr = forward(s, p, 0.0, nullptr, false);
    CHECK(tr.alpha[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tr.mu[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tr.sigma[0] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("pooling sigma floor and mu envelope") {
  Rng rng(32);
  LayerStack<double> s = random_stack(6, 16, 3, rng);
  ModelParams<double> p = init_params<double>(3, 4, 2, {1, 2, 3, 4, 5, 6}, rng);
  const auto tr = forward(s, p, 0.0, nullptr, false);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(tr.sigma[j] >= std::sqrt(1e-9) - 1e-15);
    double lo = 1e300, hi = -1e300;
    for (std::size_t t = 0; t < 16; ++t) {
      lo = std::min(lo, tr.h2.at(t, j));
      hi = std::max(hi, tr.h2.at(t, j));
    }
    CHECK(tr.mu[j] >= lo - 1e-12);
    CHECK(tr.mu[j] <= hi + 1e-12);
  }
}

TEST_CASE("classifier score is the logit difference and shift invariant") {
  Rng rng(33);
  ForwardTrace<double> tr;
  tr.logits = {2.0, 1.0};
  CHECK(tr.score() == 1.0);
  tr.logits = {0.0, 0.0};
  CHECK(tr.score() == 0.0);
  tr.logits = {2.0 + 5.5, 1.0 + 5.5};
  CHECK(tr.score() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forward is deterministic in eval mode and replayable in training") {
  Rng rng(34);
  LayerStack<double> s = random_stack(12, 10, 4, rng);
  ModelParams<double> p = init_params<double>(4, 5, 3, kDefaultLayerSet, rng);

  const auto a = forward(s, p, 0.0, nullptr, false);
  const auto b = forward(s, p, 0.0, nullptr, false);
  CHECK(a.score() == b.score());

  Rng d1(55), d2(55);
  const auto t1 = forward(s, p, 0.3, &d1, true);
  const auto t2 = forward(s, p, 0.3, &d2, true);
  CHECK(t1.score() == t2.score());
}

TEST_CASE("full model gradient check at rel err < 1e-4") {
  Rng rng(13);
  TinyBatch batch;
  for (int i = 0; i < 6; ++i) {
    batch.stacks.push_back(random_stack(12, 16, 8, rng));
    batch.labels.push_back(i % 3 == 0 ? Label::kBona : Label::kSpoof);
  }
  Rng init_rng(13091);
  ModelParams<double> params = init_params<double>(8, 8, 4, kDefaultLayerSet, init_rng);
  // move off the symmetric init point
  for (double& v : params.fusion_logits) v = init_rng.uniform(-0.3, 0.3);
  for (double& v : params.b1) v = init_rng.uniform(-0.05, 0.05);
  for (double& v : params.b2) v = init_rng.uniform(-0.05, 0.05);
  for (double& v : params.ba) v = init_rng.uniform(-0.05, 0.05);
  for (double& v : params.bc) v = init_rng.uniform(-0.05, 0.05);

  // central differences need the ReLU inputs clear of the kink
  double min_abs_z = 1e300;
  for (const auto& s : batch.stacks) {
    const auto tr = forward(s, params, 0.0, nullptr, false);
    for (const double z : tr.z1) min_abs_z = std::min(min_abs_z, std::abs(z));
    for (const double z : tr.z2) min_abs_z = std::min(min_abs_z, std::abs(z));
  }
  REQUIRE(min_abs_z > 2e-4);

  const ModelParams<double> analytic = batch.grads(params);
  auto loss = [&] { return batch.loss(params); };

  std::vector<GradCheckGroup> groups;
  const ModelParams<double>* ap = &analytic;
  params.for_each([&](const char* name, Tensor<double>& t) {
    const Tensor<double>* g = nullptr;
    const_cast<ModelParams<double>*>(ap)->for_each([&](const char* gname, Tensor<double>& gt) {
      if (std::string(gname) == name) g = &gt;
    });
    groups.push_back({name, &t, g});
  });
  REQUIRE(groups.size() == 11);

  const auto reports = finite_diff_check(loss, groups, 1e-5);
  for (const auto& r : reports) {
    INFO(r.group, " max_rel_err=", r.max_rel_err, " max_abs_grad=", r.max_abs_grad);
    CHECK(r.max_rel_err < 1e-4);
  }
}

TEST_CASE("checkpoint round trip is lossless") {
  Rng rng(77);
  Checkpoint ckpt;
  ckpt.params = init_params<float>(8, 6, 4, kDefaultLayerSet, rng);
  ckpt.dropout = 0.1;
  ckpt.trajectory = TensorF(std::vector<std::size_t>{5, 6});
  for (std::size_t i = 0; i < ckpt.trajectory.size(); ++i)
    ckpt.trajectory[i] = static_cast<float>(i) * 0.01f;

  const std::string path = (fs::temp_directory_path() / "effn_ckpt_test.ckpt").string();
  write_checkpoint(path, ckpt);
  const Checkpoint r = read_checkpoint(path);
  CHECK(r.params.layer_set == ckpt.params.layer_set);
  CHECK(r.dropout == ckpt.dropout);
  CHECK(r.trajectory.values() == ckpt.trajectory.values());
  bool equal = true;
  r.params.for_each([&](const char* name, const TensorF& t) {
    ckpt.params.for_each([&](const char* oname, const TensorF& o) {
      if (std::string(name) == oname) equal = equal && t.values() == o.values();
    });
  });
  CHECK(equal);
}

TEST_CASE("checkpoint rejects corruption") {
  Rng rng(78);
  Checkpoint ckpt;
  ckpt.params = init_params<float>(4, 4, 2, kDefaultLayerSet, rng);
  const std::string path = (fs::temp_directory_path() / "effn_ckpt_bad.ckpt").string();
  write_checkpoint(path, ckpt);
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(0);
    f.write("JUNK", 4);
  }
  CHECK_THROWS_AS(read_checkpoint(path), FormatError);

  write_checkpoint(path, ckpt);
  fs::resize_file(path, fs::file_size(path) - 8);
  CHECK_THROWS_AS(read_checkpoint(path), IoError);

  CHECK_THROWS_AS(read_checkpoint((fs::temp_directory_path() / "no_such.ckpt").string()), IoError);
}
