#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "generators.hpp"
#include "kinship/comparator.hpp"
#include "kinship/errors.hpp"
#include "oracles.hpp"

using namespace kinship;

namespace {

constexpr Activation kActs[] = {Activation::LReLU, Activation::ReLU, Activation::PReLU, Activation::Tanh};
constexpr SharingMode kModes[] = {SharingMode::PerExpert, SharingMode::SharedTrunk, SharingMode::EntirelyLocal};

ComparatorParams zero_params(const ComparatorConfig& c) {
  auto p = init_params(c, 1);
  for (auto& l : p.layers) std::fill(l.weight.data.begin(), l.weight.data.end(), 0.0);
  for (auto& o : p.outputs) std::fill(o.weight.begin(), o.weight.end(), 0.0);
  return p;
}

}  // namespace

TEST_CASE("activation values") {
  CHECK(activation(1.0, Activation::LReLU) == 1.0);
  CHECK(activation(-1.0, Activation::LReLU) == -0.2);
  CHECK(activation(-1.0, Activation::ReLU) == 0.0);
  CHECK(activation(-2.0, Activation::PReLU, 0.25) == -0.5);
  CHECK(activation(0.0, Activation::Tanh) == 0.0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) <= 1.0);
}

TEST_CASE("activation derivatives match central differences away from zero") {
  Rng rng(3);
  for (auto a : kActs) {
    for (int i = 0; i < 100; ++i) {
      double x = rng.uniform(-3, 3);
      if (std::abs(x) < 1e-3) x = 0.5;
      const double h = 1e-6;
      const double num = (activation(x + h, a, 0.3) - activation(x - h, a, 0.3)) / (2 * h);
      CHECK(activation_derivative(x, activation(x, a, 0.3), a, 0.3) == doctest::Approx(num).epsilon(1e-6));
    }
  }
}

TEST_CASE("init_params shapes, zero biases and determinism") {
  ComparatorConfig c;
  const auto p = init_params(c, 7);
  REQUIRE(p.layers.size() == 11);
  CHECK(p.layers[0].weight.rows == 192);
  CHECK(p.layers[0].weight.cols == 1024);
  for (std::size_t i = 1; i < 11; ++i) {
    CHECK(p.layers[i].weight.rows == 192);
    CHECK(p.layers[i].weight.cols == 192);
  }
  for (const auto& l : p.layers) CHECK(std::all_of(l.bias.begin(), l.bias.end(), [](double b) { return b == 0.0; }));
  for (const auto& o : p.outputs) {
    CHECK(o.bias == 0.0);
    CHECK(o.weight.size() == 192);
  }
  const double limit = std::sqrt(6.0 / (1024 + 192));
  for (double w : p.layers[0].weight.data) CHECK(std::abs(w) <= limit);
  CHECK(init_params(c, 7) == p);
  CHECK(!(init_params(c, 8) == p));
}

TEST_CASE("layer counts per sharing mode") {
  ComparatorConfig c;
  c.sharing = SharingMode::SharedTrunk;
  CHECK(c.n_layers() == 2);
  CHECK(c.layer_of(0) == 0);
  CHECK(c.layer_of(10) == 1);
  c.sharing = SharingMode::EntirelyLocal;
  CHECK(c.n_layers() == 11);
  CHECK(c.layer_input_dim(5) == c.input_dim());
}

TEST_CASE("config validation") {
  ComparatorConfig c;
  c.hidden = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.relations.push_back(KinshipRelation::BB);
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("zero parameters give one half everywhere") {
  ComparatorConfig c;
  c.embedding_dim = 8;
  c.hidden = 4;
  const auto p = zero_params(c);
  Rng rng(1);
  const auto t = forward(p, gen::random_vector(16, rng));
  for (double z : t.z2) CHECK(z == 0.5);
  const auto v = verify(p, gen::random_vector(8, rng), gen::random_vector(8, rng), KinshipRelation::FD, 0.5);
  CHECK(v.score == 0.5);
  CHECK(v.decision == Decision::Kin);
}

TEST_CASE("forward matches the dense oracle") {
  Rng rng(12345);
  for (auto a : kActs) {
    for (auto m : kModes) {
      for (int draw = 0; draw < 100; ++draw) {
        const auto c = gen::tiny_config(a, m);
        const auto p = gen::random_params(c, rng);
        const auto fc = gen::random_vector(4, rng);
        const auto expected = oracle::forward(p, fc);
        const auto t = forward(p, fc);
        for (std::size_t i = 0; i < 3; ++i) {
          CHECK(std::abs(t.z2[i] - expected.z2[i]) <= 1e-12);
          CHECK(std::abs(t.logits[i] - expected.logits[i]) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("forward rejects wrong lengths and non-finite values") {
  const auto c = gen::tiny_config(Activation::LReLU, SharingMode::PerExpert);
  auto p = init_params(c, 1);
  CHECK_THROWS_AS(forward(p, std::vector<double>(5, 0.0)), DimensionError);
  CHECK_THROWS_AS(forward(p, std::vector<double>{1, 2, NAN, 0}), NumericalError);
  p.outputs[0].bias = INFINITY;
  CHECK_THROWS_AS(forward(p, std::vector<double>{1, 2, 3, 4}), NumericalError);
}

TEST_CASE("eval forward is bit-for-bit deterministic and strictly inside (0, 1)") {
  Rng rng(9);
  const auto c = gen::tiny_config(Activation::Tanh, SharingMode::PerExpert, 3, 5, 11);
  const auto p = gen::random_params(c, rng, 0.5);
  for (int i = 0; i < 100; ++i) {
    const auto fc = gen::random_vector(6, rng);
    const auto a = forward(p, fc);
    const auto b = forward(p, fc);
    CHECK(a.z2 == b.z2);
    for (double z : a.z2) {
      CHECK(z > 0.0);
      CHECK(z < 1.0);
    }
  }
}

TEST_CASE("dropout zero in train mode equals eval") {
  Rng rng(4);
  auto c = gen::tiny_config(Activation::LReLU, SharingMode::PerExpert, 4, 3, 11);
  c.dropout = 0.0;
  const auto p = gen::random_params(c, rng);
  const auto fc = gen::random_vector(8, rng);
  Rng drop(77);
  CHECK(forward(p, fc, {&drop, std::nullopt}).z2 == forward(p, fc).z2);
}

TEST_CASE("inverted dropout keeps the mean of f_c") {
  auto c = gen::tiny_config(Activation::LReLU, SharingMode::PerExpert, 4, 2, 1);
  c.dropout = 0.2;
  Rng rng(5);
  const auto p = gen::random_params(c, rng);
  const std::vector<double> fc = {1.0, -2.0, 0.5, 3.0, -1.0, 0.25, 2.0, -0.75};
  std::vector<double> mean(fc.size(), 0.0);
  Rng drop(6);
  const int n = 20000;
  ForwardTrace t;
  for (int i = 0; i < n; ++i) {
    forward_into(p, fc, {&drop, std::nullopt}, t);
    for (std::size_t j = 0; j < fc.size(); ++j) {
      CHECK((t.dropout_scale[j] == 0.0 || t.dropout_scale[j] == 1.0 / 0.8));
      mean[j] += t.input[j] / n;
    }
  }
  for (std::size_t j = 0; j < fc.size(); ++j) CHECK(std::abs(mean[j] - fc[j]) <= 0.02 * std::abs(fc[j]));
}

TEST_CASE("select_output picks the relation entry") {
  std::vector<double> z2(11, 0.5);
  CHECK(select_output(z2, KinshipRelation::GMGS) == 0.5);
  z2[3] = 0.9;
  CHECK(select_output(z2, KinshipRelation::FD) == 0.9);
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    for (auto& z : z2) z = rng.uniform();
    for (auto r : kAllRelations) {
      const auto oh = one_hot(r);
      CHECK(std::inner_product(z2.begin(), z2.end(), oh.begin(), 0.0) == select_output(z2, r));
    }
  }
  CHECK_THROWS_AS(select_output(std::vector<double>(3, 0.5), KinshipRelation::BB), DimensionError);
}

TEST_CASE("verify threshold conventions") {
  Rng rng(10);
  const auto c = gen::tiny_config(Activation::LReLU, SharingMode::PerExpert, 2, 2, 11);
  const auto p = gen::random_params(c, rng);
  const auto f1 = gen::random_vector(2, rng);
  const auto f2 = gen::random_vector(2, rng);
  CHECK(verify(p, f1, f2, KinshipRelation::FD, 1.0).decision == Decision::NonKin);
  CHECK(verify(p, f1, f2, KinshipRelation::FD, 0.0).decision == Decision::Kin);
  CHECK_THROWS_AS(verify(p, f1, f2, KinshipRelation::FD, 1.5), ValidationError);
  CHECK_THROWS_AS(verify(p, f1, std::vector<double>(3, 0.0), KinshipRelation::FD, 0.5), DimensionError);
}

TEST_CASE("cascade locality under perturbation") {
  Rng rng(2718);
  for (int sample = 0; sample < 1000; ++sample) {
    const auto c = gen::tiny_config(kActs[sample % 4], SharingMode::PerExpert, 2, 3, 11);
    const auto p = gen::random_params(c, rng, 0.7);
    const auto fc = gen::random_vector(4, rng);
    const auto base = forward(p, fc).z2;
    const std::size_t j = rng.index(11);

    auto q = p;
    q.outputs[j].weight[rng.index(3)] += 0.5;
    q.outputs[j].bias -= 0.3;
    const auto out_changed = forward(q, fc).z2;
    for (std::size_t i = 0; i < 11; ++i) {
      if (i != j) CHECK(out_changed[i] == base[i]);
    }

    auto r = p;
    r.layers[j].weight.data[rng.index(r.layers[j].weight.data.size())] += 0.5;
    r.layers[j].bias[rng.index(3)] -= 0.4;
    const auto hidden_changed = forward(r, fc).z2;
    for (std::size_t i = 0; i < j; ++i) CHECK(hidden_changed[i] == base[i]);
  }
}

TEST_CASE("entirely local experts permute with their parameters") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = gen::tiny_config(Activation::Tanh, SharingMode::EntirelyLocal, 2, 3, 11);
    const auto p = gen::random_params(c, rng);
    std::vector<std::size_t> perm(11);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    auto q = p;
    for (std::size_t i = 0; i < 11; ++i) {
      q.config.relations[i] = p.config.relations[perm[i]];
      q.layers[i] = p.layers[perm[i]];
      q.outputs[i] = p.outputs[perm[i]];
    }
    const auto fc = gen::random_vector(4, rng);
    const auto a = forward(p, fc).z2;
    const auto b = forward(q, fc).z2;
    for (std::size_t i = 0; i < 11; ++i) CHECK(b[i] == a[perm[i]]);
  }
}

TEST_CASE("last_expert stops the cascade") {
  Rng rng(41);
  const auto c = gen::tiny_config(Activation::LReLU, SharingMode::PerExpert, 2, 3, 11);
  const auto p = gen::random_params(c, rng);
  const auto fc = gen::random_vector(4, rng);
  const auto full = forward(p, fc);
  const auto part = forward(p, fc, {nullptr, 4});
  for (std::size_t i = 0; i <= 4; ++i) CHECK(part.z2[i] == full.z2[i]);
  for (std::size_t i = 5; i < 11; ++i) {
    CHECK(!part.evaluated[i]);
    CHECK(std::isnan(part.logits[i]));
  }
}

TEST_CASE("attention head") {
  ComparatorConfig c = gen::tiny_config(Activation::LReLU, SharingMode::PerExpert, 2, 2, 11);
  auto p = init_params(c, 3);
  Rng rng(2);
  const auto fc = gen::random_vector(4, rng);
  CHECK_THROWS_AS(attention_forward(p, fc), ValidationError);
  p.attention = zero_attention(c);
  for (double a : attention_forward(p, fc)) CHECK(a == doctest::Approx(1.0 / 11).epsilon(1e-15));
  for (auto& w : p.attention->weight.data) w = rng.normal();
  for (auto& b : p.attention->bias) b = rng.normal();
  const auto a = attention_forward(p, fc);
  CHECK(std::accumulate(a.begin(), a.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double x : a) CHECK(x > 0.0);
  auto shifted = p;
  for (auto& b : shifted.attention->bias) b += 123.0;
  const auto s = attention_forward(shifted, fc);
  for (std::size_t i = 0; i < 11; ++i) CHECK(s[i] == doctest::Approx(a[i]).epsilon(1e-12));
}

TEST_CASE("pooling of expert outputs") {
  const std::vector<double> half(11, 0.5);
  const std::vector<double> uniform(11, 1.0 / 11);
  for (auto m : {PoolMode::SoftAttention, PoolMode::HardAttention, PoolMode::MeanPool, PoolMode::MaxPool}) {
    CHECK(pool_outputs(half, uniform, m) == doctest::Approx(0.5).epsilon(1e-15));
  }
  Rng rng(12);
  std::vector<double> z2(11);
  for (auto& z : z2) z = rng.uniform();
  CHECK(pool_outputs(z2, uniform, PoolMode::SoftAttention) ==
        doctest::Approx(pool_outputs(z2, uniform, PoolMode::MeanPool)).epsilon(1e-14));
  CHECK(pool_outputs(z2, uniform, PoolMode::MaxPool) == *std::max_element(z2.begin(), z2.end()));
  std::vector<double> peaked(11, 0.01);
  peaked[6] = 0.9;
  CHECK(pool_outputs(z2, peaked, PoolMode::HardAttention) == z2[6]);
}
