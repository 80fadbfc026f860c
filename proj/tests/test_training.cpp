#include <cmath>
#include <numeric>
#include <random>

#include "advlab/errors.hpp"
#include "advlab/training.hpp"
#include "doctest.h"

using namespace advlab;

namespace {

// kappa = (0, 10), K = 10, lambda = 0, from mpmath at 40 digits.
constexpr double kRaw0 = 0.99995460213129757;
constexpr double kRaw1 = 0.0000453978687024344;
constexpr double kOmega0 = 1.99990920426259513;
constexpr double kOmega1 = 0.0000907957374048688;

AttackConfig inner(std::size_t steps = 5) {
  AttackConfig cfg = AttackConfig::pgd20(0.031);
  cfg.steps = steps;
  return cfg;
}

MlpConfig net(std::uint64_t seed = 3) {
  return MlpConfig{.layer_sizes = {2, 16, 2}, .activation = Activation::relu, .init_seed = seed};
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_train_method("GAIRAT") == TrainMethod::gairat);
  CHECK(to_string(TrainMethod::fat) == "fat");
  CHECK_THROWS_AS(parse_train_method("trades"), ConfigError);
}

TEST_CASE("compute_weights worked example") {
  const std::size_t kappa[] = {0, 10};
  const auto w = compute_weights(kappa, 10, 0.0).weights;
  const double raw0 = (1.0 + std::tanh(5.0)) / 2.0;
  const double raw1 = (1.0 + std::tanh(-5.0)) / 2.0;
  CHECK(std::abs(raw0 - kRaw0) < 1e-15);
  CHECK(std::abs(raw1 - kRaw1) < 1e-15);
  CHECK(std::abs(w[0] - kOmega0) < 1e-12);
  CHECK(std::abs(w[1] - kOmega1) < 1e-12);
}

TEST_CASE("compute_weights contract") {
  const std::size_t same[] = {4, 4, 4};
  for (const double v : compute_weights(same, 10, 0.0).weights) CHECK(v == 1.0);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k_max = 1 + rng() % 20;
    const std::size_t n = 1 + rng() % 64;
    std::vector<std::size_t> kappa(n);
    for (auto& k : kappa) k = rng() % (k_max + 1);
    const double lambda = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    const auto w = compute_weights(kappa, k_max, lambda).weights;
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
    CHECK(std::abs(mean - 1.0) < 1e-10);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(w[i] >= 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        if (kappa[i] < kappa[j]) CHECK(w[i] >= w[j]);
      }
    }
  }

  const std::size_t too_big[] = {11};
  CHECK_THROWS_AS(compute_weights(too_big, 10, 0.0), ContractError);
  CHECK_THROWS_AS(compute_weights(std::span<const std::size_t>{}, 10, 0.0), ContractError);
}

TEST_CASE("sgd_step examples") {
  const MlpParams p = init_params(net());
  std::vector<Layer> zero = p.layers;
  for (auto& layer : zero) {
    for (double& v : layer.weight.mutable_data()) v = 0.0;
    for (double& v : layer.bias.mutable_data()) v = 0.0;
  }
  CHECK(sgd_step(p, zero, 0.5) == p);
  const MlpParams gone = sgd_step(p, p.layers, 1.0);
  for (const auto& layer : gone.layers) {
    for (const double v : layer.weight.data()) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(sgd_step(p, std::span<const Layer>(p.layers).first(1), 0.1), DimensionError);
}

TEST_CASE("sgd converges on a quadratic bowl") {
  // f(theta) = (theta - c)^2, gradient 2 (theta - c): error shrinks by 0.8 per step.
  MlpParams p = init_params(MlpConfig{.layer_sizes = {1, 2}, .init_seed = 1});
  p.layers[0].weight = Tensor::matrix(1, 2, {3.0, -2.0});
  p.layers[0].bias = Tensor::vector({0.5, 1.0});
  const double c = 0.25;
  const std::vector<double> start{3.0, -2.0, 0.5, 1.0};
  for (int step = 0; step < 100; ++step) {
    std::vector<Layer> g = p.layers;
    for (double& v : g[0].weight.mutable_data()) v = 2.0 * (v - c);
    for (double& v : g[0].bias.mutable_data()) v = 2.0 * (v - c);
    p = sgd_step(p, g, 0.1);
  }
  const std::vector<double> got{p.layers[0].weight[0], p.layers[0].weight[1], p.layers[0].bias[0], p.layers[0].bias[1]};
  for (std::size_t k = 0; k < 4; ++k) {
    const double closed_form = c + std::pow(0.8, 100) * (start[k] - c);
    CHECK(std::abs(got[k] - closed_form) < 1e-12);
    CHECK(std::abs(got[k] - c) < 1e-6);
  }
}

TEST_CASE("scaling every weight scales the gradient") {
  const MlpParams p = init_params(net());
  const Tensor x = Tensor::matrix(3, 2, {0.1, 0.2, 0.5, 0.5, 0.9, 0.3});
  const Label y[] = {0, 1, 1};
  auto grads = [&](double c) {
    Tape tape;
    const TapedForward fwd = forward_on_tape(tape, p, x, TrackGradients{.params = true});
    const std::vector<double> w{0.5 * c, 1.2 * c, 1.3 * c};
    const Gradient g = tape.backward(tape.weighted_mean(tape.scaled_softmax_cross_entropy(fwd.logits, y, 1.0), w));
    return parameter_gradients(fwd, g);
  };
  const auto base = grads(1.0);
  const auto doubled = grads(2.0);
  const auto tripled = grads(3.0);
  for (std::size_t l = 0; l < base.size(); ++l) {
    for (std::size_t k = 0; k < base[l].weight.size(); ++k) {
      CHECK(doubled[l].weight[k] == 2.0 * base[l].weight[k]);
      CHECK(tripled[l].weight[k] == doctest::Approx(3.0 * base[l].weight[k]).epsilon(1e-14));
    }
  }
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.method = TrainMethod::at;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.inner_attack = inner();
  CHECK_NOTHROW(cfg.validate());
  cfg.inner_attack->alpha = 10.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.inner_attack->alpha = 1.0;
  cfg.method = TrainMethod::gairat;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.omega_lambda = 0.0;
  CHECK_NOTHROW(cfg.validate());
  cfg.burn_in_epochs = cfg.epochs + 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  TrainConfig lr;
  lr.learning_rate = 0.0;
  CHECK_THROWS_AS(lr.validate(), ConfigError);
}

TEST_CASE("zero epochs returns the initial parameters") {
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto out = train(net(), gen_two_moons(20, 0.1, 1), cfg);
  CHECK(out.params == init_params(net()));
  CHECK(out.history.epochs.empty());
}

TEST_CASE("GAIRAT with full burn-in reproduces AT bit for bit") {
  const Dataset ds = gen_two_moons(64, 0.1, 2);
  TrainConfig at;
  at.method = TrainMethod::at;
  at.epochs = 3;
  at.batch_size = 16;
  at.seed = 11;
  at.inner_attack = inner();
  TrainConfig gairat = at;
  gairat.method = TrainMethod::gairat;
  gairat.omega_lambda = 0.0;
  gairat.burn_in_epochs = gairat.epochs;
  const auto a = train(net(), ds, at);
  const auto g = train(net(), ds, gairat);
  CHECK(a.params == g.params);

  // After burn-in the weights kick in and the runs diverge.
  gairat.burn_in_epochs = 1;
  CHECK_FALSE(train(net(), ds, gairat).params == a.params);
}

TEST_CASE("training is deterministic and records history") {
  const Dataset ds = gen_two_moons(48, 0.1, 4);
  TrainConfig cfg;
  cfg.method = TrainMethod::gairat;
  cfg.epochs = 3;
  cfg.batch_size = 10;
  cfg.seed = 5;
  cfg.inner_attack = inner(4);
  cfg.omega_lambda = 0.0;
  cfg.burn_in_epochs = 1;
  const auto a = train(net(), ds, cfg);
  const auto b = train(net(), ds, cfg);
  CHECK(a.params == b.params);
  CHECK(a.history == b.history);
  REQUIRE(a.history.epochs.size() == 3);
  for (const auto& rec : a.history.epochs) {
    CHECK(rec.kappa_histogram.size() == 5);
    CHECK(std::accumulate(rec.kappa_histogram.begin(), rec.kappa_histogram.end(), std::size_t{0}) == ds.size());
    CHECK(rec.natural_accuracy >= 0.0);
    CHECK(rec.natural_accuracy <= 1.0);
  }
  const std::string csv = serialize_history_csv(a.history);
  CHECK(csv.rfind("epoch,loss,nat_acc,kappa_0,kappa_1,kappa_2,kappa_3,kappa_4\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  cfg.seed = 6;
  CHECK_FALSE(train(net(), ds, cfg).params == a.params);
}

TEST_CASE("FAT and AT train without error") {
  const Dataset ds = gen_two_moons(40, 0.1, 7);
  for (const TrainMethod m : {TrainMethod::at, TrainMethod::fat}) {
    TrainConfig cfg;
    cfg.method = m;
    cfg.epochs = 2;
    cfg.inner_attack = inner();
    cfg.fat_slack = 1;
    const auto out = train(net(), ds, cfg);
    CHECK(out.history.epochs.size() == 2);
    CHECK(out.history.epochs[0].kappa_histogram.empty());
  }
}

TEST_CASE("ERM separates gaussian blobs") {
  const Dataset ds = gen_gaussian_blobs(400, {{0.25, 0.25}, {0.75, 0.75}}, 0.05, 8);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 1;
  const auto out = train(net(), ds, cfg);
  CHECK(out.history.epochs.back().natural_accuracy >= 0.99);
}

TEST_CASE("train rejects mismatched data") {
  const Dataset ds = gen_two_moons(20, 0.1, 1);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(MlpConfig{.layer_sizes = {3, 2}}, ds, cfg), DimensionError);
}
