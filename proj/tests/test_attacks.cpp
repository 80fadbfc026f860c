#include <algorithm>
#include <cmath>
#include <random>

#include "advlab/attacks.hpp"
#include "advlab/errors.hpp"
#include "doctest.h"

using namespace advlab;

namespace {

// Linear 2-D, 2-class model with logits z = x W + b.
MlpParams linear_model(std::vector<double> w, std::vector<double> b) {
  MlpParams p = init_params(MlpConfig{.layer_sizes = {2, 2}, .init_seed = 0});
  p.layers[0].weight = Tensor::matrix(2, 2, std::move(w));
  p.layers[0].bias = Tensor::vector(std::move(b));
  return p;
}

MlpParams constant_model(std::vector<double> b) { return linear_model({0, 0, 0, 0}, std::move(b)); }

AttackConfig plain(double eps, std::size_t steps, double step) {
  AttackConfig cfg;
  cfg.epsilon = eps;
  cfg.steps = steps;
  cfg.step_size = step;
  cfg.random_start = false;
  return cfg;
}

}  // namespace

TEST_CASE("config validation and presets") {
  CHECK_NOTHROW(AttackConfig{}.validate());
  AttackConfig bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.steps = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.restarts = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.alpha = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  const AttackConfig p20 = AttackConfig::pgd20(0.031);
  CHECK(p20.steps == 20);
  CHECK(p20.step_size == 0.031 / 4);
  CHECK(std::abs(p20.step_size - 0.00775) < 1e-15);
  CHECK(p20.restarts == 1);
  CHECK(p20.random_start);
  CHECK(p20.verdict == Verdict::best_iterate);

  const AttackConfig plus = AttackConfig::pgd_plus(0.031);
  CHECK(plus.steps * plus.restarts == 200);
  CHECK(plus.step_size == 0.01);
  CHECK(plus.verdict == Verdict::all_iterates);
}

TEST_CASE("project_linf examples") {
  const Tensor x0 = Tensor::matrix(1, 1, {0.5});
  CHECK(project_linf(Tensor::matrix(1, 1, {0.63}), x0, 0.1)[0] == 0.6);
  CHECK(project_linf(Tensor::matrix(1, 1, {0.55}), x0, 0.1)[0] == 0.55);
  const Tensor edge = Tensor::matrix(1, 1, {0.99});
  CHECK(project_linf(Tensor::matrix(1, 1, {1.2}), edge, 0.05, DomainBox::unit(1))[0] == 1.0);
  CHECK(project_linf(Tensor::matrix(1, 1, {1.2}), edge, 0.05)[0] == 0.99 + 0.05);
  CHECK_THROWS_AS(project_linf(Tensor::matrix(1, 2, {0, 0}), x0, 0.1), DimensionError);
}

TEST_CASE("project_linf is idempotent and contained") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(6), b(6);
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng) * 3.0 - 1.0;
    const double eps = u(rng) * 0.3 + 1e-3;
    const Tensor x0 = Tensor::matrix(3, 2, a);
    const Tensor once = project_linf(Tensor::matrix(3, 2, b), x0, eps, DomainBox::unit(2));
    CHECK(project_linf(once, x0, eps, DomainBox::unit(2)) == once);
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(std::abs(once[k] - a[k]) <= eps + 1e-12);
      CHECK(once[k] >= 0.0);
      CHECK(once[k] <= 1.0);
    }
  }
}

TEST_CASE("constant-logit model leaves points in place") {
  const MlpParams m = constant_model({1.0, 0.0});
  const Tensor x0 = Tensor::matrix(2, 2, {0.2, 0.3, 0.7, 0.9});
  const Label y[] = {0, 0};
  const AttackResult r = pgd_attack(m, x0, y, plain(0.1, 10, 0.02));
  CHECK(r.adversarial == x0);
  CHECK(r.kappa == std::vector<std::size_t>{10, 10});
  CHECK(r.final_correct == std::vector<bool>{true, true});
}

TEST_CASE("linear model iterates match a hand-stepped simulation") {
  // Identity weights: z = (x_0, x_1). For y = 0 the loss gradient is
  // p_1 * (w_1 - w_0) = p_1 * (-1, +1), so every step moves by (-lambda, +lambda).
  const MlpParams m = linear_model({1, 0, 0, 1}, {0, 0});
  const double eps = 0.07;
  const double step = 0.03;
  const Tensor x0 = Tensor::matrix(1, 2, {0.5, 0.5});
  const Label y[] = {0};

  std::vector<std::vector<double>> expected{{0.5, 0.5}};
  for (int t = 0; t < 3; ++t) {
    std::vector<double> next = expected.back();
    next[0] = std::clamp(next[0] - step, 0.5 - eps, 0.5 + eps);
    next[1] = std::clamp(next[1] + step, 0.5 - eps, 0.5 + eps);
    expected.push_back(next);
  }
  CHECK(expected[3][0] == 0.5 - eps);  // the ball binds on step 3

  for (std::size_t steps = 1; steps <= 3; ++steps) {
    const AttackResult r = pgd_attack(m, x0, y, plain(eps, steps, step));
    // Loss increases along the path, so the max-loss iterate is the last one.
    CHECK(r.adversarial[0] == expected[steps][0]);
    CHECK(r.adversarial[1] == expected[steps][1]);
  }

  const AttackResult r = pgd_attack(m, x0, y, plain(eps, 3, step));
  CHECK(r.natural_correct[0]);  // tie at x0 resolves to class 0
  CHECK(r.kappa[0] == 1);
  CHECK(r.trace.row(0, 0) == std::vector<bool>{true, false, false, false});
  CHECK_FALSE(r.final_correct[0]);
}

TEST_CASE("max-loss selection keeps the earliest iterate on ties") {
  // After one step the iterate sits on the ball corner; every later iterate ties in loss.
  const MlpParams m = linear_model({1, 0, 0, 1}, {0, 0});
  const Tensor x0 = Tensor::matrix(1, 2, {0.5, 0.5});
  const Label y[] = {0};
  AttackConfig cfg = plain(0.03, 5, 0.05);
  const AttackResult r = pgd_attack(m, x0, y, cfg);
  CHECK(r.adversarial[0] == 0.47);
  CHECK(r.adversarial[1] == 0.53);
}

TEST_CASE("count_kappa examples") {
  CHECK(count_kappa(std::vector<bool>{false, true, true}, 2) == 0);
  CHECK(count_kappa(std::vector<bool>(11, true), 10) == 10);
  CHECK(count_kappa(std::vector<bool>{true, true, true, false, true}, 4) == 3);

  const MlpParams m = constant_model({0.0, 1.0});
  const Tensor x0 = Tensor::matrix(1, 2, {0.5, 0.5});
  const Label y[] = {0};
  const AttackResult r = pgd_attack(m, x0, y, plain(0.1, 10, 0.01));
  CHECK(r.kappa[0] == 0);
  CHECK_FALSE(r.natural_correct[0]);
}

TEST_CASE("friendly search stops early") {
  const MlpParams m = linear_model({1, 0, 0, 1}, {0, 0});
  const Tensor x0 = Tensor::matrix(1, 2, {0.5, 0.5});
  const Label y[] = {0};
  const AttackConfig cfg = plain(0.2, 10, 0.03);

  const Tensor first = friendly_adversarial_search(m, x0, y, cfg, 0);
  CHECK(first[0] == 0.5 - 0.03);
  CHECK(first[1] == 0.5 + 0.03);
  // Margin condition: the returned point is misclassified, the previous iterate is not.
  CHECK(predict(m, first)[0] != 0);
  CHECK(predict(m, x0)[0] == 0);

  const Tensor later = friendly_adversarial_search(m, x0, y, cfg, 2);
  CHECK(later[0] == 0.5 - 0.03 - 0.03 - 0.03);

  const Tensor full = pgd_attack(m, x0, y, cfg).adversarial;
  CHECK(full[0] < first[0]);

  // Never misclassified: identical to the PGD output.
  const MlpParams safe = linear_model({1, 0, 0, 1}, {5, 0});
  const Tensor fas = friendly_adversarial_search(safe, x0, y, cfg, 0);
  CHECK(fas == pgd_attack(safe, x0, y, cfg).adversarial);
}

TEST_CASE("PGD+ verdicts") {
  const Tensor x0 = Tensor::matrix(1, 2, {0.5, 0.5});
  const Label y0[] = {0};
  const Label y1[] = {1};
  const AttackConfig cfg = AttackConfig::pgd_plus(0.031);

  CHECK(pgd_plus_verdict(constant_model({1, 0}), x0, y0, cfg)[0]);
  CHECK_FALSE(pgd_plus_verdict(constant_model({1, 0}), x0, y1, cfg)[0]);

  // Boundary x_0 = x_1 + 0.02 lies inside the ball; some iterate crosses it.
  const MlpParams m = linear_model({1, 0, 0, 1}, {0.0, 0.0});
  const Tensor shifted = Tensor::matrix(1, 2, {0.52, 0.5});
  CHECK(predict(m, shifted)[0] == 0);
  CHECK_FALSE(pgd_plus_verdict(m, shifted, y0, cfg)[0]);
}

TEST_CASE("PGD+ is at most as permissive as the best-iterate verdict") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const MlpParams m = init_params(MlpConfig{.layer_sizes = {2, 8, 2}, .activation = Activation::tanh, .init_seed = rng()});
    std::vector<double> xs(40);
    for (double& v : xs) v = u(rng);
    const Tensor x0 = Tensor::matrix(20, 2, xs);
    const std::vector<Label> y = predict(m, x0);
    AttackConfig cfg = AttackConfig::pgd_plus(0.05);
    cfg.seed = rng();
    const auto all = pgd_attack(m, x0, y, cfg);
    cfg.verdict = Verdict::best_iterate;
    const auto best = pgd_attack(m, x0, y, cfg);
    for (std::size_t i = 0; i < 20; ++i) {
      if (all.final_correct[i]) CHECK(best.final_correct[i]);
    }
  }
}

TEST_CASE("random starts stay inside ball and domain, and runs are deterministic") {
  const MlpParams m = init_params(MlpConfig{.layer_sizes = {2, 16, 3}, .init_seed = 5});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(60);
  for (double& v : xs) v = u(rng);
  xs[0] = 0.0;
  xs[1] = 1.0;
  const Tensor x0 = Tensor::matrix(30, 2, xs);
  std::vector<Label> y(30);
  for (auto& v : y) v = static_cast<Label>(rng() % 3);
  AttackConfig cfg = AttackConfig::pgd20(0.1);
  cfg.restarts = 3;
  cfg.seed = 77;
  const AttackResult a = pgd_attack(m, x0, y, cfg, DomainBox::unit(2));
  for (std::size_t k = 0; k < xs.size(); ++k) {
    CHECK(std::abs(a.adversarial[k] - xs[k]) <= 0.1 + 1e-12);
    CHECK(a.adversarial[k] >= 0.0);
    CHECK(a.adversarial[k] <= 1.0);
  }
  for (const std::size_t k : a.kappa) CHECK(k <= cfg.steps);
  CHECK(a == pgd_attack(m, x0, y, cfg, DomainBox::unit(2)));
  // Long runs converge to ball corners; a single tiny step still shows the start.
  cfg.steps = 1;
  cfg.step_size = 1e-4;
  const Tensor short_run = pgd_attack(m, x0, y, cfg, DomainBox::unit(2)).adversarial;
  cfg.seed = 78;
  CHECK_FALSE(short_run == pgd_attack(m, x0, y, cfg, DomainBox::unit(2)).adversarial);
}

TEST_CASE("input validation") {
  const MlpParams m = constant_model({1, 0});
  const Tensor x0 = Tensor::matrix(1, 2, {0.5, 0.5});
  const Label bad[] = {2};
  CHECK_THROWS_AS(pgd_attack(m, x0, bad, plain(0.1, 1, 0.1)), IndexError);
  const Label two[] = {0, 0};
  CHECK_THROWS_AS(pgd_attack(m, x0, two, plain(0.1, 1, 0.1)), DimensionError);
  AttackConfig cfg = plain(0.1, 1, 0.1);
  cfg.alpha = 0.0;
  const Label ok[] = {0};
  CHECK_THROWS_AS(pgd_attack(m, x0, ok, cfg), ConfigError);
}

TEST_CASE("brute force oracle") {
  const double x[] = {0.5, 0.5};
  CHECK(brute_force_attack(constant_model({1, 0}), x, 0, 0.1, 11));
  CHECK_FALSE(brute_force_attack(constant_model({1, 0}), x, 1, 0.1, 11));
  // Boundary x_0 = x_1 + 0.02 passes through the ball of radius 0.1.
  const MlpParams m = linear_model({1, 0, 0, 1}, {0, 0});
  const double shifted[] = {0.52, 0.5};
  CHECK_FALSE(brute_force_attack(m, shifted, 0, 0.1, 11));
  // With a radius below the margin the grid cannot cross it.
  CHECK(brute_force_attack(m, shifted, 0, 0.005, 51));

  MlpParams wide = init_params(MlpConfig{.layer_sizes = {4, 2}, .init_seed = 0});
  const double four[] = {0, 0, 0, 0};
  CHECK_THROWS_AS(brute_force_attack(wide, four, 0, 0.1, 5), CapabilityError);
  CHECK_THROWS_AS(brute_force_attack(m, x, 0, 0.1, 102), ParameterError);
}

TEST_CASE("brute force dominates PGD on small models") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  std::size_t found = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const MlpParams m = init_params(MlpConfig{.layer_sizes = {2, 6, 2}, .activation = Activation::tanh, .init_seed = rng()});
    const std::vector<double> point{u(rng), u(rng)};
    const Tensor x0 = Tensor::matrix(1, 2, point);
    const Label y[] = {predict(m, x0)[0]};
    AttackConfig cfg = plain(0.1, 50, 0.01);
    cfg.random_start = true;
    cfg.restarts = 5;
    cfg.seed = rng();
    const AttackResult r = pgd_attack(m, x0, y, cfg, DomainBox::unit(2));
    if (!r.final_correct[0]) {
      ++found;
      CHECK_FALSE(brute_force_attack(m, point, y[0], 0.1, 51, DomainBox::unit(2)));
    }
  }
  MESSAGE("PGD found " << found << " misclassifications");
}
