#include "advlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "advlab/errors.hpp"
#include "advlab/text_io.hpp"

namespace advlab {

std::string to_string(TrainMethod method) {
  switch (method) {
    case TrainMethod::erm: return "erm";
    case TrainMethod::at: return "at";
    case TrainMethod::fat: return "fat";
    case TrainMethod::gairat: return "gairat";
  }
  return "unknown";
}

TrainMethod parse_train_method(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "erm") return TrainMethod::erm;
  if (lower == "at") return TrainMethod::at;
  if (lower == "fat") return TrainMethod::fat;
  if (lower == "gairat") return TrainMethod::gairat;
  throw ConfigError("unknown training method '" + name + "' (expected erm, at, fat or gairat)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (burn_in_epochs > epochs) {
    throw ConfigError("burn_in_epochs (" + std::to_string(burn_in_epochs) + ") exceeds epochs (" +
                      std::to_string(epochs) + ")");
  }
  if (method != TrainMethod::erm) {
    if (!inner_attack) throw ConfigError(to_string(method) + " training needs an inner attack config");
    inner_attack->validate();
    if (inner_attack->alpha != 1.0) throw ConfigError("the inner (crafting) attack must use alpha = 1");
  }
  if (method == TrainMethod::gairat && !omega_lambda) throw ConfigError("gairat training needs omega_lambda");
}

WeightAssignment compute_weights(std::span<const std::size_t> kappa, std::size_t max_steps, double omega_lambda) {
  if (kappa.empty()) throw ContractError("compute_weights needs a non-empty batch");
  if (max_steps < 1) throw ContractError("compute_weights needs K >= 1");
  const std::size_t n = kappa.size();
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (kappa[i] > max_steps) {
      throw ContractError("kappa " + std::to_string(kappa[i]) + " exceeds K = " + std::to_string(max_steps));
    }
    const double ratio = static_cast<double>(kappa[i]) / static_cast<double>(max_steps);
    raw[i] = (1.0 + std::tanh(omega_lambda + 5.0 * (1.0 - 2.0 * ratio))) / 2.0;
  }

  WeightAssignment out;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (*lo == *hi || total < 1e-300) {
    out.weights.assign(n, 1.0);
    return out;
  }
  out.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.weights[i] = raw[i] * static_cast<double>(n) / total;
  return out;
}

MlpParams sgd_step(const MlpParams& params, std::span<const Layer> grads, double learning_rate) {
  if (grads.size() != params.layers.size()) {
    throw DimensionError("sgd_step: " + std::to_string(grads.size()) + " gradient layers for " +
                         std::to_string(params.layers.size()) + " parameter layers");
  }
  MlpParams next = params;
  const auto update = [learning_rate](Tensor& theta, const Tensor& g) {
    if (theta.shape() != g.shape()) {
      throw DimensionError("sgd_step: parameter " + shape_to_string(theta.shape()) + " vs gradient " +
                           shape_to_string(g.shape()));
    }
    auto values = theta.mutable_data();
    for (std::size_t k = 0; k < values.size(); ++k) values[k] -= learning_rate * g[k];
  };
  for (std::size_t l = 0; l < next.layers.size(); ++l) {
    update(next.layers[l].weight, grads[l].weight);
    update(next.layers[l].bias, grads[l].bias);
  }
  return next;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t batch_seed(std::uint64_t seed, std::size_t epoch, std::size_t batch) {
  return splitmix64(splitmix64(splitmix64(seed) ^ epoch) ^ batch);
}

double accuracy(const MlpParams& params, const Dataset& dataset) {
  const auto predicted = predict(params, dataset.points);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == dataset.labels[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace

TrainOutcome train(const MlpConfig& model_config, const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  model_config.validate();
  dataset.validate();
  if (dataset.dim() != model_config.input_dim()) {
    throw DimensionError("dataset has " + std::to_string(dataset.dim()) + " features, model expects " +
                         std::to_string(model_config.input_dim()));
  }
  if (static_cast<std::size_t>(dataset.num_classes) > model_config.num_classes()) {
    throw ConfigError("dataset has " + std::to_string(dataset.num_classes) + " classes, model outputs " +
                      std::to_string(model_config.num_classes()));
  }

  TrainOutcome out{.params = init_params(model_config), .history = {}};
  const std::size_t n = dataset.size();
  const std::size_t d = dataset.dim();
  const std::size_t inner_steps = config.inner_attack ? config.inner_attack->steps : 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(config.seed);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord record;
    record.epoch = epoch + 1;
    if (config.method == TrainMethod::gairat) record.kappa_histogram.assign(inner_steps + 1, 0);
    double loss_sum = 0.0;

    for (std::size_t start = 0, batch = 0; start < n; start += config.batch_size, ++batch) {
      const std::size_t count = std::min(config.batch_size, n - start);
      std::vector<double> xb;
      xb.reserve(count * d);
      std::vector<Label> yb(count);
      for (std::size_t j = 0; j < count; ++j) {
        const auto row = dataset.points.row(order[start + j]);
        xb.insert(xb.end(), row.begin(), row.end());
        yb[j] = dataset.labels[order[start + j]];
      }
      const Tensor natural = Tensor::matrix(count, d, std::move(xb));

      Tensor inputs = natural;
      std::vector<double> weights(count, 1.0);
      if (config.method != TrainMethod::erm) {
        AttackConfig inner = *config.inner_attack;
        inner.seed = batch_seed(config.seed, epoch, batch);
        switch (config.method) {
          case TrainMethod::at:
            inputs = pgd_attack(out.params, natural, yb, inner, dataset.domain).adversarial;
            break;
          case TrainMethod::fat:
            inputs = friendly_adversarial_search(out.params, natural, yb, inner, config.fat_slack, dataset.domain);
            break;
          case TrainMethod::gairat: {
            std::optional<std::size_t> slack;
            if (config.gairat_friendly_crafting) slack = config.fat_slack;
            auto crafted = detail::run_trajectories(out.params, natural, yb, inner, dataset.domain, slack);
            inputs = config.gairat_friendly_crafting ? std::move(crafted.friendly)
                                                     : std::move(crafted.result.adversarial);
            for (const std::size_t k : crafted.result.kappa) ++record.kappa_histogram[k];
            if (epoch >= config.burn_in_epochs) {
              weights = compute_weights(crafted.result.kappa, inner_steps, *config.omega_lambda).weights;
            }
            break;
          }
          case TrainMethod::erm:
            break;
        }
      }

      Tape tape;
      const TapedForward fwd = forward_on_tape(tape, out.params, inputs, TrackGradients{.params = true, .input = false});
      const Var losses = tape.scaled_softmax_cross_entropy(fwd.logits, yb, 1.0);
      const Var loss = tape.weighted_mean(losses, weights);
      const Gradient grad = tape.backward(loss);
      out.params = sgd_step(out.params, parameter_gradients(fwd, grad), config.learning_rate);
      loss_sum += tape.value(loss)[0] * static_cast<double>(count);
    }

    record.mean_loss = n > 0 ? loss_sum / static_cast<double>(n) : 0.0;
    record.natural_accuracy = accuracy(out.params, dataset);
    out.history.epochs.push_back(std::move(record));
  }
  return out;
}

std::string serialize_history_csv(const TrainHistory& history) {
  std::size_t bins = 0;
  for (const auto& rec : history.epochs) bins = std::max(bins, rec.kappa_histogram.size());
  std::string out = "epoch,loss,nat_acc";
  for (std::size_t k = 0; k < bins; ++k) out += ",kappa_" + std::to_string(k);
  out += "\n";
  for (const auto& rec : history.epochs) {
    out += std::to_string(rec.epoch) + "," + format_double(rec.mean_loss) + "," + format_double(rec.natural_accuracy);
    for (std::size_t k = 0; k < bins; ++k) {
      out += "," + std::to_string(k < rec.kappa_histogram.size() ? rec.kappa_histogram[k] : 0);
    }
    out += "\n";
  }
  return out;
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_history_csv(history));
}

}  // namespace advlab
