#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advlab/attacks.hpp"
#include "advlab/datasets.hpp"
#include "advlab/model.hpp"

namespace advlab {

enum class TrainMethod { erm, at, fat, gairat };

std::string to_string(TrainMethod method);
TrainMethod parse_train_method(const std::string& name);

struct TrainConfig {
  TrainMethod method = TrainMethod::erm;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  // Crafting attack for AT, FAT and GAIRAT. Its alpha must stay 1 and its
  // seed is ignored; per-batch seeds are derived from `seed`.
  std::optional<AttackConfig> inner_attack;
  std::size_t burn_in_epochs = 0;     // GAIRAT: epochs with all weights fixed to 1
  std::optional<double> omega_lambda;  // GAIRAT: shape parameter of the weight curve
  std::size_t fat_slack = 0;           // FAT: extra iterations after the first misclassification
  bool gairat_friendly_crafting = false;  // GAIRAT: craft with the FAT search instead of plain PGD

  void validate() const;
};

struct WeightAssignment {
  std::vector<double> weights;
};

// raw_i = (1 + tanh(lambda + 5 (1 - 2 kappa_i / K))) / 2, rescaled to mean 1.
WeightAssignment compute_weights(std::span<const std::size_t> kappa, std::size_t max_steps, double omega_lambda);

// theta - lr * g, layer by layer.
MlpParams sgd_step(const MlpParams& params, std::span<const Layer> grads, double learning_rate);

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double natural_accuracy = 0.0;
  std::vector<std::size_t> kappa_histogram;  // GAIRAT only, bins 0..K

  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  bool operator==(const TrainHistory&) const = default;
};

struct TrainOutcome {
  MlpParams params;
  TrainHistory history;
};

TrainOutcome train(const MlpConfig& model_config, const Dataset& dataset, const TrainConfig& config);

// epoch,loss,nat_acc[,kappa_0..kappa_K]
std::string serialize_history_csv(const TrainHistory& history);
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace advlab
