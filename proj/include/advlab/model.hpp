#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "advlab/tensor.hpp"

namespace advlab {

struct MlpConfig {
  // Input dimension, hidden widths, number of classes.
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::relu;
  std::uint64_t init_seed = 0;

  void validate() const;
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }

  bool operator==(const MlpConfig&) const = default;
};

std::string describe(const MlpConfig& config);

struct Layer {
  Tensor weight;  // [fan_in x fan_out]
  Tensor bias;    // [fan_out]

  bool operator==(const Layer&) const = default;
};

struct MlpParams {
  MlpConfig config;
  std::vector<Layer> layers;

  // Shapes must agree with `config`.
  void validate() const;

  bool operator==(const MlpParams&) const = default;
};

// Glorot-uniform weights from a seeded mt19937_64, zero biases.
MlpParams init_params(const MlpConfig& config);

Tensor forward_logits(const MlpParams& params, const Tensor& x);

std::vector<Label> predict(const MlpParams& params, const Tensor& x);

// Which tape leaves a taped forward pass should track.
struct TrackGradients {
  bool params = false;
  bool input = false;
};

struct TapedForward {
  Var input;
  std::vector<Var> weights;
  std::vector<Var> biases;
  Var logits;
};

TapedForward forward_on_tape(Tape& tape, const MlpParams& params, const Tensor& x, TrackGradients track);

// Per-layer parameter gradients from a tape gradient, laid out like MlpParams::layers.
std::vector<Layer> parameter_gradients(const TapedForward& forward, const Gradient& gradient);

struct CheckpointMetadata {
  std::string method = "none";
  std::uint64_t seed = 0;
  std::size_t epochs = 0;

  bool operator==(const CheckpointMetadata&) const = default;
};

struct Checkpoint {
  MlpParams params;
  CheckpointMetadata metadata;
};

std::string serialize_checkpoint(const MlpParams& params, const CheckpointMetadata& metadata);
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const MlpParams& params, const CheckpointMetadata& metadata,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Also throws SchemaError when the stored config differs from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const MlpConfig& expected);

}  // namespace advlab
