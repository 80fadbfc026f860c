#include "advlab/model.hpp"

#include <cmath>
#include <random>

#include "advlab/errors.hpp"
#include "advlab/text_io.hpp"

namespace advlab {

void MlpConfig::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("an MLP needs at least an input and an output size");
  for (const std::size_t s : layer_sizes) {
    if (s == 0) throw ConfigError("layer sizes must be positive");
  }
  if (layer_sizes.back() < 2) throw ConfigError("need at least 2 output classes");
}

std::string describe(const MlpConfig& config) {
  std::string out;
  for (std::size_t i = 0; i < config.layer_sizes.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(config.layer_sizes[i]);
  }
  return "layers=" + out + " activation=" + to_string(config.activation) +
         " init_seed=" + std::to_string(config.init_seed);
}

void MlpParams::validate() const {
  config.validate();
  if (layers.size() != config.num_layers()) {
    throw SchemaError("expected " + std::to_string(config.num_layers()) + " layers, got " +
                      std::to_string(layers.size()));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Shape want_w{config.layer_sizes[l], config.layer_sizes[l + 1]};
    const Shape want_b{config.layer_sizes[l + 1]};
    if (layers[l].weight.shape() != want_w || layers[l].bias.shape() != want_b) {
      throw SchemaError("layer " + std::to_string(l) + " has weight " +
                        shape_to_string(layers[l].weight.shape()) + " and bias " +
                        shape_to_string(layers[l].bias.shape()) + ", config wants " +
                        shape_to_string(want_w) + " and " + shape_to_string(want_b));
    }
  }
}

MlpParams init_params(const MlpConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.init_seed);
  MlpParams params{.config = config, .layers = {}};
  for (std::size_t l = 0; l < config.num_layers(); ++l) {
    const std::size_t fan_in = config.layer_sizes[l];
    const std::size_t fan_out = config.layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = dist(rng);
    params.layers.push_back(Layer{Tensor::matrix(fan_in, fan_out, std::move(w)), Tensor::zeros({fan_out})});
  }
  return params;
}

namespace {

void check_input(const MlpParams& params, const Tensor& x) {
  if (x.rank() != 2 || x.shape()[1] != params.config.input_dim()) {
    throw DimensionError("model expects inputs [n x " + std::to_string(params.config.input_dim()) +
                         "], got " + shape_to_string(x.shape()));
  }
}

}  // namespace

Tensor forward_logits(const MlpParams& params, const Tensor& x) {
  check_input(params, x);
  Tensor h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    h = linear(h, params.layers[l].weight, params.layers[l].bias);
    if (l + 1 < params.layers.size()) h = activate(h, params.config.activation);
  }
  return h;
}

std::vector<Label> predict(const MlpParams& params, const Tensor& x) {
  return argmax_rows(forward_logits(params, x));
}

TapedForward forward_on_tape(Tape& tape, const MlpParams& params, const Tensor& x, TrackGradients track) {
  check_input(params, x);
  TapedForward out;
  out.input = track.input ? tape.leaf(x) : tape.constant(x);
  Var h = out.input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const Layer& layer = params.layers[l];
    const Var w = track.params ? tape.leaf(layer.weight) : tape.constant(layer.weight);
    const Var b = track.params ? tape.leaf(layer.bias) : tape.constant(layer.bias);
    out.weights.push_back(w);
    out.biases.push_back(b);
    h = tape.linear(h, w, b);
    if (l + 1 < params.layers.size()) h = tape.activation(h, params.config.activation);
  }
  out.logits = h;
  return out;
}

std::vector<Layer> parameter_gradients(const TapedForward& forward, const Gradient& gradient) {
  std::vector<Layer> grads;
  grads.reserve(forward.weights.size());
  for (std::size_t l = 0; l < forward.weights.size(); ++l) {
    grads.push_back(Layer{gradient[forward.weights[l]], gradient[forward.biases[l]]});
  }
  return grads;
}

// Checkpoint text format:
//   MLPCKPT v1
//   config layers=2,32,2 activation=relu init_seed=7
//   meta method=gairat seed=7 epochs=60
//   weight0 2x32 <values...>
//   bias0 32 <values...>
//   ...

std::string serialize_checkpoint(const MlpParams& params, const CheckpointMetadata& metadata) {
  params.validate();
  std::string out = "MLPCKPT v1\n";
  out += "config " + describe(params.config) + "\n";
  out += "meta method=" + metadata.method + " seed=" + std::to_string(metadata.seed) +
         " epochs=" + std::to_string(metadata.epochs) + "\n";
  const auto emit = [&out](const std::string& name, const Tensor& t) {
    out += name + " ";
    for (std::size_t i = 0; i < t.shape().size(); ++i) {
      if (i > 0) out += "x";
      out += std::to_string(t.shape()[i]);
    }
    for (const double v : t.data()) out += " " + format_double(v);
    out += "\n";
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    emit("weight" + std::to_string(l), params.layers[l].weight);
    emit("bias" + std::to_string(l), params.layers[l].bias);
  }
  return out;
}

namespace {

// Walks the text line by line, tracking byte offsets for error messages.
class LineCursor {
 public:
  explicit LineCursor(std::string_view text) : text_(text) {}

  bool done() const { return pos_ >= text_.size(); }
  std::size_t offset() const { return line_start_; }

  std::string_view next() {
    line_start_ = pos_;
    const std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) {
      truncated_ = true;
      pos_ = text_.size();
      return text_.substr(line_start_);
    }
    pos_ = end + 1;
    return text_.substr(line_start_, end - line_start_);
  }

  // True when the last line returned had no terminating newline.
  bool truncated() const { return truncated_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  bool truncated_ = false;
};

[[noreturn]] void fail_at(std::size_t offset, const std::string& what) {
  throw ParseError(ParseError::Unit::byte_offset, offset, what);
}

// Parses "key=value" tokens from a space-separated line after its tag.
std::vector<std::pair<std::string_view, std::string_view>> key_values(std::string_view line,
                                                                      std::size_t offset) {
  std::vector<std::pair<std::string_view, std::string_view>> out;
  auto tokens = split(line, ' ');
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tokens[i].empty()) continue;
    const std::size_t eq = tokens[i].find('=');
    if (eq == std::string_view::npos) fail_at(offset, "expected key=value, got '" + std::string(tokens[i]) + "'");
    out.emplace_back(tokens[i].substr(0, eq), tokens[i].substr(eq + 1));
  }
  return out;
}

}  // namespace

Checkpoint parse_checkpoint(std::string_view text) {
  LineCursor cursor(text);
  if (cursor.done() || trim(cursor.next()) != "MLPCKPT v1") fail_at(0, "missing 'MLPCKPT v1' header");

  Checkpoint ckpt;
  MlpConfig& config = ckpt.params.config;

  std::string_view line = cursor.done() ? std::string_view{} : cursor.next();
  if (!line.starts_with("config ")) fail_at(cursor.offset(), "expected config line");
  bool have_layers = false;
  for (const auto& [key, value] : key_values(line, cursor.offset())) {
    if (key == "layers") {
      for (const auto part : split(value, ',')) {
        const auto size = parse_uint(part);
        if (!size) fail_at(cursor.offset(), "bad layer size '" + std::string(part) + "'");
        config.layer_sizes.push_back(*size);
      }
      have_layers = true;
    } else if (key == "activation") {
      try {
        config.activation = parse_activation(std::string(value));
      } catch (const ParameterError& e) {
        fail_at(cursor.offset(), e.what());
      }
    } else if (key == "init_seed") {
      const auto seed = parse_uint(value);
      if (!seed) fail_at(cursor.offset(), "bad init_seed");
      config.init_seed = *seed;
    }
  }
  if (!have_layers) fail_at(cursor.offset(), "config line lacks layers=");
  try {
    config.validate();
  } catch (const ConfigError& e) {
    fail_at(cursor.offset(), e.what());
  }

  line = cursor.done() ? std::string_view{} : cursor.next();
  if (!line.starts_with("meta")) fail_at(cursor.offset(), "expected meta line");
  for (const auto& [key, value] : key_values(line, cursor.offset())) {
    if (key == "method") {
      ckpt.metadata.method = std::string(value);
    } else if (key == "seed" || key == "epochs") {
      const auto v = parse_uint(value);
      if (!v) fail_at(cursor.offset(), "bad " + std::string(key));
      if (key == "seed") ckpt.metadata.seed = *v;
      else ckpt.metadata.epochs = *v;
    }
  }

  const std::size_t layer_count = config.num_layers();
  for (std::size_t l = 0; l < 2 * layer_count; ++l) {
    const bool is_weight = l % 2 == 0;
    const std::size_t index = l / 2;
    const std::string name = (is_weight ? "weight" : "bias") + std::to_string(index);
    if (cursor.done()) fail_at(text.size(), "file ends before tensor " + name);
    line = cursor.next();
    const std::size_t offset = cursor.offset();
    if (cursor.truncated()) fail_at(offset, "tensor line " + name + " is not newline-terminated (truncated file?)");
    const auto tokens = split(trim(line), ' ');
    if (tokens.size() < 2 || tokens[0] != name) fail_at(offset, "expected tensor " + name);

    Shape declared;
    for (const auto dim : split(tokens[1], 'x')) {
      const auto v = parse_uint(dim);
      if (!v || *v == 0) fail_at(offset, "bad shape '" + std::string(tokens[1]) + "'");
      declared.push_back(*v);
    }
    const Shape expected = is_weight ? Shape{config.layer_sizes[index], config.layer_sizes[index + 1]}
                                     : Shape{config.layer_sizes[index + 1]};
    if (declared != expected) {
      throw SchemaError("tensor " + name + " declares shape " + shape_to_string(declared) +
                        " but config " + describe(config) + " implies " + shape_to_string(expected));
    }
    std::vector<double> values;
    values.reserve(tokens.size() - 2);
    std::size_t column = static_cast<std::size_t>(tokens[1].data() + tokens[1].size() - line.data());
    for (std::size_t t = 2; t < tokens.size(); ++t) {
      const auto v = parse_double(tokens[t]);
      column = static_cast<std::size_t>(tokens[t].data() - line.data());
      if (!v) fail_at(offset + column, "bad number '" + std::string(tokens[t]) + "' in " + name);
      values.push_back(*v);
    }
    const std::size_t want = is_weight ? expected[0] * expected[1] : expected[0];
    if (values.size() != want) {
      fail_at(offset, "tensor " + name + " has " + std::to_string(values.size()) + " values, expected " +
                          std::to_string(want));
    }
    Tensor t(declared, std::move(values));
    if (is_weight) {
      ckpt.params.layers.push_back(Layer{std::move(t), Tensor{}});
    } else {
      ckpt.params.layers.back().bias = std::move(t);
    }
  }
  while (!cursor.done()) {
    const auto rest = cursor.next();
    if (!trim(rest).empty()) fail_at(cursor.offset(), "unexpected trailing content");
  }
  ckpt.params.validate();
  return ckpt;
}

void save_checkpoint(const MlpParams& params, const CheckpointMetadata& metadata,
                     const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(params, metadata));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

Checkpoint load_checkpoint(const std::filesystem::path& path, const MlpConfig& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!(ckpt.params.config == expected)) {
    throw SchemaError("checkpoint config {" + describe(ckpt.params.config) + "} does not match expected {" +
                      describe(expected) + "}");
  }
  return ckpt;
}

}  // namespace advlab
