#include "advlab/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "advlab/attacks.hpp"
#include "advlab/config.hpp"
#include "advlab/datasets.hpp"
#include "advlab/errors.hpp"
#include "advlab/eval.hpp"
#include "advlab/model.hpp"
#include "advlab/text_io.hpp"
#include "advlab/training.hpp"

namespace advlab {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitViolation = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Relative output paths land under $ADVLAB_OUTPUT_DIR when it is set.
std::filesystem::path output_path(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("ADVLAB_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
      std::filesystem::create_directories(dir);
      return std::filesystem::path(dir) / p;
    }
  }
  return p;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string to_text(double v) { return format_double(v); }
std::string to_text(std::size_t v) { return std::to_string(v); }
std::string to_text(const std::string& v) { return v; }
std::string to_text(bool v) { return v ? "true" : "false"; }

void from_text(const std::string& key, const std::string& value, double& target) {
  const auto v = parse_double(value);
  if (!v) throw ConfigError(key + ": expected a number, got '" + value + "'");
  target = *v;
}
void from_text(const std::string& key, const std::string& value, std::size_t& target) {
  const auto v = parse_uint(value);
  if (!v) throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  target = *v;
}
void from_text(const std::string&, const std::string& value, std::string& target) { target = value; }
void from_text(const std::string& key, const std::string& value, bool& target) {
  if (value == "true" || value == "1") target = true;
  else if (value == "false" || value == "0") target = false;
  else throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

// Ties a CLI flag to a `[section] key` in the experiment config file. Flags
// given on the command line win over the file; the file wins over defaults.
class Options {
 public:
  explicit Options(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& flag, T& target, const std::string& help, const std::string& section,
                   const std::string& key) {
    CLI::Option* opt = app_->add_option(flag, target, help);
    if constexpr (!std::is_same_v<T, bool>) opt->capture_default_str();
    bindings_.push_back(Binding{
        opt, section, key,
        [&target, section, key](const std::string& value) { from_text(section + "." + key, value, target); },
        [&target] { return to_text(target); }});
    return opt;
  }

  CLI::Option* config_option() {
    return app_->add_option("--config", config_path_, "experiment config file ([data], [train], [attack.<name>], [sweep])");
  }

  void apply_file() {
    if (config_path_.empty()) return;
    file_ = load_experiment_config(config_path_);
    for (const auto& b : bindings_) {
      if (b.option->count() > 0) continue;
      const ConfigSection* section = file_.find(b.section);
      if (section == nullptr) continue;
      if (const auto it = section->find(b.key); it != section->end()) b.set(it->second);
    }
  }

  bool given(const CLI::Option* opt) const {
    if (opt->count() > 0) return true;
    for (const auto& b : bindings_) {
      if (b.option != opt) continue;
      const ConfigSection* section = file_.find(b.section);
      return section != nullptr && section->count(b.key) > 0;
    }
    return false;
  }

  const ExperimentConfig& file() const { return file_; }

  // Options that must come from the command line or the config file.
  void require(CLI::Option* opt) { required_.push_back(opt); }

  void check_required() const {
    for (const CLI::Option* opt : required_) {
      if (!given(opt)) throw UsageError(opt->get_name() + " is required (on the command line or in --config)");
    }
  }

  std::vector<std::string> resolved() const {
    std::vector<std::string> lines;
    if (!config_path_.empty()) lines.push_back("config_file = " + config_path_);
    for (const auto& b : bindings_) {
      const auto unset = unset_label_.find(b.option);
      const bool placeholder = unset != unset_label_.end() && !given(b.option);
      lines.push_back(b.section + "." + b.key + " = " + (placeholder ? unset->second : b.get()));
    }
    return lines;
  }

  // For flags whose default is a placeholder resolved elsewhere: `label` is
  // echoed instead of the placeholder value when the flag is not given.
  CLI::Option* placeholder(CLI::Option* opt, std::string label) {
    unset_label_[opt] = std::move(label);
    return opt;
  }

 private:
  struct Binding {
    CLI::Option* option;
    std::string section;
    std::string key;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };

  CLI::App* app_;
  std::vector<Binding> bindings_;
  std::vector<CLI::Option*> required_;
  std::map<const CLI::Option*, std::string> unset_label_;
  std::string config_path_;
  ExperimentConfig file_;
};

void print_resolved(std::ostream& out, const std::vector<std::string>& lines) {
  out << "# resolved configuration\n";
  for (const auto& line : lines) out << "#   " << line << "\n";
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  if (trim(text).empty()) return out;
  for (const auto part : split(text, ',')) {
    const auto v = parse_uint(part);
    if (!v || *v == 0) throw ConfigError(what + ": bad size '" + std::string(part) + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<double> parse_double_list(std::string_view text, char separator, const std::string& what) {
  std::vector<double> out;
  for (const auto part : split(text, separator)) {
    const auto v = parse_double(part);
    if (!v) throw ConfigError(what + ": bad number '" + std::string(part) + "'");
    out.push_back(*v);
  }
  return out;
}

struct LoadedModel {
  Checkpoint checkpoint;
  std::string hash;
};

LoadedModel load_model(const std::string& path) {
  const std::string text = read_file(path);
  return LoadedModel{parse_checkpoint(text), fnv1a_hex(text)};
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
  std::string kind = "two-moons";
  std::size_t n = 1000;
  std::size_t seed = 0;
  double noise = 0.1;
  double sigma = 0.05;
  std::string centers = "0.25,0.25;0.75,0.75";
  std::string radii = "0.5,1.0";
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a, const Options& opts, std::ostream& out) {
  Dataset ds;
  if (a.kind == "two-moons") {
    ds = gen_two_moons(a.n, a.noise, a.seed);
  } else if (a.kind == "rings") {
    const auto radii = parse_double_list(a.radii, ',', "radii");
    if (radii.size() != 2) throw ConfigError("radii needs two values");
    ds = gen_rings(a.n, radii[0], radii[1], a.noise, a.seed);
  } else if (a.kind == "blobs") {
    std::vector<std::vector<double>> centers;
    for (const auto c : split(a.centers, ';')) centers.push_back(parse_double_list(c, ',', "centers"));
    ds = gen_gaussian_blobs(a.n, centers, a.sigma, a.seed);
  } else {
    throw ConfigError("unknown dataset kind '" + a.kind + "' (expected two-moons, blobs or rings)");
  }
  print_resolved(out, opts.resolved());
  const auto path = output_path(a.out);
  save_csv(ds, path);
  out << "wrote " << ds.size() << " rows to " << path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string method = "erm";
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  double lr = 0.1;
  std::size_t seed = 0;
  std::string hidden = "32,32";
  std::string activation = "relu";
  double eps = 0.031;
  std::size_t inner_steps = 10;
  double inner_step_size = 0.0;  // 0 means eps / 4
  bool inner_random_start = true;
  std::size_t burn_in = 0;
  double omega_lambda = 0.0;
  std::size_t fat_slack = 0;
  bool gairat_friendly = false;
  std::string out;
  std::string history;
};

struct TrainFlags {
  CLI::Option* burn_in = nullptr;
  CLI::Option* inner_step_size = nullptr;
};

int cmd_train(TrainArgs a, const TrainFlags& flags, const Options& opts, std::ostream& out) {
  const Dataset ds = load_csv(a.data);
  MlpConfig model_config;
  model_config.layer_sizes.push_back(ds.dim());
  for (const std::size_t w : parse_size_list(a.hidden, "hidden")) model_config.layer_sizes.push_back(w);
  model_config.layer_sizes.push_back(static_cast<std::size_t>(ds.num_classes));
  model_config.activation = parse_activation(a.activation);
  model_config.init_seed = a.seed;

  TrainConfig config;
  config.method = parse_train_method(a.method);
  config.epochs = a.epochs;
  config.batch_size = a.batch_size;
  config.learning_rate = a.lr;
  config.seed = a.seed;
  config.fat_slack = a.fat_slack;
  config.gairat_friendly_crafting = a.gairat_friendly;
  // Default burn-in: 30% of the epochs.
  config.burn_in_epochs = opts.given(flags.burn_in) ? a.burn_in : (a.epochs * 3) / 10;
  if (config.method == TrainMethod::gairat) config.omega_lambda = a.omega_lambda;
  if (config.method != TrainMethod::erm) {
    AttackConfig inner;
    inner.epsilon = a.eps;
    inner.steps = a.inner_steps;
    inner.step_size = opts.given(flags.inner_step_size) ? a.inner_step_size : a.eps / 4;
    inner.restarts = 1;
    inner.random_start = a.inner_random_start;
    config.inner_attack = inner;
  }

  print_resolved(out, opts.resolved());
  out << "#   model = " << describe(model_config) << "\n";
  out << "#   train.resolved_burn_in = " << config.burn_in_epochs << "\n";
  if (config.inner_attack) {
    out << "#   train.resolved_inner_step_size = " << format_double(config.inner_attack->step_size) << "\n";
  }

  const TrainOutcome result = train(model_config, ds, config);
  const auto ckpt_path = output_path(a.out);
  save_checkpoint(result.params,
                  CheckpointMetadata{.method = to_string(config.method), .seed = a.seed, .epochs = a.epochs},
                  ckpt_path);
  const auto history_path = output_path(a.history.empty() ? a.out + ".history.csv" : a.history);
  write_history_csv(result.history, history_path);
  if (!result.history.epochs.empty()) {
    const auto& last = result.history.epochs.back();
    out << "final epoch " << last.epoch << ": loss " << format_double(last.mean_loss) << ", natural accuracy "
        << format_double(last.natural_accuracy) << "\n";
  }
  out << "wrote " << ckpt_path.string() << " and " << history_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- attack / eval / sweep

struct AttackArgs {
  std::string model;
  std::string data;
  std::string attack = "pgd20";
  double eps = 0.031;
  double alpha = 1.0;
  std::size_t seed = 0;
  std::size_t steps = 0;
  double step_size = 0.0;
  std::size_t restarts = 0;
  std::string verdict;
  std::string alpha_grid = "1e-2:1e2:9";
  std::string attacks = "pgd20,pgdplus";
  std::string out;
};

struct AttackFlags {
  CLI::Option* steps = nullptr;
  CLI::Option* step_size = nullptr;
  CLI::Option* restarts = nullptr;
  CLI::Option* verdict = nullptr;
};

// Preset, then the file's [attack.<name>] section, then explicit flags.
AttackConfig resolve_attack(const std::string& name, const AttackArgs& a, const AttackFlags& flags,
                            const Options& opts) {
  AttackConfig config = attack_preset(name, a.eps);
  if (const ConfigSection* section = opts.file().find("attack." + name)) {
    config = attack_config_from_section(*section, config);
  }
  config.epsilon = a.eps;
  config.seed = a.seed;
  if (flags.steps && opts.given(flags.steps)) config.steps = a.steps;
  if (flags.step_size && opts.given(flags.step_size)) config.step_size = a.step_size;
  if (flags.restarts && opts.given(flags.restarts)) config.restarts = a.restarts;
  if (flags.verdict && opts.given(flags.verdict)) config.verdict = parse_verdict(a.verdict);
  config.validate();
  return config;
}

std::vector<std::string> attack_lines(const std::string& name, const AttackConfig& config) {
  std::vector<std::string> lines;
  const std::string text = attack_config_to_text(config);
  for (const auto line : split(text, '\n')) {
    if (!line.empty()) lines.push_back("attack." + name + "." + std::string(line));
  }
  return lines;
}

EvalReport base_report(const AttackArgs& a, const LoadedModel& model, const Dataset& ds) {
  EvalReport report;
  report.model_id = a.model;
  report.checkpoint_hash = model.hash;
  report.dataset_id = a.data;
  report.dataset_hash = dataset_hash(ds);
  report.dataset_seed = ds.seed;
  report.natural_accuracy = eval_natural(model.checkpoint.params, ds);
  report.timestamp = utc_timestamp();
  return report;
}

void emit_report(const EvalReport& report, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << serialize_report(report);
    return;
  }
  const auto p = output_path(path);
  write_report(report, p);
  out << "wrote " << p.string() << "\n";
}

int cmd_attack(const AttackArgs& a, const AttackFlags& flags, const Options& opts, std::ostream& out) {
  const LoadedModel model = load_model(a.model);
  const Dataset ds = load_csv(a.data);
  AttackConfig config = resolve_attack(a.attack, a, flags, opts);
  config.alpha = a.alpha;
  config.validate();

  auto lines = opts.resolved();
  for (auto& line : attack_lines(a.attack, config)) lines.push_back(std::move(line));
  print_resolved(out, lines);

  const AttackResult result = pgd_attack(model.checkpoint.params, ds.points, ds.labels, config, ds.domain);
  std::size_t hits = 0;
  for (const bool ok : result.final_correct) hits += ok;
  out << "natural accuracy " << format_double(eval_natural(model.checkpoint.params, ds)) << "\n";
  out << "robust accuracy (" << a.attack << ", alpha " << format_double(config.alpha) << ", "
      << to_string(config.verdict) << ") "
      << format_double(static_cast<double>(hits) / static_cast<double>(ds.size())) << "\n";

  if (!a.out.empty()) {
    Dataset adversarial = ds;
    adversarial.points = result.adversarial;
    adversarial.generator = ds.generator + "+" + a.attack;
    const auto p = output_path(a.out);
    save_csv(adversarial, p);
    out << "wrote adversarial points to " << p.string() << "\n";
  }
  return kExitOk;
}

int cmd_eval(const AttackArgs& a, const AttackFlags& flags, const Options& opts, std::ostream& out) {
  const LoadedModel model = load_model(a.model);
  const Dataset ds = load_csv(a.data);
  EvalReport report = base_report(a, model, ds);
  report.config_lines = opts.resolved();
  for (const auto name_view : split(a.attacks, ',')) {
    const std::string name(trim(name_view));
    AttackConfig config = resolve_attack(name, a, flags, opts);
    for (auto& line : attack_lines(name, config)) report.config_lines.push_back(std::move(line));
    report.rows.push_back(ReportRow{.attack = name,
                                    .alpha = config.alpha,
                                    .robust_accuracy = eval_robust(model.checkpoint.params, ds, config, config.verdict),
                                    .n = ds.size()});
  }
  print_resolved(out, report.config_lines);
  emit_report(report, a.out, out);
  return kExitOk;
}

int cmd_sweep(const AttackArgs& a, const AttackFlags& flags, const Options& opts, std::ostream& out) {
  const LoadedModel model = load_model(a.model);
  const Dataset ds = load_csv(a.data);
  EvalReport report = base_report(a, model, ds);
  report.config_lines = opts.resolved();
  const std::vector<double> grid = parse_alpha_grid(opts.file().get("sweep", "alpha_grid", a.alpha_grid));
  for (const auto name_view : split(a.attack, ',')) {
    const std::string name(trim(name_view));
    SweepConfig sweep{.alpha_grid = grid, .base_attack = resolve_attack(name, a, flags, opts)};
    sweep.validate();
    for (auto& line : attack_lines(name, sweep.base_attack)) report.config_lines.push_back(std::move(line));
    auto rows = alpha_sweep(model.checkpoint.params, ds, sweep, sweep.base_attack.verdict, name);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    report.worst_alpha[name] = *worst_alpha(report.rows, name);
  }
  print_resolved(out, report.config_lines);
  emit_report(report, a.out, out);
  return kExitOk;
}

// ---------------------------------------------------------------- oracle-check

struct OracleArgs {
  std::string model;
  std::string data;
  double eps = 0.1;
  std::size_t grid = 51;
  std::size_t steps = 50;
  std::size_t restarts = 5;
  std::size_t seed = 0;
  std::size_t limit = 0;
};

int cmd_oracle_check(const OracleArgs& a, const Options& opts, std::ostream& out) {
  const LoadedModel model = load_model(a.model);
  const Dataset ds = load_csv(a.data);
  AttackConfig config{.epsilon = a.eps,
                      .steps = a.steps,
                      .step_size = a.eps / 10,
                      .restarts = a.restarts,
                      .alpha = 1.0,
                      .random_start = true,
                      .clip_to_domain = true,
                      .verdict = Verdict::all_iterates,
                      .seed = a.seed};
  print_resolved(out, opts.resolved());
  const std::size_t count = a.limit == 0 ? ds.size() : std::min(a.limit, ds.size());
  std::size_t pgd_broken = 0;
  std::size_t grid_broken = 0;
  std::size_t violations = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto row = ds.points.row(i);
    const Tensor x0 = Tensor::matrix(1, ds.dim(), std::vector<double>(row.begin(), row.end()));
    const std::vector<Label> y{ds.labels[i]};
    const bool pgd_ok = pgd_attack(model.checkpoint.params, x0, y, config, ds.domain).final_correct[0];
    const bool grid_ok = brute_force_attack(model.checkpoint.params, row, ds.labels[i], a.eps, a.grid, ds.domain);
    pgd_broken += !pgd_ok;
    grid_broken += !grid_ok;
    if (!pgd_ok && grid_ok) {
      ++violations;
      out << "violation at row " << i << "\n";
    }
  }
  out << "checked " << count << " points: pgd found " << pgd_broken << " misclassifications, grid found "
      << grid_broken << ", violations " << violations << "\n";
  return violations == 0 ? kExitOk : kExitViolation;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::vector<std::string>& inputs, std::ostream& out) {
  for (const auto& path : inputs) {
    const EvalReport report = read_report(path);
    out << path << "\n";
    out << "  model " << report.model_id << " (" << report.checkpoint_hash << "), dataset " << report.dataset_id
        << "\n";
    if (report.natural_accuracy) out << "  natural accuracy " << format_double(*report.natural_accuracy) << "\n";
    for (const auto& row : report.rows) {
      out << "  " << std::left << std::setw(10) << row.attack << " alpha " << std::setw(22) << format_double(row.alpha)
          << " robust " << format_double(row.robust_accuracy) << " (n=" << row.n << ")\n";
    }
    for (const auto& [attack, alpha] : report.worst_alpha) {
      out << "  worst alpha for " << attack << ": " << format_double(alpha);
      const auto at_one = accuracy_at(report.rows, attack, 1.0);
      const auto at_worst = accuracy_at(report.rows, attack, alpha);
      if (at_one && at_worst) out << ", gap vs alpha=1: " << format_double(*at_one - *at_worst);
      out << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"advlab: adversarial training and logit-scaling evaluation on small MLPs"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
  Options gen_opts(gen_cmd);
  gen_opts.config_option();
  gen_opts.add("--kind", gen.kind, "two-moons | blobs | rings", "data", "kind");
  gen_opts.add("--n", gen.n, "number of points", "data", "n");
  gen_opts.add("--seed", gen.seed, "generator seed", "data", "seed");
  gen_opts.add("--noise", gen.noise, "noise sigma (two-moons, rings)", "data", "noise");
  gen_opts.add("--sigma", gen.sigma, "blob sigma", "data", "sigma");
  gen_opts.add("--centers", gen.centers, "blob centers 'x,y;x,y;...'", "data", "centers");
  gen_opts.add("--radii", gen.radii, "ring radii 'inner,outer'", "data", "radii");
  gen_opts.require(gen_opts.add("--out", gen.out, "output CSV", "data", "out"));

  TrainArgs tr;
  TrainFlags tr_flags;
  auto* train_cmd = app.add_subcommand("train", "train an MLP (erm, at, fat, gairat)");
  Options train_opts(train_cmd);
  train_opts.config_option();
  train_opts.require(train_opts.add("--data", tr.data, "training CSV", "train", "data"));
  train_opts.add("--method", tr.method, "erm | at | fat | gairat", "train", "method");
  train_opts.add("--epochs", tr.epochs, "epochs", "train", "epochs");
  train_opts.add("--batch-size", tr.batch_size, "mini-batch size", "train", "batch_size");
  train_opts.add("--lr", tr.lr, "SGD learning rate", "train", "learning_rate");
  train_opts.add("--seed", tr.seed, "init/shuffle/attack seed", "train", "seed");
  train_opts.add("--hidden", tr.hidden, "hidden widths, comma separated", "train", "hidden");
  train_opts.add("--activation", tr.activation, "relu | tanh", "train", "activation");
  train_opts.add("--eps", tr.eps, "inner attack radius", "train", "epsilon");
  train_opts.add("--inner-steps", tr.inner_steps, "inner PGD iterations K", "train", "inner_steps");
  tr_flags.inner_step_size = train_opts.placeholder(
      train_opts.add("--inner-step-size", tr.inner_step_size, "inner PGD step (default eps/4)", "train", "inner_step_size"),
      "(derived: eps/4)");
  train_opts.add("--inner-random-start", tr.inner_random_start, "random start for crafting", "train", "inner_random_start");
  tr_flags.burn_in = train_opts.placeholder(
      train_opts.add("--burn-in", tr.burn_in, "GAIRAT burn-in epochs (default 30% of epochs)", "train", "burn_in"),
      "(derived: 30% of epochs)");
  train_opts.add("--omega-lambda", tr.omega_lambda, "GAIRAT weight shape parameter", "train", "omega_lambda");
  train_opts.add("--fat-slack", tr.fat_slack, "FAT extra steps after first misclassification", "train", "fat_slack");
  train_opts.add("--gairat-friendly", tr.gairat_friendly, "GAIRAT crafts with the FAT search", "train", "gairat_friendly");
  train_opts.require(train_opts.add("--out", tr.out, "checkpoint path", "train", "out"));
  train_opts.add("--history", tr.history, "history CSV (default <out>.history.csv)", "train", "history");

  const auto add_attack_flags = [](Options& opts, AttackArgs& a, AttackFlags& flags, const std::string& section) {
    opts.config_option();
    opts.require(opts.add("--model", a.model, "checkpoint", section, "model"));
    opts.require(opts.add("--data", a.data, "dataset CSV", section, "data"));
    opts.add("--eps", a.eps, "l-inf radius", section, "epsilon");
    opts.add("--seed", a.seed, "attack seed", section, "seed");
    flags.steps = opts.placeholder(opts.add("--steps", a.steps, "override preset iterations", section, "steps"),
                                   "(from preset)");
    flags.step_size = opts.placeholder(
        opts.add("--step-size", a.step_size, "override preset step size", section, "step_size"), "(from preset)");
    flags.restarts = opts.placeholder(
        opts.add("--restarts", a.restarts, "override preset restarts", section, "restarts"), "(from preset)");
    flags.verdict = opts.placeholder(
        opts.add("--verdict", a.verdict, "best_iterate | all_iterates", section, "verdict"), "(from preset)");
    opts.add("--out", a.out, "output path", section, "out");
  };

  AttackArgs atk;
  AttackFlags atk_flags;
  auto* attack_cmd = app.add_subcommand("attack", "run one attack and optionally save adversarial points");
  Options attack_opts(attack_cmd);
  add_attack_flags(attack_opts, atk, atk_flags, "attack");
  attack_opts.add("--attack", atk.attack, "pgd20 | pgdplus | pgd200", "attack", "preset");
  attack_opts.add("--alpha", atk.alpha, "logit scale used while crafting", "attack", "alpha");

  AttackArgs ev;
  AttackFlags ev_flags;
  auto* eval_cmd = app.add_subcommand("eval", "natural + robust accuracy report");
  Options eval_opts(eval_cmd);
  add_attack_flags(eval_opts, ev, ev_flags, "eval");
  eval_opts.add("--attacks", ev.attacks, "comma-separated presets", "eval", "attacks");

  AttackArgs sw;
  AttackFlags sw_flags;
  auto* sweep_cmd = app.add_subcommand("sweep", "robust accuracy across a logit-scale grid");
  Options sweep_opts(sweep_cmd);
  add_attack_flags(sweep_opts, sw, sw_flags, "sweep");
  sweep_opts.add("--attack", sw.attack, "preset(s), comma separated", "sweep", "attack");
  sweep_opts.add("--alpha-grid", sw.alpha_grid, "lo:hi:count (log spaced) or a,b,c", "sweep", "alpha_grid");

  OracleArgs orc;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "compare PGD against an exhaustive grid (d <= 3)");
  Options oracle_opts(oracle_cmd);
  oracle_opts.config_option();
  oracle_opts.require(oracle_opts.add("--model", orc.model, "checkpoint", "oracle", "model"));
  oracle_opts.require(oracle_opts.add("--data", orc.data, "dataset CSV", "oracle", "data"));
  oracle_opts.add("--eps", orc.eps, "l-inf radius", "oracle", "epsilon");
  oracle_opts.add("--grid", orc.grid, "grid points per axis", "oracle", "grid");
  oracle_opts.add("--steps", orc.steps, "PGD iterations (step eps/10)", "oracle", "steps");
  oracle_opts.add("--restarts", orc.restarts, "PGD restarts", "oracle", "restarts");
  oracle_opts.add("--seed", orc.seed, "attack seed", "oracle", "seed");
  oracle_opts.add("--limit", orc.limit, "check only the first N points (0 = all)", "oracle", "limit");

  std::vector<std::string> report_inputs;
  auto* report_cmd = app.add_subcommand("report", "summarize report CSVs");
  report_cmd->add_option("--in", report_inputs, "report CSV(s)")->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();  // program name
  try {
    app.parse(argv_rev);
  } catch (const CLI::Success&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) {
      gen_opts.apply_file();
      gen_opts.check_required();
      return cmd_gen_data(gen, gen_opts, out);
    }
    if (train_cmd->parsed()) {
      train_opts.apply_file();
      train_opts.check_required();
      return cmd_train(tr, tr_flags, train_opts, out);
    }
    if (attack_cmd->parsed()) {
      attack_opts.apply_file();
      attack_opts.check_required();
      return cmd_attack(atk, atk_flags, attack_opts, out);
    }
    if (eval_cmd->parsed()) {
      eval_opts.apply_file();
      eval_opts.check_required();
      return cmd_eval(ev, ev_flags, eval_opts, out);
    }
    if (sweep_cmd->parsed()) {
      sweep_opts.apply_file();
      sweep_opts.check_required();
      return cmd_sweep(sw, sw_flags, sweep_opts, out);
    }
    if (oracle_cmd->parsed()) {
      oracle_opts.apply_file();
      oracle_opts.check_required();
      return cmd_oracle_check(orc, oracle_opts, out);
    }
    if (report_cmd->parsed()) return cmd_report(report_inputs, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace advlab
