#include "advlab/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "advlab/errors.hpp"

namespace advlab {

std::string to_string(Verdict verdict) {
  return verdict == Verdict::best_iterate ? "best_iterate" : "all_iterates";
}

Verdict parse_verdict(const std::string& name) {
  if (name == "best_iterate") return Verdict::best_iterate;
  if (name == "all_iterates") return Verdict::all_iterates;
  throw ConfigError("unknown verdict '" + name + "' (expected best_iterate or all_iterates)");
}

void AttackConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("attack epsilon must be positive");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("attack step_size must be positive");
  if (steps < 1) throw ConfigError("attack steps must be at least 1");
  if (restarts < 1) throw ConfigError("attack restarts must be at least 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("attack alpha must be positive");
}

AttackConfig AttackConfig::pgd20(double epsilon) {
  return AttackConfig{.epsilon = epsilon,
                      .steps = 20,
                      .step_size = epsilon / 4,
                      .restarts = 1,
                      .alpha = 1.0,
                      .random_start = true,
                      .clip_to_domain = true,
                      .verdict = Verdict::best_iterate};
}

AttackConfig AttackConfig::pgd_plus(double epsilon) {
  return AttackConfig{.epsilon = epsilon,
                      .steps = 40,
                      .step_size = 0.01,
                      .restarts = 5,
                      .alpha = 1.0,
                      .random_start = true,
                      .clip_to_domain = true,
                      .verdict = Verdict::all_iterates};
}

AttackConfig AttackConfig::pgd200(double epsilon) {
  return AttackConfig{.epsilon = epsilon,
                      .steps = 200,
                      .step_size = epsilon / 100,
                      .restarts = 1,
                      .alpha = 1.0,
                      .random_start = true,
                      .clip_to_domain = true,
                      .verdict = Verdict::best_iterate};
}

CorrectTrace::CorrectTrace(std::size_t examples, std::size_t restarts, std::size_t steps)
    : examples_(examples), restarts_(restarts), iterates_(steps + 1), bits_(examples * restarts * (steps + 1), 0) {}

bool CorrectTrace::at(std::size_t example, std::size_t restart, std::size_t iterate) const {
  return bits_[(example * restarts_ + restart) * iterates_ + iterate] != 0;
}

void CorrectTrace::set(std::size_t example, std::size_t restart, std::size_t iterate, bool correct) {
  bits_[(example * restarts_ + restart) * iterates_ + iterate] = correct ? 1 : 0;
}

std::vector<bool> CorrectTrace::row(std::size_t example, std::size_t restart) const {
  std::vector<bool> out(iterates_);
  for (std::size_t t = 0; t < iterates_; ++t) out[t] = at(example, restart, t);
  return out;
}

Tensor project_linf(const Tensor& x, const Tensor& x0, double epsilon, const std::optional<DomainBox>& domain) {
  if (x.shape() != x0.shape()) {
    throw DimensionError("project_linf: x " + shape_to_string(x.shape()) + " vs x0 " + shape_to_string(x0.shape()));
  }
  if (domain && (x.rank() != 2 || x.cols() != domain->dim())) {
    throw DimensionError("project_linf: points " + shape_to_string(x.shape()) + " vs " +
                         std::to_string(domain->dim()) + "-d domain");
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const std::size_t d = x.cols();
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = std::clamp(out[k], x0[k] - epsilon, x0[k] + epsilon);
    if (domain) out[k] = std::clamp(out[k], domain->lower[k % d], domain->upper[k % d]);
  }
  return Tensor(x.shape(), std::move(out));
}

std::size_t count_kappa(const std::vector<bool>& trace, std::size_t steps) {
  for (std::size_t t = 0; t < trace.size() && t <= steps; ++t) {
    if (!trace[t]) return t;
  }
  return steps;
}

std::vector<std::size_t> count_kappa(const CorrectTrace& trace, std::size_t steps) {
  std::vector<std::size_t> kappa(trace.examples());
  for (std::size_t i = 0; i < trace.examples(); ++i) kappa[i] = count_kappa(trace.row(i, 0), steps);
  return kappa;
}

namespace {

double sign(double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

void check_batch(const MlpParams& model, const Tensor& x0, std::span<const Label> labels) {
  if (x0.rank() != 2 || x0.cols() != model.config.input_dim()) {
    throw DimensionError("attack inputs " + shape_to_string(x0.shape()) + " do not match model input dim " +
                         std::to_string(model.config.input_dim()));
  }
  if (labels.size() != x0.rows()) {
    throw DimensionError(std::to_string(labels.size()) + " labels for " + std::to_string(x0.rows()) + " points");
  }
  for (const Label y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= model.config.num_classes()) {
      throw IndexError("label " + std::to_string(y) + " outside model classes");
    }
  }
}

}  // namespace

namespace detail {

TrajectoryOutput run_trajectories(const MlpParams& model, const Tensor& x0, std::span<const Label> labels,
                                  const AttackConfig& config, const std::optional<DomainBox>& domain,
                                  std::optional<std::size_t> friendly_slack) {
  config.validate();
  check_batch(model, x0, labels);
  const std::optional<DomainBox> clip = config.clip_to_domain ? domain : std::nullopt;
  const std::size_t n = x0.rows();
  const std::size_t d = x0.cols();
  const std::size_t steps = config.steps;

  TrajectoryOutput out;
  AttackResult& result = out.result;
  result.trace = CorrectTrace(n, config.restarts, steps);
  result.natural_correct.resize(n);
  {
    const auto natural = predict(model, x0);
    for (std::size_t i = 0; i < n; ++i) result.natural_correct[i] = natural[i] == labels[i];
  }
  result.adversarial = x0;
  std::vector<double> best_loss(n, -std::numeric_limits<double>::infinity());

  std::vector<std::optional<std::size_t>> stop_at(n);
  std::vector<bool> frozen(n, false);
  if (friendly_slack) out.friendly = x0;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> start_noise(-config.epsilon, config.epsilon);

  for (std::size_t r = 0; r < config.restarts; ++r) {
    Tensor x = x0;
    if (config.random_start) {
      for (double& v : x.mutable_data()) v += start_noise(rng);
    }
    x = project_linf(x, x0, config.epsilon, clip);

    for (std::size_t t = 0;; ++t) {
      Tape tape;
      const TapedForward fwd = forward_on_tape(tape, model, x, TrackGradients{.params = false, .input = true});
      const Var losses = tape.scaled_softmax_cross_entropy(fwd.logits, labels, config.alpha);
      const Tensor& loss_values = tape.value(losses);
      const auto predicted = argmax_rows(tape.value(fwd.logits));

      for (std::size_t i = 0; i < n; ++i) {
        const bool correct = predicted[i] == labels[i];
        result.trace.set(i, r, t, correct);
        if (loss_values[i] > best_loss[i]) {
          best_loss[i] = loss_values[i];
          std::copy_n(x.row(i).begin(), d, result.adversarial.mutable_row(i).begin());
        }
        if (friendly_slack && !frozen[i]) {
          if (!stop_at[i] && !correct) stop_at[i] = t + *friendly_slack;
          if (stop_at[i] && (t >= *stop_at[i] || t == steps)) {
            std::copy_n(x.row(i).begin(), d, out.friendly.mutable_row(i).begin());
            frozen[i] = true;
          }
        }
      }
      if (t == steps) break;

      const Gradient grad = tape.backward(tape.sum(losses));
      const Tensor& g = grad[fwd.input];
      Tensor stepped = x;
      auto values = stepped.mutable_data();
      for (std::size_t k = 0; k < values.size(); ++k) values[k] += config.step_size * sign(g[k]);
      x = project_linf(stepped, x0, config.epsilon, clip);
    }
  }

  result.kappa = count_kappa(result.trace, steps);

  result.final_correct.resize(n);
  if (config.verdict == Verdict::best_iterate) {
    const auto adv_pred = predict(model, result.adversarial);
    for (std::size_t i = 0; i < n; ++i) result.final_correct[i] = adv_pred[i] == labels[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      bool ok = result.natural_correct[i];
      for (std::size_t r = 0; ok && r < config.restarts; ++r) {
        for (std::size_t t = 0; ok && t <= steps; ++t) ok = result.trace.at(i, r, t);
      }
      result.final_correct[i] = ok;
    }
  }

  if (friendly_slack) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!frozen[i]) {
        std::copy_n(result.adversarial.row(i).begin(), d, out.friendly.mutable_row(i).begin());
      }
    }
  }
  return out;
}

}  // namespace detail

AttackResult pgd_attack(const MlpParams& model, const Tensor& x0, std::span<const Label> labels,
                        const AttackConfig& config, const std::optional<DomainBox>& domain) {
  return detail::run_trajectories(model, x0, labels, config, domain, std::nullopt).result;
}

Tensor friendly_adversarial_search(const MlpParams& model, const Tensor& x0, std::span<const Label> labels,
                                   const AttackConfig& config, std::size_t slack_steps,
                                   const std::optional<DomainBox>& domain) {
  return detail::run_trajectories(model, x0, labels, config, domain, slack_steps).friendly;
}

std::vector<bool> pgd_plus_verdict(const MlpParams& model, const Tensor& x0, std::span<const Label> labels,
                                   const AttackConfig& config, const std::optional<DomainBox>& domain) {
  AttackConfig all = config;
  all.verdict = Verdict::all_iterates;
  return pgd_attack(model, x0, labels, all, domain).final_correct;
}

bool brute_force_attack(const MlpParams& model, std::span<const double> x0, Label label, double epsilon,
                        std::size_t grid_resolution, const std::optional<DomainBox>& domain) {
  const std::size_t d = x0.size();
  if (d != model.config.input_dim()) throw DimensionError("brute force point has wrong dimension");
  if (d > 3) throw CapabilityError("brute-force grid search supports at most 3 input dimensions, got " + std::to_string(d));
  if (grid_resolution < 1 || grid_resolution > 101) throw ParameterError("grid resolution must be in [1, 101]");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  if (domain && domain->dim() != d) throw DimensionError("domain dimension mismatch");

  std::vector<std::vector<double>> axes(d);
  for (std::size_t k = 0; k < d; ++k) {
    double lo = x0[k] - epsilon;
    double hi = x0[k] + epsilon;
    if (domain) {
      lo = std::max(lo, domain->lower[k]);
      hi = std::min(hi, domain->upper[k]);
    }
    if (grid_resolution == 1) {
      axes[k] = {std::clamp(x0[k], lo, hi)};
      continue;
    }
    for (std::size_t g = 0; g < grid_resolution; ++g) {
      const double frac = static_cast<double>(g) / static_cast<double>(grid_resolution - 1);
      axes[k].push_back(g + 1 == grid_resolution ? hi : lo + (hi - lo) * frac);
    }
  }

  std::size_t total = 1;
  for (const auto& axis : axes) total *= axis.size();
  // The natural point itself is always checked too.
  std::vector<double> values(x0.begin(), x0.end());
  values.reserve((total + 1) * d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t k = 0; k < d; ++k) {
      values.push_back(axes[k][rest % axes[k].size()]);
      rest /= axes[k].size();
    }
  }
  const auto predicted = predict(model, Tensor::matrix(total + 1, d, std::move(values)));
  return std::all_of(predicted.begin(), predicted.end(), [label](Label p) { return p == label; });
}

}  // namespace advlab
