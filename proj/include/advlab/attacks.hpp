#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advlab/datasets.hpp"
#include "advlab/model.hpp"
#include "advlab/tensor.hpp"

namespace advlab {

// How an attack run turns into a per-example robust/non-robust verdict.
enum class Verdict {
  best_iterate,  // prediction at the returned (max-loss) adversarial point
  all_iterates,  // correct at the natural point and at every visited iterate
};

std::string to_string(Verdict verdict);
Verdict parse_verdict(const std::string& name);

struct AttackConfig {
  double epsilon = 0.031;
  std::size_t steps = 20;
  double step_size = 0.031 / 4;
  std::size_t restarts = 1;
  double alpha = 1.0;  // logit scale used only while crafting; 1 is vanilla PGD
  bool random_start = true;
  bool clip_to_domain = true;
  Verdict verdict = Verdict::best_iterate;
  std::uint64_t seed = 0;

  void validate() const;

  // 20 steps of eps/4, one uniform random start.
  static AttackConfig pgd20(double epsilon = 0.031);
  // 40 steps of 0.01, five random restarts, every iterate must stay correct.
  static AttackConfig pgd_plus(double epsilon = 0.031);
  // 200 steps of eps/100. The fine step is our choice, not a published setting.
  static AttackConfig pgd200(double epsilon = 0.031);

  bool operator==(const AttackConfig&) const = default;
};

// Per example, per restart, per iterate (0..steps) prediction correctness.
class CorrectTrace {
 public:
  CorrectTrace() = default;
  CorrectTrace(std::size_t examples, std::size_t restarts, std::size_t steps);

  bool at(std::size_t example, std::size_t restart, std::size_t iterate) const;
  void set(std::size_t example, std::size_t restart, std::size_t iterate, bool correct);

  std::size_t examples() const { return examples_; }
  std::size_t restarts() const { return restarts_; }
  std::size_t iterates() const { return iterates_; }

  // Iterates 0..steps of one restart for one example.
  std::vector<bool> row(std::size_t example, std::size_t restart) const;

  bool operator==(const CorrectTrace&) const = default;

 private:
  std::size_t examples_ = 0;
  std::size_t restarts_ = 0;
  std::size_t iterates_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct AttackResult {
  Tensor adversarial;                 // [n x d], max-loss iterate per example
  std::vector<std::size_t> kappa;     // from the first restart's trace
  std::vector<bool> natural_correct;  // prediction correctness at x0
  CorrectTrace trace;
  std::vector<bool> final_correct;    // under config.verdict

  bool operator==(const AttackResult&) const = default;
};

// Clamp into the l-inf ball around x0, then into the domain when given.
Tensor project_linf(const Tensor& x, const Tensor& x0, double epsilon,
                    const std::optional<DomainBox>& domain = std::nullopt);

AttackResult pgd_attack(const MlpParams& model, const Tensor& x0, std::span<const Label> labels,
                        const AttackConfig& config, const std::optional<DomainBox>& domain = std::nullopt);

// Index of the first misclassified iterate (iterate 0 is the start point),
// or `steps` if there is none.
std::size_t count_kappa(const std::vector<bool>& trace, std::size_t steps);
std::vector<std::size_t> count_kappa(const CorrectTrace& trace, std::size_t steps);

// Early-stopped PGD: each example stops `slack_steps` iterations after its
// first misclassified iterate. Examples never misclassified get the same
// point pgd_attack would return.
Tensor friendly_adversarial_search(const MlpParams& model, const Tensor& x0, std::span<const Label> labels,
                                   const AttackConfig& config, std::size_t slack_steps,
                                   const std::optional<DomainBox>& domain = std::nullopt);

// Robust-correct iff correct at x0 and at every iterate of every restart.
std::vector<bool> pgd_plus_verdict(const MlpParams& model, const Tensor& x0, std::span<const Label> labels,
                                   const AttackConfig& config, const std::optional<DomainBox>& domain = std::nullopt);

// Exhaustive grid check over the (domain-clipped) ball, d <= 3, G <= 101.
// Returns true iff every grid point is classified as `label`.
bool brute_force_attack(const MlpParams& model, std::span<const double> x0, Label label, double epsilon,
                        std::size_t grid_resolution, const std::optional<DomainBox>& domain = std::nullopt);

namespace detail {

struct TrajectoryOutput {
  AttackResult result;
  Tensor friendly;  // only filled when a slack is requested
};

// Shared engine behind pgd_attack and friendly_adversarial_search.
TrajectoryOutput run_trajectories(const MlpParams& model, const Tensor& x0, std::span<const Label> labels,
                                  const AttackConfig& config, const std::optional<DomainBox>& domain,
                                  std::optional<std::size_t> friendly_slack);

}  // namespace detail

}  // namespace advlab
