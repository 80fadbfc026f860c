#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advlab/attacks.hpp"
#include "advlab/datasets.hpp"
#include "advlab/model.hpp"

namespace advlab {

double eval_natural(const MlpParams& model, const Dataset& dataset);

// best_iterate: accuracy at pgd_attack's returned points.
// all_iterates: fraction passing pgd_plus_verdict.
double eval_robust(const MlpParams& model, const Dataset& dataset, const AttackConfig& attack, Verdict verdict);

// Nine log-spaced scales from 1e-2 to 1e2.
std::vector<double> default_alpha_grid();
// `count` log-spaced values from lo to hi inclusive. Exponents within 1e-12
// of an integer are snapped so that 1, 10, 100 come out exact.
std::vector<double> log_spaced_grid(double lo, double hi, std::size_t count);
// "lo:hi:count", e.g. "1e-2:1e2:9", or a comma-separated list.
std::vector<double> parse_alpha_grid(const std::string& text);

struct SweepConfig {
  std::vector<double> alpha_grid = default_alpha_grid();
  AttackConfig base_attack;

  // Non-empty, positive, strictly increasing.
  void validate() const;
};

struct ReportRow {
  std::string attack;
  double alpha = 1.0;
  double robust_accuracy = 0.0;
  std::size_t n = 0;

  bool operator==(const ReportRow&) const = default;
};

struct EvalReport {
  std::string model_id;
  std::string checkpoint_hash;
  std::string dataset_id;
  std::string dataset_hash;
  std::uint64_t dataset_seed = 0;
  std::optional<double> natural_accuracy;
  std::vector<ReportRow> rows;
  std::map<std::string, double> worst_alpha;  // only for attacks that were swept
  std::vector<std::string> config_lines;      // resolved configuration, free text
  std::string timestamp;                      // excluded from determinism checks

  void validate() const;
  bool operator==(const EvalReport&) const = default;
};

// One eval_robust per grid value, same attack seed throughout.
std::vector<ReportRow> alpha_sweep(const MlpParams& model, const Dataset& dataset, const SweepConfig& sweep,
                                   Verdict verdict, const std::string& attack_name);

// Grid value with the lowest robust accuracy for `attack`; ties go to the smaller alpha.
std::optional<double> worst_alpha(std::span<const ReportRow> rows, const std::string& attack);

// Robust accuracy at `alpha` for `attack`, if that cell exists.
std::optional<double> accuracy_at(std::span<const ReportRow> rows, const std::string& attack, double alpha);

std::string serialize_report(const EvalReport& report);
EvalReport parse_report(std::string_view text);
void write_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_report(const std::filesystem::path& path);

// Report text with timestamp lines removed.
std::string report_body(std::string_view text);

}  // namespace advlab
