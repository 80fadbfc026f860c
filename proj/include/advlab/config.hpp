#pragma once

// Experiment config files: flat `key = value` lines grouped under
// `[data]`, `[train]`, `[attack.<name>]` and `[sweep]` sections. Lines
// starting with `#` or `;` are comments; there are no inline comments, since
// values such as blob centers use `;`. Keys before any header go to section "".

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "advlab/attacks.hpp"

namespace advlab {

using ConfigSection = std::map<std::string, std::string>;

struct ExperimentConfig {
  std::map<std::string, ConfigSection> sections;

  const ConfigSection* find(const std::string& section) const;
  // Value of `key` in `section`, or `fallback` when absent.
  std::string get(const std::string& section, const std::string& key, const std::string& fallback) const;
};

ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::string& path);

// One `key = value` per line, keys in a fixed order.
std::string attack_config_to_text(const AttackConfig& config);
// Starts from `base` and applies every key; unknown keys are a ConfigError.
AttackConfig attack_config_from_section(const ConfigSection& section, AttackConfig base = {});
AttackConfig parse_attack_config(std::string_view block, AttackConfig base = {});

// Named presets: pgd20, pgdplus, pgd200.
AttackConfig attack_preset(const std::string& name, double epsilon);

}  // namespace advlab
