#include "advlab/config.hpp"

#include "advlab/errors.hpp"
#include "advlab/text_io.hpp"

namespace advlab {

const ConfigSection* ExperimentConfig::find(const std::string& section) const {
  const auto it = sections.find(section);
  return it == sections.end() ? nullptr : &it->second;
}

std::string ExperimentConfig::get(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  const ConfigSection* s = find(section);
  if (s == nullptr) return fallback;
  const auto it = s->find(key);
  return it == s->end() ? fallback : it->second;
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig config;
  std::string current;
  const auto lines = split(text, '\n');
  for (std::size_t index = 0; index < lines.size(); ++index) {
    const std::string_view line = trim(lines[index]);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ParseError(ParseError::Unit::line, index + 1, "malformed section header");
      }
      current = std::string(trim(line.substr(1, line.size() - 2)));
      config.sections[current];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(ParseError::Unit::line, index + 1, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError(ParseError::Unit::line, index + 1, "empty key");
    auto& section = config.sections[current];
    if (section.contains(key)) {
      throw ParseError(ParseError::Unit::line, index + 1, "duplicate key '" + key + "' in [" + current + "]");
    }
    section[key] = std::string(trim(line.substr(eq + 1)));
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_file(path));
}

std::string attack_config_to_text(const AttackConfig& config) {
  std::string out;
  out += "epsilon = " + format_double(config.epsilon) + "\n";
  out += "steps = " + std::to_string(config.steps) + "\n";
  out += "step_size = " + format_double(config.step_size) + "\n";
  out += "restarts = " + std::to_string(config.restarts) + "\n";
  out += "alpha = " + format_double(config.alpha) + "\n";
  out += "random_start = " + std::string(config.random_start ? "true" : "false") + "\n";
  out += "clip_to_domain = " + std::string(config.clip_to_domain ? "true" : "false") + "\n";
  out += "verdict = " + to_string(config.verdict) + "\n";
  out += "seed = " + std::to_string(config.seed) + "\n";
  return out;
}

namespace {

double need_double(const std::string& key, const std::string& value) {
  const auto v = parse_double(value);
  if (!v) throw ConfigError("attack key '" + key + "' needs a number, got '" + value + "'");
  return *v;
}

std::uint64_t need_uint(const std::string& key, const std::string& value) {
  const auto v = parse_uint(value);
  if (!v) throw ConfigError("attack key '" + key + "' needs a non-negative integer, got '" + value + "'");
  return *v;
}

bool need_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("attack key '" + key + "' needs true/false, got '" + value + "'");
}

}  // namespace

AttackConfig attack_config_from_section(const ConfigSection& section, AttackConfig base) {
  for (const auto& [key, value] : section) {
    if (key == "preset") continue;
    if (key == "epsilon") base.epsilon = need_double(key, value);
    else if (key == "steps") base.steps = need_uint(key, value);
    else if (key == "step_size") base.step_size = need_double(key, value);
    else if (key == "restarts") base.restarts = need_uint(key, value);
    else if (key == "alpha") base.alpha = need_double(key, value);
    else if (key == "random_start") base.random_start = need_bool(key, value);
    else if (key == "clip_to_domain") base.clip_to_domain = need_bool(key, value);
    else if (key == "verdict") base.verdict = parse_verdict(value);
    else if (key == "seed") base.seed = need_uint(key, value);
    else throw ConfigError("unknown attack key '" + key + "'");
  }
  base.validate();
  return base;
}

AttackConfig parse_attack_config(std::string_view block, AttackConfig base) {
  const ExperimentConfig parsed = parse_experiment_config(block);
  const ConfigSection* section = parsed.find("");
  return section == nullptr ? (base.validate(), base) : attack_config_from_section(*section, base);
}

AttackConfig attack_preset(const std::string& name, double epsilon) {
  if (name == "pgd20") return AttackConfig::pgd20(epsilon);
  if (name == "pgdplus" || name == "pgd+") return AttackConfig::pgd_plus(epsilon);
  if (name == "pgd200") return AttackConfig::pgd200(epsilon);
  throw ConfigError("unknown attack preset '" + name + "' (expected pgd20, pgdplus or pgd200)");
}

}  // namespace advlab
