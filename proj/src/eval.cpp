#include "advlab/eval.hpp"

#include <algorithm>
#include <cmath>

#include "advlab/errors.hpp"
#include "advlab/text_io.hpp"

namespace advlab {

namespace {

void check_model_data(const MlpParams& model, const Dataset& dataset) {
  if (dataset.dim() != model.config.input_dim()) {
    throw DimensionError("dataset has " + std::to_string(dataset.dim()) + " features, model expects " +
                         std::to_string(model.config.input_dim()));
  }
}

double fraction(const std::vector<bool>& flags) {
  if (flags.empty()) return 0.0;
  const auto hits = std::count(flags.begin(), flags.end(), true);
  return static_cast<double>(hits) / static_cast<double>(flags.size());
}

}  // namespace

double eval_natural(const MlpParams& model, const Dataset& dataset) {
  check_model_data(model, dataset);
  const auto predicted = predict(model, dataset.points);
  std::vector<bool> correct(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) correct[i] = predicted[i] == dataset.labels[i];
  return fraction(correct);
}

double eval_robust(const MlpParams& model, const Dataset& dataset, const AttackConfig& attack, Verdict verdict) {
  check_model_data(model, dataset);
  AttackConfig config = attack;
  config.verdict = verdict;
  return fraction(pgd_attack(model, dataset.points, dataset.labels, config, dataset.domain).final_correct);
}

std::vector<double> default_alpha_grid() { return log_spaced_grid(1e-2, 1e2, 9); }

std::vector<double> log_spaced_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1 || (count == 1 && lo != hi)) {
    throw ConfigError("log grid needs 0 < lo <= hi and count >= 1 (count 1 only when lo == hi)");
  }
  if (count == 1) return {lo};
  const double first = std::log10(lo);
  const double last = std::log10(hi);
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) {
    double e = first + (last - first) * static_cast<double>(k) / static_cast<double>(count - 1);
    if (std::abs(e - std::round(e)) < 1e-12) e = std::round(e);
    grid[k] = std::pow(10.0, e);
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> parse_alpha_grid(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() == 3) {
    const auto lo = parse_double(parts[0]);
    const auto hi = parse_double(parts[1]);
    const auto count = parse_uint(parts[2]);
    if (!lo || !hi || !count) throw ConfigError("bad alpha grid '" + text + "' (expected lo:hi:count)");
    return log_spaced_grid(*lo, *hi, *count);
  }
  std::vector<double> grid;
  for (const auto part : split(text, ',')) {
    const auto v = parse_double(part);
    if (!v) throw ConfigError("bad alpha value '" + std::string(part) + "'");
    grid.push_back(*v);
  }
  return grid;
}

void SweepConfig::validate() const {
  if (alpha_grid.empty()) throw ConfigError("alpha grid is empty");
  for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
    if (!(alpha_grid[k] > 0.0) || !std::isfinite(alpha_grid[k])) throw ConfigError("alpha values must be positive");
    if (k > 0 && !(alpha_grid[k] > alpha_grid[k - 1])) throw ConfigError("alpha grid must be strictly increasing");
  }
  base_attack.validate();
}

std::vector<ReportRow> alpha_sweep(const MlpParams& model, const Dataset& dataset, const SweepConfig& sweep,
                                   Verdict verdict, const std::string& attack_name) {
  sweep.validate();
  std::vector<ReportRow> rows;
  rows.reserve(sweep.alpha_grid.size());
  for (const double alpha : sweep.alpha_grid) {
    AttackConfig attack = sweep.base_attack;
    attack.alpha = alpha;
    rows.push_back(ReportRow{.attack = attack_name,
                             .alpha = alpha,
                             .robust_accuracy = eval_robust(model, dataset, attack, verdict),
                             .n = dataset.size()});
  }
  return rows;
}

std::optional<double> worst_alpha(std::span<const ReportRow> rows, const std::string& attack) {
  std::optional<ReportRow> best;
  for (const auto& row : rows) {
    if (row.attack != attack) continue;
    if (!best || row.robust_accuracy < best->robust_accuracy ||
        (row.robust_accuracy == best->robust_accuracy && row.alpha < best->alpha)) {
      best = row;
    }
  }
  if (!best) return std::nullopt;
  return best->alpha;
}

std::optional<double> accuracy_at(std::span<const ReportRow> rows, const std::string& attack, double alpha) {
  for (const auto& row : rows) {
    if (row.attack == attack && row.alpha == alpha) return row.robust_accuracy;
  }
  return std::nullopt;
}

void EvalReport::validate() const {
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (natural_accuracy && !in_unit(*natural_accuracy)) throw SchemaError("natural accuracy outside [0,1]");
  for (const auto& row : rows) {
    if (!in_unit(row.robust_accuracy)) {
      throw SchemaError("robust accuracy " + format_double(row.robust_accuracy) + " for " + row.attack + " outside [0,1]");
    }
    if (!(row.alpha > 0.0)) throw SchemaError("alpha must be positive in report rows");
  }
  for (const auto& [attack, alpha] : worst_alpha) {
    if (!accuracy_at(rows, attack, alpha)) throw SchemaError("worst_alpha for " + attack + " names no row");
  }
}

// Report CSV:
//   # key=value metadata lines
//   # config <free text>      resolved configuration
//   # worst_alpha,<attack>,<alpha>
//   attack,alpha,robust_accuracy,n
//   <rows>

std::string serialize_report(const EvalReport& report) {
  report.validate();
  std::string out;
  out += "# model=" + report.model_id + "\n";
  out += "# checkpoint_hash=" + report.checkpoint_hash + "\n";
  out += "# dataset=" + report.dataset_id + "\n";
  out += "# dataset_hash=" + report.dataset_hash + "\n";
  out += "# dataset_seed=" + std::to_string(report.dataset_seed) + "\n";
  if (report.natural_accuracy) out += "# natural_accuracy=" + format_double(*report.natural_accuracy) + "\n";
  if (!report.timestamp.empty()) out += "# generated_at=" + report.timestamp + "\n";
  for (const auto& line : report.config_lines) out += "# config " + line + "\n";
  for (const auto& [attack, alpha] : report.worst_alpha) {
    out += "# worst_alpha," + attack + "," + format_double(alpha) + "\n";
  }
  out += "attack,alpha,robust_accuracy,n\n";
  for (const auto& row : report.rows) {
    out += row.attack + "," + format_double(row.alpha) + "," + format_double(row.robust_accuracy) + "," +
           std::to_string(row.n) + "\n";
  }
  return out;
}

EvalReport parse_report(std::string_view text) {
  EvalReport report;
  bool have_header = false;
  const auto lines = split(text, '\n');
  for (std::size_t index = 0; index < lines.size(); ++index) {
    const std::size_t line_no = index + 1;
    const auto fail = [line_no](const std::string& what) { return ParseError(ParseError::Unit::line, line_no, what); };
    const std::string_view raw = lines[index];
    const std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '#') {
      std::string_view body = raw.substr(raw.find('#') + 1);
      if (body.starts_with(' ')) body.remove_prefix(1);
      body = trim(body);
      if (body.starts_with("config ")) {
        report.config_lines.emplace_back(body.substr(7));
        continue;
      }
      if (body.starts_with("worst_alpha,")) {
        const auto parts = split(body, ',');
        const auto alpha = parts.size() == 3 ? parse_double(parts[2]) : std::nullopt;
        if (!alpha) throw fail("bad worst_alpha line");
        report.worst_alpha[std::string(parts[1])] = *alpha;
        continue;
      }
      const std::size_t eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string key(body.substr(0, eq));
      const std::string value(body.substr(eq + 1));
      if (key == "model") report.model_id = value;
      else if (key == "checkpoint_hash") report.checkpoint_hash = value;
      else if (key == "dataset") report.dataset_id = value;
      else if (key == "dataset_hash") report.dataset_hash = value;
      else if (key == "generated_at") report.timestamp = value;
      else if (key == "dataset_seed") {
        const auto v = parse_uint(value);
        if (!v) throw fail("bad dataset_seed");
        report.dataset_seed = *v;
      } else if (key == "natural_accuracy") {
        const auto v = parse_double(value);
        if (!v) throw fail("bad natural_accuracy");
        report.natural_accuracy = *v;
      }
      continue;
    }

    if (!have_header) {
      if (line != "attack,alpha,robust_accuracy,n") throw fail("missing header 'attack,alpha,robust_accuracy,n'");
      have_header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 4) throw fail("expected 4 cells, got " + std::to_string(cells.size()));
    const auto alpha = parse_double(cells[1]);
    const auto acc = parse_double(cells[2]);
    const auto n = parse_uint(cells[3]);
    if (!alpha || !acc || !n || trim(cells[0]).empty()) throw fail("malformed report row");
    report.rows.push_back(ReportRow{std::string(trim(cells[0])), *alpha, *acc, *n});
  }
  if (!have_header) throw ParseError(ParseError::Unit::line, lines.size(), "missing header 'attack,alpha,robust_accuracy,n'");
  report.validate();
  return report;
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_report(report));
}

EvalReport read_report(const std::filesystem::path& path) { return parse_report(read_file(path)); }

std::string report_body(std::string_view text) {
  std::string out;
  for (const auto line : split(text, '\n')) {
    if (line.starts_with("# generated_at=")) continue;
    out.append(line);
    out += '\n';
  }
  return out;
}

}  // namespace advlab
