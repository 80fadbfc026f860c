#include "advlab/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "advlab/errors.hpp"
#include "advlab/text_io.hpp"

namespace advlab {

DomainBox DomainBox::unit(std::size_t dim) {
  return DomainBox{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

void DomainBox::validate() const {
  if (lower.empty() || lower.size() != upper.size()) throw SchemaError("domain bounds have mismatched sizes");
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || !(lower[k] < upper[k])) {
      throw SchemaError("domain dimension " + std::to_string(k) + " needs finite lower < upper");
    }
  }
}

bool DomainBox::contains(std::span<const double> point) const {
  if (point.size() != lower.size()) return false;
  for (std::size_t k = 0; k < point.size(); ++k) {
    if (point[k] < lower[k] || point[k] > upper[k]) return false;
  }
  return true;
}

void Dataset::validate() const {
  domain.validate();
  if (num_classes < 2) throw SchemaError("num_classes must be at least 2");
  if (points.rank() != 2 || points.rows() != labels.size() || points.cols() != domain.dim()) {
    throw SchemaError("points " + shape_to_string(points.shape()) + " inconsistent with " +
                      std::to_string(labels.size()) + " labels and a " + std::to_string(domain.dim()) +
                      "-d domain");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw SchemaError("label " + std::to_string(labels[i]) + " of row " + std::to_string(i) +
                        " outside [0, " + std::to_string(num_classes) + ")");
    }
    if (!domain.contains(points.row(i))) throw SchemaError("row " + std::to_string(i) + " lies outside the domain");
  }
}

namespace {

// Maps raw 2-D points into [0,1]^2 with one shared scale so shapes and
// distances keep their proportions.
Tensor rescale_isotropic(const std::vector<double>& xy) {
  const std::size_t n = xy.size() / 2;
  double lo[2] = {xy[0], xy[1]};
  double hi[2] = {xy[0], xy[1]};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      lo[k] = std::min(lo[k], xy[2 * i + k]);
      hi[k] = std::max(hi[k], xy[2 * i + k]);
    }
  }
  double scale = std::max(hi[0] - lo[0], hi[1] - lo[1]);
  if (!(scale > 0.0)) scale = 1.0;
  std::vector<double> out(xy.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      out[2 * i + k] = std::clamp((xy[2 * i + k] - lo[k]) / scale, 0.0, 1.0);
    }
  }
  return Tensor::matrix(n, 2, std::move(out));
}

void require_even(std::size_t n) {
  if (n == 0 || n % 2 != 0) throw ParameterError("sample count must be even and positive, got " + std::to_string(n));
}

void require_sigma(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("noise sigma must be finite and >= 0");
}

}  // namespace

namespace detail {

// Class 0: upper unit half-circle (cos t, sin t).
// Class 1: lower unit half-circle (1 - cos t, 0.5 - sin t).
RawSample two_moons_raw(std::size_t n, double noise_sigma, std::uint64_t seed) {
  require_even(n);
  require_sigma(noise_sigma);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  RawSample out;
  out.xy.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Label label = i < n / 2 ? 0 : 1;
    const double t = angle(rng);
    double x = label == 0 ? std::cos(t) : 1.0 - std::cos(t);
    double y = label == 0 ? std::sin(t) : 0.5 - std::sin(t);
    x += noise_sigma * noise(rng);
    y += noise_sigma * noise(rng);
    out.xy.push_back(x);
    out.xy.push_back(y);
    out.labels.push_back(label);
  }
  return out;
}

// Concentric circles about the origin, class 0 inside.
RawSample rings_raw(std::size_t n, double r_inner, double r_outer, double noise_sigma, std::uint64_t seed) {
  require_even(n);
  require_sigma(noise_sigma);
  if (!(r_inner > 0.0 && r_inner < r_outer) || !std::isfinite(r_outer)) {
    throw ParameterError("ring radii must satisfy 0 < r_inner < r_outer");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  RawSample out;
  out.xy.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Label label = i < n / 2 ? 0 : 1;
    const double r = label == 0 ? r_inner : r_outer;
    const double t = angle(rng);
    out.xy.push_back(r * std::cos(t) + noise_sigma * noise(rng));
    out.xy.push_back(r * std::sin(t) + noise_sigma * noise(rng));
    out.labels.push_back(label);
  }
  return out;
}

}  // namespace detail

Dataset gen_two_moons(std::size_t n, double noise_sigma, std::uint64_t seed) {
  auto raw = detail::two_moons_raw(n, noise_sigma, seed);
  Dataset ds{.points = rescale_isotropic(raw.xy),
             .labels = std::move(raw.labels),
             .domain = DomainBox::unit(2),
             .num_classes = 2,
             .seed = seed,
             .generator = "two-moons"};
  ds.validate();
  return ds;
}

Dataset gen_rings(std::size_t n, double r_inner, double r_outer, double noise_sigma, std::uint64_t seed) {
  auto raw = detail::rings_raw(n, r_inner, r_outer, noise_sigma, seed);
  Dataset ds{.points = rescale_isotropic(raw.xy),
             .labels = std::move(raw.labels),
             .domain = DomainBox::unit(2),
             .num_classes = 2,
             .seed = seed,
             .generator = "rings"};
  ds.validate();
  return ds;
}

Dataset gen_gaussian_blobs(std::size_t n, const std::vector<std::vector<double>>& centers, double sigma,
                           std::uint64_t seed) {
  if (centers.size() < 2) throw ParameterError("need at least 2 blob centers");
  require_sigma(sigma);
  const std::size_t k = centers.size();
  if (n == 0 || n % k != 0) {
    throw ParameterError("sample count " + std::to_string(n) + " must be a positive multiple of " +
                         std::to_string(k) + " centers");
  }
  const std::size_t d = centers[0].size();
  const DomainBox domain = DomainBox::unit(d == 0 ? 1 : d);
  for (const auto& c : centers) {
    if (c.size() != d || d == 0 || !domain.contains(c)) {
      throw ParameterError("blob centers must all lie inside the unit box of one dimension");
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> values;
  values.reserve(n * d);
  std::vector<Label> labels;
  labels.reserve(n);
  const std::size_t per_class = n / k;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        values.push_back(std::clamp(centers[c][j] + sigma * noise(rng), 0.0, 1.0));
      }
      labels.push_back(static_cast<Label>(c));
    }
  }
  Dataset ds{.points = Tensor::matrix(n, d, std::move(values)),
             .labels = std::move(labels),
             .domain = domain,
             .num_classes = static_cast<int>(k),
             .seed = seed,
             .generator = "gaussian-blobs"};
  ds.validate();
  return ds;
}

namespace {

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ";";
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace

std::string serialize_csv(const Dataset& dataset) {
  dataset.validate();
  std::string out;
  out += "# generator=" + dataset.generator + "\n";
  out += "# seed=" + std::to_string(dataset.seed) + "\n";
  out += "# num_classes=" + std::to_string(dataset.num_classes) + "\n";
  out += "# domain_lower=" + join_doubles(dataset.domain.lower) + "\n";
  out += "# domain_upper=" + join_doubles(dataset.domain.upper) + "\n";
  for (std::size_t k = 0; k < dataset.dim(); ++k) out += "x" + std::to_string(k) + ",";
  out += "label\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (const double v : dataset.points.row(i)) out += format_double(v) + ",";
    out += std::to_string(dataset.labels[i]) + "\n";
  }
  return out;
}

Dataset parse_csv(std::string_view text) {
  Dataset ds;
  std::optional<int> declared_classes;
  bool have_header = false;
  std::size_t dim = 0;
  std::vector<double> values;

  const auto lines = split(text, '\n');
  for (std::size_t index = 0; index < lines.size(); ++index) {
    const std::size_t line_no = index + 1;
    const std::string_view line = trim(lines[index]);
    const auto fail = [line_no](const std::string& what) -> ParseError {
      return ParseError(ParseError::Unit::line, line_no, what);
    };
    if (line.empty()) continue;

    if (line.front() == '#') {
      const std::string_view body = trim(line.substr(1));
      const std::size_t eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = trim(body.substr(0, eq));
      const std::string_view value = trim(body.substr(eq + 1));
      if (key == "generator") {
        ds.generator = std::string(value);
      } else if (key == "seed") {
        const auto v = parse_uint(value);
        if (!v) throw fail("bad seed '" + std::string(value) + "'");
        ds.seed = *v;
      } else if (key == "num_classes") {
        const auto v = parse_int(value);
        if (!v || *v < 2) throw fail("bad num_classes '" + std::string(value) + "'");
        declared_classes = static_cast<int>(*v);
      } else if (key == "domain_lower" || key == "domain_upper") {
        std::vector<double> bounds;
        for (const auto part : split(value, ';')) {
          const auto v = parse_double(part);
          if (!v) throw fail("bad domain bound '" + std::string(part) + "'");
          bounds.push_back(*v);
        }
        (key == "domain_lower" ? ds.domain.lower : ds.domain.upper) = std::move(bounds);
      }
      continue;
    }

    const auto cells = split(line, ',');
    if (!have_header) {
      if (cells.size() < 2 || trim(cells.back()) != "label") throw fail("expected header x0,...,label");
      for (std::size_t k = 0; k + 1 < cells.size(); ++k) {
        if (trim(cells[k]) != "x" + std::to_string(k)) throw fail("expected column x" + std::to_string(k));
      }
      dim = cells.size() - 1;
      have_header = true;
      continue;
    }
    if (cells.size() != dim + 1) {
      throw fail("expected " + std::to_string(dim + 1) + " cells, got " + std::to_string(cells.size()));
    }
    for (std::size_t k = 0; k < dim; ++k) {
      const auto v = parse_double(cells[k]);
      if (!v) throw fail("non-numeric cell '" + std::string(trim(cells[k])) + "'");
      values.push_back(*v);
    }
    const auto label = parse_int(cells[dim]);
    if (!label || *label < 0) throw fail("bad label '" + std::string(trim(cells[dim])) + "'");
    if (declared_classes && *label >= *declared_classes) {
      throw SchemaError("line " + std::to_string(line_no) + ": label " + std::to_string(*label) +
                        " outside declared num_classes " + std::to_string(*declared_classes));
    }
    ds.labels.push_back(static_cast<Label>(*label));
  }

  if (!have_header) throw ParseError(ParseError::Unit::line, lines.size(), "missing header row");
  if (ds.labels.empty()) throw SchemaError("dataset has no rows");
  if (ds.domain.lower.empty() && ds.domain.upper.empty()) ds.domain = DomainBox::unit(dim);
  if (declared_classes) {
    ds.num_classes = *declared_classes;
  } else {
    ds.num_classes = std::max(2, *std::max_element(ds.labels.begin(), ds.labels.end()) + 1);
  }
  ds.points = Tensor::matrix(ds.labels.size(), dim, std::move(values));
  ds.validate();
  return ds;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_csv(dataset));
}

Dataset load_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string dataset_hash(const Dataset& dataset) { return fnv1a_hex(serialize_csv(dataset)); }

}  // namespace advlab
