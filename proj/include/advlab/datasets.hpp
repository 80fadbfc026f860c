#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "advlab/tensor.hpp"

namespace advlab {

// Axis-aligned box of valid inputs.
struct DomainBox {
  std::vector<double> lower;
  std::vector<double> upper;

  static DomainBox unit(std::size_t dim);

  void validate() const;
  std::size_t dim() const { return lower.size(); }
  bool contains(std::span<const double> point) const;

  bool operator==(const DomainBox&) const = default;
};

struct Dataset {
  Tensor points;  // [n x d]
  std::vector<Label> labels;
  DomainBox domain;
  int num_classes = 2;
  std::uint64_t seed = 0;
  std::string generator = "unknown";

  // Shapes agree, labels in range, points inside the domain.
  void validate() const;
  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return points.cols(); }
};

Dataset gen_two_moons(std::size_t n, double noise_sigma, std::uint64_t seed);
Dataset gen_gaussian_blobs(std::size_t n, const std::vector<std::vector<double>>& centers, double sigma,
                           std::uint64_t seed);
Dataset gen_rings(std::size_t n, double r_inner, double r_outer, double noise_sigma, std::uint64_t seed);

namespace detail {

// Generator output in its native coordinates, before the isotropic rescale
// into the unit box. Exposed so geometry can be checked directly.
struct RawSample {
  std::vector<double> xy;  // interleaved x, y
  std::vector<Label> labels;
};

RawSample two_moons_raw(std::size_t n, double noise_sigma, std::uint64_t seed);
RawSample rings_raw(std::size_t n, double r_inner, double r_outer, double noise_sigma, std::uint64_t seed);

}  // namespace detail

std::string serialize_csv(const Dataset& dataset);
Dataset parse_csv(std::string_view text);

void save_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

// Content hash of the serialized dataset, for report provenance.
std::string dataset_hash(const Dataset& dataset);

}  // namespace advlab
