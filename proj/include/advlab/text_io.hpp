#pragma once

// Small helpers shared by the text file formats (checkpoints, dataset CSV,
// reports, histories).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace advlab {

// Shortest form is not needed; 17 significant digits round-trip every double.
std::string format_double(double value);

// Whole-token parse; rejects trailing garbage, empty input and non-finite results.
std::optional<double> parse_double(std::string_view token);
std::optional<std::uint64_t> parse_uint(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

std::vector<std::string_view> split(std::string_view text, char separator);
std::string_view trim(std::string_view text);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace advlab
