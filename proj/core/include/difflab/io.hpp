#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "difflab/common.hpp"

namespace difflab::io {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

/// Writes `contents` to `path`, creating parent directories.
/// Throws std::runtime_error naming the path on failure.
void write_file(const std::filesystem::path& path, std::string_view contents);
/// Throws InputMissingError if the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Minimal CSV table: one header row plus numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws UsageError if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

/// Point-cloud CSV with header "x,y".
void write_points_csv(const std::filesystem::path& path, std::span<const Vec2> points);
std::vector<Vec2> read_points_csv(const std::filesystem::path& path);

}  // namespace difflab::io
