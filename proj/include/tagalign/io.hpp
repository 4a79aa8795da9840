#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tagalign::io {

/// Shortest round-trip decimal representation of `value`.
std::string format_real(double value);

/// Quotes a CSV field when it contains a comma, quote, or line break.
std::string csv_escape(std::string_view field);

/// Joins already-formatted fields into one CSV line (no trailing newline).
std::string csv_line(const std::vector<std::string>& fields);

/// Splits one CSV line, honoring double-quoted fields.
std::vector<std::string> csv_split(std::string_view line);

/// Parses a finite real; throws ValidationError mentioning `what` otherwise.
double parse_real(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);

std::string trim(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace tagalign::io
