#include "tagalign/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tagalign/error.hpp"

namespace tagalign::io {

std::string format_real(double value) {
  if (value == 0.0) return "0";  // folds -0 as well
  std::array<char, 64> buffer{};
  const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return {buffer.data(), result.ptr};
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += ',';
    line += fields[i];
  }
  return line;
}

std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

double parse_real(std::string_view text, std::string_view what) {
  const std::string trimmed = trim(text);
  double value = 0.0;
  const auto* first = trimmed.data();
  const auto* last = trimmed.data() + trimmed.size();
  const auto result = std::from_chars(first, last, value);
  if (trimmed.empty() || result.ec != std::errc{} || result.ptr != last || !std::isfinite(value)) {
    throw ValidationError("invalid number for " + std::string(what) + ": '" + trimmed + "'");
  }
  return value;
}

long long parse_integer(std::string_view text, std::string_view what) {
  const std::string trimmed = trim(text);
  long long value = 0;
  const auto* last = trimmed.data() + trimmed.size();
  const auto result = std::from_chars(trimmed.data(), last, value);
  if (trimmed.empty() || result.ec != std::errc{} || result.ptr != last) {
    throw ValidationError("invalid integer for " + std::string(what) + ": '" + trimmed + "'");
  }
  return value;
}

std::string trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto begin = text.find_first_not_of(kSpace);
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(kSpace);
  return std::string(text.substr(begin, end - begin + 1));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace tagalign::io
