#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pulsewave::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based source line of each row, for error messages.
  std::vector<std::size_t> lines;

  // Index of a header column, or -1.
  int column(std::string_view name) const;
};

// Comma-separated, no quoting; blank lines skipped; CRLF tolerated.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text);

// Strict full-field parse; throws Error(Parse) naming `context` on failure.
double parse_double(std::string_view field, const std::string& context);
// Empty field or "NA"/"nan" -> NaN, otherwise strict parse.
double parse_optional_double(std::string_view field, const std::string& context);

// Shortest round-trip representation; NaN prints as "NA".
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
// Write to a sibling temp file then rename over the target.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace pulsewave::io
