#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ctree::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source text
  std::vector<std::string> fields;
};

// Splits CSV text into rows. Blank lines and lines starting with '#' are
// skipped. Double-quoted fields may contain commas and "" escapes.
std::vector<Row> parse(std::string_view text);

std::vector<std::string> split_line(std::string_view line);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Quotes a field only when it contains a separator, quote or newline.
std::string escape(std::string_view field);

// Shortest round-trip representation of a double ("NA" for NaN).
std::string format_double(double value);

bool is_missing_token(std::string_view field);
double parse_double(std::string_view field, std::size_t line);
long long parse_int(std::string_view field, std::size_t line);

std::string trim(std::string_view s);

}  // namespace ctree::csv
