#pragma once

// Minimal comma-separated tables. Missing numbers are written as NA.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace harmonia {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws parse when absent
  std::optional<std::size_t> find_column(std::string_view name) const;
  void add_row(std::vector<std::string> row);
};

Table parse_csv(std::string_view text);
Table read_csv(const std::string& path);
std::string to_csv(const Table& table);
void write_csv(const std::string& path, const Table& table);

std::string format_number(double v);  // shortest round-trip form
std::string format_number(const std::optional<double>& v);
double parse_number(std::string_view text);  // throws parse
std::optional<double> parse_optional_number(std::string_view text);  // NA or empty -> nullopt
int parse_int(std::string_view text);

std::string read_file(const std::string& path);  // throws io
void write_file(const std::string& path, std::string_view content);

}  // namespace harmonia
