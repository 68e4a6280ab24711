#include "harmonia/table.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "harmonia/error.hpp"

namespace harmonia {

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
  if (auto i = find_column(name)) return *i;
  throw Error(Errc::parse, fmt::format("missing column '{}'", name));
}

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) {
    throw Error(Errc::parse, fmt::format("row has {} fields, header has {}", row.size(), header.size()));
  }
  rows.push_back(std::move(row));
}

namespace {

std::vector<std::string> split_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw Error(Errc::parse, fmt::format("line {}: unterminated quote", line_no));
  fields.push_back(std::move(cur));
  return fields;
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

Table parse_csv(std::string_view text) {
  Table t;
  std::size_t pos = 0, line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_line(line, line_no);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
    } else if (fields.size() != t.header.size()) {
      throw Error(Errc::parse,
                  fmt::format("line {}: {} fields, header has {}", line_no, fields.size(), t.header.size()));
    } else {
      t.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw Error(Errc::parse, "empty table");
  return t;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(Errc::io, "write failed for '" + path + "'");
}

Table read_csv(const std::string& path) {
  try {
    return parse_csv(read_file(path));
  } catch (const Error& e) {
    if (e.code() == Errc::parse) throw Error(Errc::parse, path + ": " + e.what());
    throw;
  }
}

std::string to_csv(const Table& table) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += quote(row[i]);
    }
    out += '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  return out;
}

void write_csv(const std::string& path, const Table& table) { write_file(path, to_csv(table)); }

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  if (v == 0.0) return "0";  // no negative zero in outputs
  return fmt::format("{}", v);
}

std::string format_number(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

double parse_number(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(Errc::parse, fmt::format("not a number: '{}'", text));
  }
  return v;
}

std::optional<double> parse_optional_number(std::string_view text) {
  if (text.empty() || text == "NA" || text == "NaN" || text == "nan") return std::nullopt;
  return parse_number(text);
}

int parse_int(std::string_view text) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(Errc::parse, fmt::format("not an integer: '{}'", text));
  }
  return v;
}

}  // namespace harmonia
