#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hmlc::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;

  // Index of a header column, or -1.
  long column(std::string_view name) const;
};

// RFC 4180 style: comma separated, double-quoted fields may contain commas,
// quotes ("") and newlines. A trailing CR on each line is dropped.
Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

std::string quote(std::string_view field);
std::string join(const Row& fields);

// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);
// Whole-string parse; returns false on trailing garbage.
bool parse_double(std::string_view text, double& out);

// Writes via a sibling temp file and rename, so readers never see a partial file.
void write_file(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace hmlc::csv
