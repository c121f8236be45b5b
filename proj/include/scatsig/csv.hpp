#pragma once

// RFC-4180 style tables: comma separated, LF line endings, header row, fields
// quoted only when needed. Doubles use "%.16e" so they round-trip exactly.
// Optional leading comment lines start with '#'.

#include <string>
#include <vector>

namespace scatsig::csv {

struct Table {
  std::vector<std::string> comments;  // written as "# <line>" before the header
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws std::invalid_argument unless every row matches the header width.
  void check_rectangular() const;
};

// "%.16e"; non-finite values become "nan", "inf" and "-inf".
std::string format_double(double v);
// Inverse of format_double. Throws std::invalid_argument on malformed input.
double parse_double(const std::string& s);

std::string escape(const std::string& field);

std::string to_string(const Table& t);
Table parse(const std::string& text);

// Writes through a temporary file and a rename. Throws IoError naming the path.
void write_file(const std::string& path, const std::string& content);
void export_csv(const Table& t, const std::string& path);
Table read_csv(const std::string& path);

}  // namespace scatsig::csv
