#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cybersick::csv {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);
/// Fixed-point with `decimals` digits after the point.
std::string format_fixed(double v, int decimals);

/// Strict parse: the whole field must be a finite-or-not decimal number.
double parse_double(std::string_view field, std::string_view what);
long long parse_int(std::string_view field, std::string_view what);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row, for error messages.
  std::vector<std::size_t> lines;

  std::size_t column(std::string_view name) const;
};

/// Reads an RFC 4180-style table (quoted fields, `,` separator). The first
/// non-empty line is the header; every row must have the header's width.
Table read(std::istream& in);
Table read_file(const std::string& path);

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

std::string quote_if_needed(std::string_view field);

}  // namespace cybersick::csv
