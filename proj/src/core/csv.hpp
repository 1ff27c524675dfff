#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cml::csv {

// One parsed field. An unquoted empty field is a missing cell; a quoted
// empty field ("") is a present empty string.
struct Field {
  std::string text;
  bool quoted = false;
};

using Record = std::vector<Field>;

// RFC 4180 style: comma separator, double-quote quoting with "" escapes,
// CRLF or LF line endings. A trailing newline does not produce a record.
std::vector<Record> parse(std::string_view text);

// Quotes the field when it contains a separator, quote, line break or
// surrounding whitespace, or when it is an empty-but-present string.
std::string escape(std::string_view text, bool force_quote = false);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::string_view trim(std::string_view text) noexcept;

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

// printf-style fixed significant digits, "C" locale.
std::string format_significant(double value, int digits);

}  // namespace cml::csv
