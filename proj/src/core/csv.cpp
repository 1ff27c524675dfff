#include "csv.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace cml::csv {

std::vector<Record> parse(std::string_view text) {
  std::vector<Record> records;
  Record record;
  Field field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field = Field{};
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record = Record{};
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.text.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.text.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.quoted && trim(field.text).empty()) {
          field.text.clear();
          field.quoted = true;
          in_quotes = true;
        } else {
          throw Error(ErrorCode::Parse,
                      "stray quote on line " + std::to_string(line));
        }
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;  // a separator implies another field follows
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (field.quoted) {
          if (c != ' ' && c != '\t') {
            throw Error(ErrorCode::Parse, "text after closing quote on line " +
                                              std::to_string(line));
          }
          break;
        }
        field.text.push_back(c);
        field_started = true;
        break;
    }
  }
  if (in_quotes) {
    throw Error(ErrorCode::Parse,
                "unterminated quoted field starting before line " +
                    std::to_string(line));
  }
  if (field_started || !field.text.empty() || !record.empty()) end_record();
  return records;
}

std::string escape(std::string_view text, bool force_quote) {
  bool needs_quotes = force_quote || text.empty();
  for (char c : text) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') needs_quotes = true;
  }
  if (!text.empty() && (text.front() == ' ' || text.front() == '\t' ||
                        text.back() == ' ' || text.back() == '\t')) {
    needs_quotes = true;
  }
  if (!needs_quotes) return std::string(text);
  std::string out;
  out.reserve(text.size() + 2);
  out.push_back('"');
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, std::string_view content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::filesystem::create_directories(target.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to '" + path + "'");
}

std::string_view trim(std::string_view text) noexcept {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::string format_double(double value) {
  if (value == 0.0) return "0";  // folds -0 so output stays stable
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

std::string format_significant(double value, int digits) {
  if (value == 0.0) return "0";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*g", digits, value);
  return buffer;
}

}  // namespace cml::csv
