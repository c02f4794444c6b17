#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cfcal {

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
// 17 significant digits, used for model parameters.
std::string format_double17(double x);

double parse_double(std::string_view text, int line = 0);
long long parse_int(std::string_view text, int line = 0);
std::uint64_t parse_u64(std::string_view text, int line = 0);
bool parse_bool(std::string_view text, int line = 0);

std::string_view trim(std::string_view s);

struct KvEntry {
  std::string section;
  std::string key;
  std::string value;
  int line{0};
};

// Line-oriented "key = value" document with optional "[section]" headers and
// '#' comments. Key order is preserved for writing.
class KvDocument {
 public:
  static KvDocument parse(std::istream& in);
  static KvDocument parse_string(std::string_view text);
  static KvDocument load(const std::string& path);

  void set(const std::string& section, const std::string& key, std::string value);
  void set(const std::string& section, const std::string& key, double value);
  const KvEntry* find(std::string_view section, std::string_view key) const;
  const KvEntry& require(std::string_view section, std::string_view key) const;

  const std::vector<KvEntry>& entries() const { return entries_; }
  std::string str() const;
  void save(const std::string& path) const;

 private:
  std::vector<KvEntry> entries_;
};

// Sequential reader for the versioned text model files. Distinguishes
// truncation, non-numeric fields and malformed structure.
class TextReader {
 public:
  TextReader(std::istream& in, std::string what);

  // Next non-empty line split on whitespace; throws Truncated at EOF.
  std::vector<std::string> tokens();
  // Expects a line starting with keyword; returns the remaining tokens.
  std::vector<std::string> expect(std::string_view keyword);
  void expect_header(std::string_view magic, int version);
  std::vector<double> numbers(std::size_t count);
  double number(const std::string& tok);
  long long integer(const std::string& tok);
  int line() const { return line_; }
  // True once the last line read ended without a newline.
  bool eof() const;

 private:
  std::istream& in_;
  std::string what_;
  int line_{0};
};

}  // namespace cfcal
