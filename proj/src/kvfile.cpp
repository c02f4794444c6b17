#include "cfcal/kvfile.hpp"

#include "cfcal/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cfcal {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_double17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, int line) {
  text = trim(text);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(line, "expected a number, got '" + std::string(text) + "'");
  return v;
}

long long parse_int(std::string_view text, int line) {
  text = trim(text);
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(line, "expected an integer, got '" + std::string(text) + "'");
  return v;
}

std::uint64_t parse_u64(std::string_view text, int line) {
  text = trim(text);
  std::uint64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(line, "expected an unsigned integer, got '" + std::string(text) + "'");
  return v;
}

bool parse_bool(std::string_view text, int line) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(line, "expected a boolean, got '" + std::string(text) + "'");
}

KvDocument KvDocument::parse(std::istream& in) {
  KvDocument doc;
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError(line, "malformed section header");
      section = std::string(trim(s.substr(1, s.size() - 2)));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line, "expected key = value");
    const auto key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError(line, "empty key");
    doc.entries_.push_back({section, std::string(key), std::string(trim(s.substr(eq + 1))), line});
  }
  return doc;
}

KvDocument KvDocument::parse_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

KvDocument KvDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open " + path);
  return parse(in);
}

void KvDocument::set(const std::string& section, const std::string& key, std::string value) {
  for (auto& e : entries_) {
    if (e.section == section && e.key == key) {
      e.value = std::move(value);
      return;
    }
  }
  entries_.push_back({section, key, std::move(value), 0});
}

void KvDocument::set(const std::string& section, const std::string& key, double value) {
  set(section, key, format_double(value));
}

const KvEntry* KvDocument::find(std::string_view section, std::string_view key) const {
  for (const auto& e : entries_)
    if (e.section == section && e.key == key) return &e;
  return nullptr;
}

const KvEntry& KvDocument::require(std::string_view section, std::string_view key) const {
  if (const auto* e = find(section, key)) return *e;
  std::string name = section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
  throw ConfigError(0, "missing key " + name);
}

std::string KvDocument::str() const {
  std::ostringstream out;
  std::string section;
  bool first = true;
  for (const auto& e : entries_) {
    if (e.section != section || first) {
      if (!e.section.empty() && (e.section != section || first)) {
        if (!first) out << '\n';
        out << '[' << e.section << "]\n";
      }
      section = e.section;
      first = false;
    }
    out << e.key << " = " << e.value << '\n';
  }
  return out.str();
}

void KvDocument::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << str();
}

TextReader::TextReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

bool TextReader::eof() const { return in_.eof(); }

std::vector<std::string> TextReader::tokens() {
  std::string raw;
  while (std::getline(in_, raw)) {
    ++line_;
    std::istringstream ss(raw);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    if (!out.empty()) return out;
  }
  throw FormatError(FormatError::Kind::Truncated,
                    what_ + ": truncated file (unexpected end after line " + std::to_string(line_) + ")");
}

std::vector<std::string> TextReader::expect(std::string_view keyword) {
  auto toks = tokens();
  if (toks.front() != keyword)
    throw FormatError(FormatError::Kind::Malformed, what_ + ": line " + std::to_string(line_) +
                                                        ": expected '" + std::string(keyword) +
                                                        "', found '" + toks.front() + "'");
  toks.erase(toks.begin());
  return toks;
}

void TextReader::expect_header(std::string_view magic, int version) {
  std::vector<std::string> toks;
  try {
    toks = tokens();
  } catch (const FormatError&) {
    throw FormatError(FormatError::Kind::Truncated, what_ + ": empty file");
  }
  if (toks.size() != 2 || toks[0] != magic)
    throw FormatError(FormatError::Kind::Malformed,
                      what_ + ": not a " + std::string(magic) + " file");
  const long long v = integer(toks[1]);
  if (v != version)
    throw FormatError(FormatError::Kind::Version, what_ + ": unsupported version " + toks[1] +
                                                      " (expected " + std::to_string(version) + ")");
}

double TextReader::number(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw FormatError(FormatError::Kind::NonNumeric, what_ + ": line " + std::to_string(line_) +
                                                         ": non-numeric field '" + tok + "'");
  return v;
}

long long TextReader::integer(const std::string& tok) {
  long long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw FormatError(FormatError::Kind::NonNumeric, what_ + ": line " + std::to_string(line_) +
                                                         ": non-numeric field '" + tok + "'");
  return v;
}

std::vector<double> TextReader::numbers(std::size_t count) {
  std::vector<double> out;
  out.reserve(count);
  while (out.size() < count) {
    for (const auto& tok : tokens()) {
      if (out.size() == count)
        throw FormatError(FormatError::Kind::Malformed,
                          what_ + ": line " + std::to_string(line_) + ": too many values");
      out.push_back(number(tok));
    }
  }
  return out;
}

}  // namespace cfcal
