#pragma once

// Line-oriented helpers shared by the text file formats.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "grm/types.hpp"

namespace grm::text {

inline std::string fixed6(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string exact(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Reads lines with position tracking; '#' lines are provenance and skipped.
class LineReader {
 public:
  LineReader(std::string_view text, std::string what) : text_(text), what_(std::move(what)) {}

  bool next(std::string_view& line) {
    while (pos_ < text_.size()) {
      const std::size_t end = text_.find('\n', pos_);
      line = text_.substr(pos_, end == std::string_view::npos ? text_.size() - pos_ : end - pos_);
      pos_ = end == std::string_view::npos ? text_.size() : end + 1;
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty() && line.front() == '#') continue;
      return true;
    }
    return false;
  }

  std::string_view expect_line(const char* what) {
    std::string_view line;
    if (!next(line)) throw error(std::string("unexpected end of file, expected ") + what);
    return line;
  }

  ParseError error(const std::string& msg) const {
    return ParseError(what_ + " line " + std::to_string(line_no_) + ": " + msg);
  }

  template <class T>
  T parse_number(std::string_view token, const char* field) const {
    T value{};
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) {
      throw error(std::string("bad ") + field + " '" + std::string(token) + "'");
    }
    return value;
  }

  int line_no() const { return line_no_; }

 private:
  std::string_view text_;
  std::string what_;
  std::size_t pos_ = 0;
  int line_no_ = 0;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << contents;
  if (!out) throw IoError("write failed: " + path);
}

inline std::string provenance_block(const std::string& provenance) {
  std::string out;
  std::istringstream in(provenance);
  for (std::string line; std::getline(in, line);) out += "# " + line + "\n";
  return out;
}

}  // namespace grm::text
