// text_io.h
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Copyright 2026 The convstruct Authors.
//
// Line-oriented "key value..." text used by the model, codebook and history
// files. Internal to the library.

#ifndef CONVSTRUCT_SRC_TEXT_IO_H_
#define CONVSTRUCT_SRC_TEXT_IO_H_

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "convstruct/error.h"

namespace convstruct::text {

// 17 significant digits round-trip every binary64 value.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) words.push_back(line.substr(start, i - start));
  }
  return words;
}

// Splits into lines, dropping '\r', blank lines and '#' comments. Each entry
// keeps its 1-based line number for diagnostics.
struct Line {
  std::size_t number;
  std::vector<std::string_view> words;
};

inline std::vector<Line> split_lines(std::string_view contents) {
  std::vector<Line> lines;
  std::size_t start = 0;
  std::size_t number = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto words = split_words(line);
    if (words.empty() || words.front().front() == '#') continue;
    lines.push_back({number, std::move(words)});
  }
  return lines;
}

[[noreturn]] inline void fail(std::string_view what, std::size_t line,
                              const std::string& message) {
  throw DataError(std::string(what) + " line " + std::to_string(line) + ": " +
                  message);
}

inline double parse_double(std::string_view word, std::string_view what,
                           std::size_t line) {
  const std::string s(word);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty() || !std::isfinite(v))
    fail(what, line, "bad number '" + s + "'");
  return v;
}

inline long long parse_int(std::string_view word, std::string_view what,
                           std::size_t line) {
  const std::string s(word);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || s.empty() || errno == ERANGE)
    fail(what, line, "bad integer '" + s + "'");
  return v;
}

inline unsigned long long parse_uint(std::string_view word,
                                     std::string_view what, std::size_t line) {
  const std::string s(word);
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || s.empty() || s.front() == '-' ||
      errno == ERANGE)
    fail(what, line, "bad unsigned integer '" + s + "'");
  return v;
}

// Cursor over parsed lines that checks the expected leading keyword.
class LineCursor {
 public:
  LineCursor(std::vector<Line> lines, std::string_view what)
      : lines_(std::move(lines)), what_(what) {}

  bool done() const { return pos_ >= lines_.size(); }
  const Line& peek() const { return lines_[pos_]; }

  const Line& expect(std::string_view key, std::size_t min_words = 2) {
    if (done())
      throw DataError(std::string(what_) + ": unexpected end of file, wanted '" +
                      std::string(key) + "'");
    const Line& line = lines_[pos_++];
    if (line.words.front() != key)
      fail(what_, line.number,
           "expected '" + std::string(key) + "', found '" +
               std::string(line.words.front()) + "'");
    if (line.words.size() < min_words)
      fail(what_, line.number, "missing value for '" + std::string(key) + "'");
    return line;
  }

  std::string_view what() const { return what_; }

 private:
  std::vector<Line> lines_;
  std::size_t pos_ = 0;
  std::string_view what_;
};

}  // namespace convstruct::text

#endif  // CONVSTRUCT_SRC_TEXT_IO_H_
