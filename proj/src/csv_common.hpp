#ifndef MAFF_SRC_CSV_COMMON_HPP
#define MAFF_SRC_CSV_COMMON_HPP

#include <cstdlib>
#include <istream>
#include <string>
#include <vector>

#include "maff/errors.hpp"

namespace maff::csv {

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

inline std::string trim(const std::string &s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r'))
    --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_fields(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

// Reads a whole CSV stream: strips a UTF-8 BOM, skips blank lines and lines
// starting with '#', checks the header, and returns the data rows.
inline std::vector<Row> read_rows(std::istream &in,
                                  const std::string &expected_header) {
  std::vector<Row> rows;
  std::string line;
  std::size_t line_number = 0;
  bool saw_header = false;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_number;
    if (first_content && line.size() >= 3 && line[0] == '\xEF' &&
        line[1] == '\xBB' && line[2] == '\xBF')
      line.erase(0, 3);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    first_content = false;
    if (!saw_header) {
      if (t != expected_header)
        throw ParseError("expected header '" + expected_header + "', got '" +
                             t + "'",
                         line_number);
      saw_header = true;
      continue;
    }
    rows.push_back(Row{split_fields(t), line_number});
  }
  if (!saw_header)
    throw ParseError("missing header '" + expected_header + "'");
  return rows;
}

inline double parse_number(const std::string &field, std::size_t line,
                           const char *what) {
  const char *begin = field.c_str();
  char *end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ParseError(std::string("could not parse ") + what + " '" + field +
                         "'",
                     line);
  return v;
}

}  // namespace maff::csv

#endif
