#pragma once

// Minimal reader for the small comma-separated inputs (profiles, curves, logs).
// No quoting: none of the formats carry commas inside fields.

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ssdfi/failure_model.hpp"

namespace ssdfi::csv {

struct Row {
  std::size_t line = 0;
  std::vector<std::string> cells;
  const std::string& at(std::size_t i) const {
    static const std::string empty;
    return i < cells.size() ? cells[i] : empty;
  }
};

struct Table {
  std::string path;
  std::vector<std::string> header;
  std::vector<Row> rows;

  bool has(const std::string& name) const {
    for (const auto& h : header)
      if (h == name) return true;
    return false;
  }
  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ParseError(path + ": missing column '" + name + "'");
  }
};

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline Table parse(std::istream& in, const std::string& path) {
  Table t;
  t.path = path;
  std::string line;
  std::size_t n = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++n;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (!have_header) {
      t.header = split(s);
      have_header = true;
      continue;
    }
    Row r{n, split(s)};
    if (r.cells.size() != t.header.size())
      throw ParseError(path + ":" + std::to_string(n) + ": expected " +
                       std::to_string(t.header.size()) + " fields, got " +
                       std::to_string(r.cells.size()));
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  return parse(in, path);
}

inline double to_double(const Row& row, std::size_t col, const std::string& path = "") {
  const std::string& s = row.at(col);
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + (path.empty() ? "" : ":") + "line " + std::to_string(row.line) +
                     ": bad number '" + s + "'");
  }
}

}  // namespace ssdfi::csv
