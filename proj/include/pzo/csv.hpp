#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pzo/errors.hpp"

namespace pzo::csv {

// Minimal reader for the comma-separated files this library writes (no quoting).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::ptrdiff_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
    return -1;
  }

  std::size_t require_column(const std::string& name, const std::string& file) const {
    const auto c = column(name);
    if (c < 0) throw FormatError(file + ": missing column '" + name + "'");
    return static_cast<std::size_t>(c);
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline Table read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size()) throw FormatError(path + ": ragged row");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace pzo::csv
