#pragma once

// CSV and file helpers shared by the readers and writers.

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "triage/errors.hpp"

namespace triage::io {

namespace fs = std::filesystem;

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(s[i])) ++i;
  return s.substr(i);
}

inline double parse_number(const std::string& cell, const fs::path& file, std::size_t line) {
  double v = 0.0;
  const std::string t = trim(cell);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ParseError(file.string(), line, "expected a number, got '" + cell + "'");
  return v;
}

inline std::ifstream open_in(const fs::path& p, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(p, mode);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

inline std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, mode | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

}  // namespace triage::io
