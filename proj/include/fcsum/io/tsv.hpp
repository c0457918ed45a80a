#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fcsum/error.hpp"

namespace fcsum {

// Two-column `method_id<TAB>text` rows in file order.
using TsvRows = std::vector<std::pair<std::string, std::string>>;

inline TsvRows read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  TsvRows rows;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected method_id<TAB>text");
    }
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rows;
}

inline void write_tsv(const std::filesystem::path& path, const TsvRows& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [id, text] : rows) out << id << '\t' << text << '\n';
}

inline std::map<std::string, std::string> tsv_index(const TsvRows& rows, const std::string& what) {
  std::map<std::string, std::string> out;
  for (const auto& [id, text] : rows)
    if (!out.emplace(id, text).second) throw DataError(what + ": duplicate method id '" + id + "'");
  return out;
}

}  // namespace fcsum
