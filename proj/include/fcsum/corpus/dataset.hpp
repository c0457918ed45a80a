#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "fcsum/corpus/sbt.hpp"
#include "fcsum/error.hpp"
#include "fcsum/rng.hpp"

namespace fcsum {

struct RawMethod {
  std::string id;
  std::string file_id;
  std::string source;
  std::optional<AstNode> ast;
  std::optional<std::string> summary;
};

inline RawMethod raw_method_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  const auto required = [&](const char* key) -> std::string {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw DataError(std::string("missing string field '") + key + "'");
    return it->get<std::string>();
  };
  RawMethod m;
  m.id = required("id");
  m.file_id = required("file_id");
  m.source = required("source");
  if (const auto it = j.find("ast"); it != j.end() && !it->is_null()) m.ast = parse_ast(*it);
  if (const auto it = j.find("summary"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw DataError("field 'summary' is not a string");
    m.summary = it->get<std::string>();
  }
  return m;
}

inline nlohmann::json raw_method_to_json(const RawMethod& m) {
  nlohmann::json j = {{"id", m.id}, {"file_id", m.file_id}, {"source", m.source}};
  if (m.ast) j["ast"] = ast_to_json(*m.ast);
  if (m.summary) j["summary"] = *m.summary;
  return j;
}

// Line-delimited JSON, one method per line; blank lines are skipped.
inline std::vector<RawMethod> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read dataset " + path.string());
  std::vector<RawMethod> out;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(raw_method_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(out.back().id).second) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate method id '" +
                      out.back().id + "'");
    }
  }
  return out;
}

inline void save_dataset(const std::filesystem::path& path, const std::vector<RawMethod>& methods) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset " + path.string());
  for (const auto& m : methods) out << raw_method_to_json(m).dump() << '\n';
}

struct DatasetSplit {
  std::vector<RawMethod> train, val, test;
};

// Seeded split by file: every method of a file lands in the same partition,
// so file context never leaks across partitions.
inline DatasetSplit split_dataset(const std::vector<RawMethod>& methods, std::array<double, 3> ratios,
                                  std::uint64_t seed) {
  double total = 0;
  for (const double r : ratios) {
    if (r < 0 || !std::isfinite(r)) throw DataError("split ratios must be finite and nonnegative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("split ratios sum to " + std::to_string(total) + ", not 1");

  std::vector<std::string> files;
  std::unordered_set<std::string> seen;
  for (const auto& m : methods)
    if (seen.insert(m.file_id).second) files.push_back(m.file_id);

  Rng rng(seed);
  rng.shuffle(std::span<std::string>(files));

  const auto f = static_cast<double>(files.size());
  const auto n_train = std::min(files.size(), static_cast<std::size_t>(std::llround(ratios[0] * f)));
  const auto n_val = std::min(files.size() - n_train, static_cast<std::size_t>(std::llround(ratios[1] * f)));

  std::unordered_map<std::string, int> part;
  for (std::size_t i = 0; i < files.size(); ++i) part[files[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);

  DatasetSplit split;
  for (const auto& m : methods) {
    switch (part.at(m.file_id)) {
      case 0: split.train.push_back(m); break;
      case 1: split.val.push_back(m); break;
      default: split.test.push_back(m); break;
    }
  }
  return split;
}

}  // namespace fcsum
