#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "fcsum/error.hpp"

namespace fcsum {

// model name -> (method id -> score)
using ModelScores = std::map<std::string, std::map<std::string, double>>;

struct Breakdown {
  std::map<std::string, std::size_t> wins;               // sole best model
  std::map<std::vector<std::string>, std::size_t> ties;  // sorted tied model set
  std::size_t uncredited = 0;                            // no model above threshold
  std::size_t total = 0;
};

// Per method, among scores strictly above `threshold`, credits the single best
// model or, on exact equality, the tie bucket for the tied set.
inline Breakdown best_model_breakdown(const ModelScores& results, double threshold = 25.0) {
  Breakdown out;
  if (results.empty()) return out;
  const auto& ref_ids = results.begin()->second;
  for (const auto& [model, scores] : results) {
    out.wins[model] = 0;
    if (scores.size() != ref_ids.size()) throw DataError("model '" + model + "' was scored on a different method set");
    for (const auto& [id, _] : ref_ids)
      if (!scores.contains(id)) throw DataError("model '" + model + "' has no score for method '" + id + "'");
  }
  for (const auto& [id, _] : ref_ids) {
    ++out.total;
    double best = threshold;
    std::vector<std::string> leaders;
    for (const auto& [model, scores] : results) {
      const double s = scores.at(id);
      if (s <= threshold) continue;
      if (leaders.empty() || s > best) {
        best = s;
        leaders = {model};
      } else if (s == best) {
        leaders.push_back(model);
      }
    }
    if (leaders.empty()) ++out.uncredited;
    else if (leaders.size() == 1) ++out.wins[leaders.front()];
    else ++out.ties[leaders];  // std::map iteration keeps names sorted
  }
  return out;
}

}  // namespace fcsum
